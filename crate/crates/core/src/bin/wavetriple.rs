use std::process::ExitCode;

fn main() -> ExitCode {
    wavetriple::cli::main_with_args(std::env::args_os())
}
