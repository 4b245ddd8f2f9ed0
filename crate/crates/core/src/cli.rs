//! Command-line front end.
//!
//! ```text
//! wavetriple <validate|spectrum|simulate|poincare|helmholtz|study> --config <path> [--out <dir>] [--sizes 64,128,256]
//! ```
//!
//! Every subcommand writes its CSV files into the output directory (`--out`,
//! else `[output] directory`) and prints a short summary. Any violated
//! invariant is an error and yields exit status 1.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::assembly::{assemble_constrained_pencil, OperatorPencil};
use crate::config::{parse_config, ModelConfig};
use crate::error::{Error, Result};
use crate::helmholtz::{decompose, l2_norm, orthogonality_residual, CellField};
use crate::io::{read_file, triplets_csv, write_file};
use crate::mesh::Mesh;
use crate::semigroup::{initial_state, perturbation_matrices, simulate};
use crate::spectral::{compute_spectrum, eigvec_boundary_check, poincare_constant, refinement_study, study_csv, BALANCE_TOL};

/// Abscissa above which a dissipative model is reported as broken.
pub const ABSCISSA_TOL: f64 = 1e-8;

#[derive(Debug, Parser)]
#[command(name = "wavetriple", version, about = "Damped wave equation: spectra, time evolution and stability checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Parse the config, build the mesh and write the assembled matrices.
    Validate(RunArgs),
    /// Eigenvalues of the generator, written to eigenvalues.csv.
    Spectrum(RunArgs),
    /// Cayley time stepping, written to energy.csv.
    Simulate(RunArgs),
    /// Poincaré constant of the mesh and Robin coefficient.
    Poincare(RunArgs),
    /// Weighted Helmholtz decomposition of the [helmholtz] field.
    Helmholtz(RunArgs),
    /// Spectra over several resolutions, written to study.csv.
    Study(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Model configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] directory`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Resolutions for `study`, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub sizes: Option<Vec<usize>>,
}

impl Command {
    pub fn args(&self) -> &RunArgs {
        match self {
            Command::Validate(a)
            | Command::Spectrum(a)
            | Command::Simulate(a)
            | Command::Poincare(a)
            | Command::Helmholtz(a)
            | Command::Study(a) => a,
        }
    }
}

/// Assembled pencil for a config, including the lower-order terms.
pub fn build_pencil(config: &ModelConfig) -> Result<(Mesh, OperatorPencil)> {
    let (mesh, coeffs) = config.build_model()?;
    let mut pencil = assemble_constrained_pencil(&mesh, &coeffs)?;
    if config.has_perturbation() {
        let (ma, mb) = perturbation_matrices(&mesh, &coeffs);
        pencil = pencil.with_perturbation(&ma, &mb);
    }
    Ok((mesh, pencil))
}

/// Runs one subcommand and returns its summary text.
pub fn run(command: &Command) -> Result<String> {
    let args = command.args();
    let text = read_file(&args.config)?;
    let config = parse_config(&text)?;
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&config.output.directory));
    match command {
        Command::Validate(_) => validate(&config, &out),
        Command::Spectrum(_) => spectrum(&config, &out),
        Command::Simulate(_) => run_simulation(&config, &out),
        Command::Poincare(_) => poincare(&config, &out),
        Command::Helmholtz(_) => helmholtz(&config, &out),
        Command::Study(_) => study(&config, &out, args.sizes.as_deref()),
    }
}

fn validate(config: &ModelConfig, out: &Path) -> Result<String> {
    let (mesh, pencil) = build_pencil(config)?;
    write_file(&out.join("mesh.txt"), &mesh.to_text())?;
    write_file(&out.join("gram.csv"), &triplets_csv(&pencil.gram))?;
    write_file(&out.join("dynamics.csv"), &triplets_csv(&pencil.dynamics))?;
    let mut s = String::new();
    let _ = writeln!(s, "mesh: {} nodes, {} cells, h = {:.6e}", mesh.n_nodes(), mesh.n_cells(), mesh.h());
    let _ = writeln!(s, "free nodes: {}, trace nodes: {}", pencil.n_free(), pencil.dofs.n_trace());
    let _ = writeln!(s, "damped: {}", pencil.flags.damped);
    Ok(s)
}

fn spectrum(config: &ModelConfig, out: &Path) -> Result<String> {
    let (_, pencil) = build_pencil(config)?;
    let report = compute_spectrum(&pencil, config.spectral.want_vectors)?;
    report.write_eigenvalues_csv(&out.join("eigenvalues.csv"))?;
    let mut s = String::new();
    let _ = writeln!(s, "eigenvalues: {}", report.len());
    let _ = writeln!(s, "abscissa: {:.6e}", report.abscissa);
    let _ = writeln!(s, "gap: {:.6e}", report.gap);
    let _ = writeln!(s, "min |lambda|: {:.6e}", report.min_modulus());
    if !pencil.perturbed && report.abscissa > ABSCISSA_TOL {
        return Err(Error::PositiveAbscissa {
            abscissa: report.abscissa,
        });
    }
    if report.eigenvectors.is_some() {
        let checks = eigvec_boundary_check(&report, config.spectral.axis_tol)?;
        let balance = checks.iter().map(|c| c.balance).fold(0.0, f64::max);
        let on_axis = checks.iter().filter(|c| c.on_axis).count();
        let r2 = checks.iter().filter(|c| c.on_axis).map(|c| c.r2).fold(0.0, f64::max);
        let _ = writeln!(s, "max eigenpair residual: {:.3e}", report.max_residual());
        let _ = writeln!(s, "max balance defect: {balance:.3e}");
        let _ = writeln!(s, "near-axis pairs: {on_axis}, max damped trace: {r2:.3e}");
        if let Some(k) = report.condition {
            let _ = writeln!(s, "eigenbasis condition: {k:.3e}");
        }
        if !pencil.perturbed && balance > BALANCE_TOL {
            return Err(Error::InvariantViolated {
                what: "eigenpair dissipation balance",
                value: balance,
                tol: BALANCE_TOL,
            });
        }
    }
    Ok(s)
}

fn run_simulation(config: &ModelConfig, out: &Path) -> Result<String> {
    let sim = config.simulation.as_ref().ok_or(Error::MissingSection("simulation"))?;
    let (mesh, pencil) = build_pencil(config)?;
    let x0 = initial_state(&mesh, &pencil, |p| sim.w0.eval(p), |p| sim.w1.eval(p))?;
    let traj = simulate(&pencil, &x0, sim.t_end, sim.dt)?;
    traj.write_energy_csv(&out.join("energy.csv"))?;
    let first = traj.xnorm[0];
    let last = *traj.xnorm.last().expect("trajectory holds the initial state");
    let mut s = String::new();
    let _ = writeln!(s, "steps: {}", traj.len() - 1);
    let _ = writeln!(s, "energy: {:.6e} -> {:.6e}", traj.energy[0], traj.energy.last().unwrap());
    let _ = writeln!(s, "norm: {first:.6e} -> {last:.6e}");
    Ok(s)
}

fn poincare(config: &ModelConfig, out: &Path) -> Result<String> {
    let (mesh, coeffs) = config.build_model()?;
    let c = poincare_constant(&mesh, &coeffs)?;
    write_file(&out.join("poincare.csv"), &format!("h,constant\n{:.16e},{c:.16e}\n", mesh.h()))?;
    Ok(format!("poincare constant: {c:.10e}\n"))
}

fn helmholtz(config: &ModelConfig, out: &Path) -> Result<String> {
    let spec = config.helmholtz.as_ref().ok_or(Error::MissingSection("helmholtz"))?;
    let (mesh, coeffs) = config.build_model()?;
    let field: CellField = (0..mesh.n_cells())
        .map(|c| {
            let p = mesh.cell_midpoint(c);
            let fx = spec.field[0].eval(p);
            let fy = spec.field.get(1).map_or(0.0, |e| e.eval(p));
            [fx, fy]
        })
        .collect();
    let d = decompose(&mesh, &coeffs.modulus, &field)?;
    let mut csv = String::from("cell,fx,fy,grad_x,grad_y,divfree_x,divfree_y\n");
    for c in 0..mesh.n_cells() {
        let (f, g, k) = (d.field[c], d.gradient_part[c], d.divfree_part[c]);
        let _ = writeln!(
            csv,
            "{c},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            f[0], f[1], g[0], g[1], k[0], k[1]
        );
    }
    write_file(&out.join("helmholtz.csv"), &csv)?;
    let residual = orthogonality_residual(&mesh, &d.divfree_part);
    let scale = l2_norm(&mesh, &field);
    let mut s = String::new();
    let _ = writeln!(s, "|f|: {scale:.6e}");
    let _ = writeln!(s, "|grad part|: {:.6e}", l2_norm(&mesh, &d.gradient_part));
    let _ = writeln!(s, "|divfree part|: {:.6e}", l2_norm(&mesh, &d.divfree_part));
    let _ = writeln!(s, "orthogonality residual: {residual:.3e}");
    Ok(s)
}

fn study(config: &ModelConfig, out: &Path, sizes: Option<&[usize]>) -> Result<String> {
    let n = config.resolution();
    let sizes: Vec<usize> = sizes
        .map(<[usize]>::to_vec)
        .or_else(|| config.spectral.sizes.clone())
        .unwrap_or_else(|| vec![n, 2 * n, 4 * n]);
    let rows = refinement_study(|k| build_pencil(&config.with_resolution(k)).map(|(_, p)| p), &sizes, false)?;
    write_file(&out.join("study.csv"), &study_csv(&rows))?;
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(
            s,
            "N = {:5}  h = {:.4e}  abscissa = {:.6e}  gap = {:.6e}  |extreme| = {:.4e}",
            r.n,
            r.h,
            r.abscissa,
            r.gap,
            r.extreme.norm()
        );
    }
    Ok(s)
}

/// Parses `args`, runs the subcommand and maps failure to exit status 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli.command) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(Error::Config(errs)) => {
            let path = cli.command.args().config.display().to_string();
            for d in &errs.0 {
                eprintln!("{path}: {d}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
