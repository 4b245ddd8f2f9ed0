//! File output helpers.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

/// Writes `contents`, creating parent directories as needed.
pub fn write_file(path: &Path, contents: &str) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.display().to_string(),
        source,
    };
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err)?;
        }
    }
    fs::write(path, contents).map_err(io_err)
}

pub fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Nonzero entries as `row,col,value`, row-major.
pub fn triplets_csv(m: &DenseMatrix) -> String {
    let mut out = String::from("row,col,value\n");
    for (i, j, v) in m.triplets() {
        let _ = writeln!(out, "{i},{j},{v:.16e}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_skip_zeros() {
        let m = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, -0.5]]);
        assert_eq!(
            triplets_csv(&m),
            "row,col,value\n0,0,1.0000000000000000e0\n1,1,-5.0000000000000000e-1\n"
        );
    }

    #[test]
    fn creates_parent_directories() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/c.txt");
        write_file(&path, "x").unwrap();
        assert_eq!(read_file(&path).unwrap(), "x");
    }
}
