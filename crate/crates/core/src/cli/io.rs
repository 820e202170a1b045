//! Plain-text covariance files.
//!
//! Line 1 holds `n t`; the next `n + t` lines hold the rows of `C`. The last
//! `t` indices form `T`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{MerspError, Result};
use crate::instance::CovarianceInstance;
use crate::linalg::SymMatrix;

/// Largest tolerated `|C_ij − C_ji|` relative to `max |C_ij|`.
pub const ASYMMETRY_TOL: f64 = 1e-6;

pub fn read_covariance(path: &Path) -> Result<CovarianceInstance> {
    let text = fs::read_to_string(path).map_err(|e| MerspError::Io(format!("{}: {e}", path.display())))?;
    parse_covariance(&text)
}

pub fn parse_covariance(text: &str) -> Result<CovarianceInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or(MerspError::Parse { line: 1, msg: "empty file".into() })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|w| w.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| MerspError::Parse { line: hline, msg: format!("bad header: {e}") })?;
    let [n, t] = dims[..] else {
        return Err(MerspError::Parse { line: hline, msg: "header must be two integers `n t`".into() });
    };
    let order = n + t;
    if order == 0 {
        return Err(MerspError::Parse { line: hline, msg: "n + t must be positive".into() });
    }

    let mut m = DMatrix::<f64>::zeros(order, order);
    for row in 0..order {
        let (lno, line) = lines.next().ok_or(MerspError::Parse {
            line: hline + row + 1,
            msg: format!("expected {order} matrix rows, found {row}"),
        })?;
        let vals: Vec<f64> = line
            .split_whitespace()
            .map(|w| w.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| MerspError::Parse { line: lno, msg: format!("bad number: {e}") })?;
        if vals.len() != order {
            return Err(MerspError::Parse {
                line: lno,
                msg: format!("expected {order} entries, found {}", vals.len()),
            });
        }
        if let Some(v) = vals.iter().find(|v| !v.is_finite()) {
            return Err(MerspError::Parse { line: lno, msg: format!("non-finite entry {v}") });
        }
        for (col, v) in vals.into_iter().enumerate() {
            m[(row, col)] = v;
        }
    }
    if let Some((lno, _)) = lines.next() {
        return Err(MerspError::Parse { line: lno, msg: "trailing content after matrix".into() });
    }

    let scale = m.amax();
    let asym = (&m - m.transpose()).amax();
    if asym > ASYMMETRY_TOL * scale {
        return Err(MerspError::InvalidArgument(format!(
            "matrix is not symmetric (max asymmetry {asym:.3e})"
        )));
    }
    CovarianceInstance::new(SymMatrix::new(m)?, n, t)
        .map_err(|e| MerspError::InvalidArgument(format!("invalid covariance: {e}")))
}

/// Writes with 17 significant digits so reading back is lossless.
pub fn format_covariance(cov: &CovarianceInstance) -> String {
    let c = cov.matrix();
    let order = c.order();
    let mut out = format!("{} {}\n", cov.n(), cov.t());
    for i in 0..order {
        let row: Vec<String> = (0..order).map(|j| format!("{:.16e}", c.get(i, j))).collect();
        writeln!(out, "{}", row.join(" ")).expect("writing to a String");
    }
    out
}

pub fn write_covariance(cov: &CovarianceInstance, path: &Path) -> Result<()> {
    fs::write(path, format_covariance(cov)).map_err(|e| MerspError::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_three_by_three_example() {
        let cov = parse_covariance("2 1\n1 0 1\n0 1 1\n1 1 2\n").unwrap();
        assert_eq!((cov.n(), cov.t()), (2, 1));
        assert_eq!(cov.matrix().get(2, 2), 2.0);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(parse_covariance("2 1\n"), Err(MerspError::Parse { line: 2, .. })));
        assert!(matches!(parse_covariance("2 1\n1 0 1\n0 x 1\n1 1 2\n"), Err(MerspError::Parse { line: 3, .. })));
        assert!(matches!(parse_covariance("2 1\n1 0\n0 1 1\n1 1 2\n"), Err(MerspError::Parse { line: 2, .. })));
        assert!(matches!(parse_covariance("two 1\n"), Err(MerspError::Parse { line: 1, .. })));
        assert!(matches!(parse_covariance(""), Err(MerspError::Parse { line: 1, .. })));
    }

    #[test]
    fn rejects_asymmetry_and_singular_tt() {
        let err = parse_covariance("2 1\n1 0 1\n0 1 1\n1.1 1 2\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = parse_covariance("2 1\n1 0 0\n0 1 0\n0 0 0\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn tolerates_tiny_asymmetry() {
        let cov = parse_covariance("1 1\n2 0.5\n0.5000000001 1\n").unwrap_err();
        // n = 1 is rejected by the instance, not by the symmetry check
        assert!(matches!(cov, MerspError::InvalidArgument(ref m) if m.contains("invalid covariance")));
        let cov = parse_covariance("2 1\n2 0.5 0\n0.5000000001 1 0\n0 0 1\n").unwrap();
        assert!((cov.matrix().get(0, 1) - 0.50000000005).abs() < 1e-15);
    }

    #[test]
    fn round_trip_is_lossless() {
        let cov = parse_covariance("2 1\n1.0000000000000002 0.1 0.3333333333333333\n0.1 1 0.2\n0.3333333333333333 0.2 2\n")
            .unwrap();
        let back = parse_covariance(&format_covariance(&cov)).unwrap();
        assert_eq!(back.matrix(), cov.matrix());
    }
}
