//! Command-line plumbing: file formats, generators, run configuration and
//! reports.

pub mod check;
pub mod generate;
pub mod io;
pub mod report;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{MerspError, Result};
use crate::instance::{build_mersp, CovarianceInstance, MerspInstance};
use crate::nlp::{NlpOptions, Strategy};
use crate::simplex::SolveOptions;

pub use check::{check, Diagnostics};
pub use generate::{generate, GenKind};
pub use io::{read_covariance, write_covariance};
pub use report::{run_bounds, sweep, GapReport, GapRow, SweepConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// Complementary when `C ≻ 0`, original otherwise.
    #[default]
    Auto,
    Original,
    Complementary,
}

impl Orientation {
    /// Builds the instance in the requested orientation.
    pub fn resolve(self, cov: &CovarianceInstance, s: usize) -> Result<MerspInstance> {
        let original = build_mersp(cov, s)?;
        match self {
            Orientation::Original => Ok(original),
            Orientation::Complementary => original.complement(),
            Orientation::Auto if cov.is_pd() => original.complement(),
            Orientation::Auto => Ok(original),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiagScaleMode {
    #[default]
    None,
    MinLamDiff,
    MinLamC2,
    Optimize,
    BestOfThree,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub matrix_path: Option<PathBuf>,
    /// Subset size; 0 means unset.
    pub s: usize,
    pub strategies: Vec<Strategy>,
    pub orientation: Orientation,
    /// Also report the ψ-augmented bounds.
    pub augment: bool,
    pub spectral: bool,
    pub diag_scale: DiagScaleMode,
    pub gamma_grid: usize,
    pub seed: u64,
    pub gap_tol: f64,
    pub max_iter: usize,
    /// Enumerate all subsets for the exact optimum (guarded).
    pub exact: bool,
    pub format: OutputFormat,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            matrix_path: None,
            s: 0,
            strategies: Strategy::ALL.to_vec(),
            orientation: Orientation::Auto,
            augment: true,
            spectral: true,
            diag_scale: DiagScaleMode::None,
            gamma_grid: 50,
            seed: 0,
            gap_tol: 1e-6,
            max_iter: 5000,
            exact: false,
            format: OutputFormat::Csv,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| MerspError::Io(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| MerspError::Parse { line: e.line(), msg: e.to_string() })
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.gamma_grid < 1 {
            return Err(MerspError::InvalidArgument("gamma_grid must be at least 1".into()));
        }
        if self.s == 0 || self.s >= n {
            return Err(MerspError::InvalidArgument(format!("need 0 < s < n = {n}, got s = {}", self.s)));
        }
        if !(self.gap_tol > 0.0) || self.max_iter == 0 {
            return Err(MerspError::InvalidArgument("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn nlp_options(&self) -> NlpOptions {
        NlpOptions {
            gamma_grid: self.gamma_grid,
            solve: SolveOptions { gap_tol: self.gap_tol, max_iter: self.max_iter, ..SolveOptions::default() },
        }
    }
}
