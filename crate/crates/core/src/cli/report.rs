//! Bound/gap orchestration and CSV/JSON reports.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cli::generate::{generate, GenKind};
use crate::cli::{DiagScaleMode, RunConfig};
use crate::diagscale::{self, DiagonalScaling, PsiMethod, ScalingOptions};
use crate::error::{MerspError, Result};
use crate::instance::{build_mersp, CovarianceInstance, MerspInstance};
use crate::nlp::{self, Strategy};
use crate::search::{self, SubsetSolution};
use crate::spectral::{self, SpectralOptions};

/// One bound, in the column order of the CSV output.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapRow {
    pub instance_id: String,
    pub n: usize,
    pub t: usize,
    pub s: usize,
    pub bound: String,
    pub strategy: Option<String>,
    pub psi: Option<f64>,
    pub gamma: Option<f64>,
    pub psi_source: Option<String>,
    pub upper: f64,
    pub fw_gap: Option<f64>,
    pub lower: f64,
    pub gap: f64,
    pub delta: Option<f64>,
    pub wall_ms: f64,
    pub x_hat: Option<Vec<f64>>,
    pub eta_hat: Option<Vec<f64>>,
    pub psi_vec: Option<Vec<f64>>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    instance_id: &'a str,
    n: usize,
    t: usize,
    s: usize,
    bound: &'a str,
    strategy: Option<&'a str>,
    psi: Option<f64>,
    gamma: Option<f64>,
    psi_source: Option<&'a str>,
    upper: f64,
    fw_gap: Option<f64>,
    lower: f64,
    gap: f64,
    delta: Option<f64>,
    wall_ms: f64,
}

impl<'a> From<&'a GapRow> for CsvRow<'a> {
    fn from(r: &'a GapRow) -> Self {
        CsvRow {
            instance_id: &r.instance_id,
            n: r.n,
            t: r.t,
            s: r.s,
            bound: &r.bound,
            strategy: r.strategy.as_deref(),
            psi: r.psi,
            gamma: r.gamma,
            psi_source: r.psi_source.as_deref(),
            upper: r.upper,
            fw_gap: r.fw_gap,
            lower: r.lower,
            gap: r.gap,
            delta: r.delta,
            wall_ms: r.wall_ms,
        }
    }
}

pub const CSV_COLUMNS: [&str; 15] = [
    "instance_id", "n", "t", "s", "bound", "strategy", "psi", "gamma", "psi_source", "upper", "fw_gap",
    "lower", "gap", "delta", "wall_ms",
];

/// A bound that could not be computed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Omission {
    pub bound: String,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GapReport {
    pub instance_id: String,
    pub n: usize,
    pub t: usize,
    pub s: usize,
    /// Orientation the NLP bounds were computed in.
    pub orientation: String,
    pub heuristic: SubsetSolution,
    pub exact: Option<SubsetSolution>,
    pub rows: Vec<GapRow>,
    /// Bounds not defined for this instance.
    pub skipped: Vec<Omission>,
    /// Bounds that failed numerically.
    pub failures: Vec<Omission>,
}

impl GapReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() { 0 } else { 4 }
    }
}

pub fn write_csv<W: Write>(rows: &[GapRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_COLUMNS).map_err(csv_err)?;
    for r in rows {
        w.serialize(CsvRow::from(r)).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string(rows: &[GapRow]) -> Result<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn csv_err(e: csv::Error) -> MerspError {
    MerspError::Io(e.to_string())
}

#[derive(Clone, Debug)]
enum Job {
    Spectral,
    Nlp { strategy: Strategy, psi: f64, label: &'static str },
    Scaled { strategy: Strategy, psi: f64, label: &'static str, mode: DiagScaleMode },
}

struct Computed {
    upper: f64,
    strategy: Option<Strategy>,
    psi: Option<f64>,
    gamma: Option<f64>,
    psi_source: Option<String>,
    fw_gap: Option<f64>,
    delta: Option<f64>,
    x_hat: Option<Vec<f64>>,
    eta_hat: Option<Vec<f64>>,
    psi_vec: Option<Vec<f64>>,
}

fn nlp_computed(strategy: Strategy, b: nlp::BoundResult, scaling: Option<DiagonalScaling>) -> Computed {
    Computed {
        upper: b.value,
        strategy: Some(strategy),
        psi: Some(b.params.psi),
        gamma: Some(b.params.gamma),
        psi_source: Some(scaling.as_ref().map_or("none", |s| s.source.label()).to_string()),
        fw_gap: Some(b.fw_gap),
        delta: None,
        x_hat: Some(b.x_hat),
        eta_hat: None,
        psi_vec: scaling.map(|s| s.psi_vec),
    }
}

fn run_job(job: &Job, original: &MerspInstance, inst: &MerspInstance, cfg: &RunConfig) -> Result<Computed> {
    let nlp_opts = cfg.nlp_options();
    match *job {
        Job::Spectral => {
            let r = spectral::minimize_spectral(original, &SpectralOptions { seed: cfg.seed, ..Default::default() })?;
            Ok(Computed {
                upper: r.value,
                strategy: None,
                psi: None,
                gamma: None,
                psi_source: None,
                fw_gap: None,
                delta: Some(r.delta),
                x_hat: None,
                eta_hat: Some(r.eta_hat),
                psi_vec: None,
            })
        }
        Job::Nlp { strategy, psi, .. } => {
            let b = nlp::nlp_bound_with_psi(inst, strategy, psi, &nlp_opts, None)?;
            Ok(nlp_computed(strategy, b, None))
        }
        Job::Scaled { strategy, psi, mode, .. } => {
            let sopts = ScalingOptions { nlp: nlp_opts, ..Default::default() };
            let (scaling, b) = match mode {
                DiagScaleMode::BestOfThree => diagscale::best_of_three(inst, strategy, psi, &sopts)?,
                DiagScaleMode::Optimize => {
                    diagscale::optimize_psi_nlp_id(inst, psi, &DiagonalScaling::unit(inst.n()), &sopts)?
                }
                DiagScaleMode::MinLamDiff | DiagScaleMode::MinLamC2 => {
                    let method =
                        if mode == DiagScaleMode::MinLamDiff { PsiMethod::MinLamDiff } else { PsiMethod::MinLamC2 };
                    let sc = diagscale::select_psi(inst, method, psi)?;
                    let scaled = inst.apply_diag_scaling(&sc.psi_vec)?;
                    (sc, nlp::nlp_bound_with_psi(&scaled, strategy, psi, &nlp_opts, None)?)
                }
                DiagScaleMode::None => unreachable!("no job is scheduled without scaling"),
            };
            Ok(nlp_computed(strategy, b, Some(scaling)))
        }
    }
}

fn job_label(job: &Job, suffix: &str) -> String {
    match job {
        Job::Spectral => "spectral".to_string(),
        Job::Nlp { label, .. } | Job::Scaled { label, .. } => format!("{label}[{suffix}]"),
    }
}

fn job_name(job: &Job, suffix: &str) -> String {
    match job {
        Job::Spectral => job_label(job, suffix),
        Job::Nlp { strategy, .. } | Job::Scaled { strategy, .. } => {
            format!("{}-{}", job_label(job, suffix), strategy.label())
        }
    }
}

/// Computes every requested bound for one covariance matrix.
pub fn run_bounds(cov: &CovarianceInstance, instance_id: &str, cfg: &RunConfig) -> Result<GapReport> {
    cfg.validate(cov.n())?;
    let original = build_mersp(cov, cfg.s)?;
    let inst = cfg.orientation.resolve(cov, cfg.s)?;
    let suffix = if inst.is_complemented() { "comp" } else { "orig" };

    let heuristic = search::heuristic(&inst)?;
    let exact = if cfg.exact { Some(search::brute_force(&inst)?) } else { None };
    let lower = exact.as_ref().map_or(heuristic.value, |e| e.value);

    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    if cfg.spectral {
        jobs.push(Job::Spectral);
    }
    let plain = nlp::augmentation_psi(&inst, false);
    let aug = if cfg.augment { Some(nlp::augmentation_psi(&inst, true)) } else { None };
    for &strategy in &cfg.strategies {
        match &plain {
            Ok(psi) => jobs.push(Job::Nlp { strategy, psi: *psi, label: "nlp" }),
            Err(e) => skipped.push(Omission { bound: format!("nlp[{suffix}]-{}", strategy.label()), reason: e.to_string() }),
        }
        match &aug {
            Some(Ok(psi)) => jobs.push(Job::Nlp { strategy, psi: *psi, label: "nlp_aug" }),
            Some(Err(e)) => skipped.push(Omission {
                bound: format!("nlp_aug[{suffix}]-{}", strategy.label()),
                reason: e.to_string(),
            }),
            None => {}
        }
        if cfg.diag_scale != DiagScaleMode::None {
            let (psi, label) = match (&aug, &plain) {
                (Some(Ok(p)), _) => (Some(*p), "nlp_aug_scaled"),
                (None, Ok(p)) => (Some(*p), "nlp_scaled"),
                _ => (None, "nlp_scaled"),
            };
            let optimize_only_id = cfg.diag_scale == DiagScaleMode::Optimize && strategy != Strategy::Identity;
            match psi {
                Some(psi) if !optimize_only_id => {
                    jobs.push(Job::Scaled { strategy, psi, label, mode: cfg.diag_scale })
                }
                Some(_) => skipped.push(Omission {
                    bound: format!("{label}[{suffix}]-{}", strategy.label()),
                    reason: "Ψ optimization applies to the Identity strategy only".into(),
                }),
                None => skipped.push(Omission {
                    bound: format!("{label}[{suffix}]-{}", strategy.label()),
                    reason: "no admissible ψ".into(),
                }),
            }
        }
    }

    let outcomes: Vec<(Job, f64, Result<Computed>)> = jobs
        .into_par_iter()
        .map(|job| {
            let start = Instant::now();
            let r = run_job(&job, &original, &inst, cfg);
            (job, start.elapsed().as_secs_f64() * 1e3, r)
        })
        .collect();

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (job, ms, r) in outcomes {
        match r {
            Ok(c) => rows.push(GapRow {
                instance_id: instance_id.to_string(),
                n: cov.n(),
                t: cov.t(),
                s: cfg.s,
                bound: job_label(&job, suffix),
                strategy: c.strategy.map(|s| s.label().to_string()),
                psi: c.psi,
                gamma: c.gamma,
                psi_source: c.psi_source,
                upper: c.upper,
                fw_gap: c.fw_gap,
                lower,
                gap: c.upper - lower,
                delta: c.delta,
                wall_ms: ms,
                x_hat: c.x_hat,
                eta_hat: c.eta_hat,
                psi_vec: c.psi_vec,
            }),
            Err(e @ MerspError::NumericalFailure(_)) => {
                failures.push(Omission { bound: job_name(&job, suffix), reason: e.to_string() })
            }
            Err(e) => skipped.push(Omission { bound: job_name(&job, suffix), reason: e.to_string() }),
        }
    }

    Ok(GapReport {
        instance_id: instance_id.to_string(),
        n: cov.n(),
        t: cov.t(),
        s: cfg.s,
        orientation: suffix.to_string(),
        heuristic,
        exact,
        rows,
        skipped,
        failures,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub kind: GenKind,
    pub n: usize,
    pub t_values: Vec<usize>,
    pub instances: usize,
    pub rank: Option<usize>,
    pub seed: u64,
    pub run: RunConfig,
}

/// Seed of instance `i` at target size `t`.
pub fn sweep_seed(base: u64, t: usize, i: usize) -> u64 {
    base.wrapping_mul(1_000_003).wrapping_add(1000 * t as u64 + i as u64)
}

/// Runs every sweep point; results are ordered by `t`, then instance.
pub fn sweep(cfg: &SweepConfig) -> Result<Vec<(usize, Vec<GapReport>)>> {
    let points: Vec<(usize, usize)> =
        cfg.t_values.iter().flat_map(|&t| (0..cfg.instances).map(move |i| (t, i))).collect();
    let reports: Vec<Result<GapReport>> = points
        .par_iter()
        .map(|&(t, i)| {
            let seed = sweep_seed(cfg.seed, t, i);
            let cov = generate(cfg.kind, cfg.n, t, cfg.rank, seed)?;
            let id = format!("{}-n{}-t{}-{}", cfg.kind.label(), cfg.n, t, seed);
            run_bounds(&cov, &id, &cfg.run)
        })
        .collect();
    let mut out: Vec<(usize, Vec<GapReport>)> = cfg.t_values.iter().map(|&t| (t, Vec::new())).collect();
    for ((t, _), r) in points.into_iter().zip(reports) {
        let slot = out.iter_mut().find(|(tt, _)| *tt == t).expect("t was listed");
        slot.1.push(r?);
    }
    Ok(out)
}

/// Writes `sweep_t{t}.csv` per target size; returns the written paths.
pub fn write_sweep(results: &[(usize, Vec<GapReport>)], dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::new();
    for (t, reports) in results {
        let rows: Vec<GapRow> = reports.iter().flat_map(|r| r.rows.iter().cloned()).collect();
        let path = dir.join(format!("sweep_t{t}.csv"));
        let file = std::fs::File::create(&path)?;
        write_csv(&rows, std::io::BufWriter::new(file))?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::io::parse_covariance;
    use crate::linalg::SymMatrix;

    fn block_diagonal() -> CovarianceInstance {
        // C[N,T] = 0: every conditional equals the marginal
        let c = SymMatrix::from_rows(&[
            vec![2.0, 0.3, 0.1, 0.0, 0.0],
            vec![0.3, 1.0, 0.2, 0.0, 0.0],
            vec![0.1, 0.2, 1.5, 0.0, 0.0],
            vec![0.0, 0.0, 0.0, 1.0, 0.4],
            vec![0.0, 0.0, 0.0, 0.4, 1.0],
        ])
        .unwrap();
        CovarianceInstance::new(c, 3, 2).unwrap()
    }

    #[test]
    fn zero_cross_covariance_gaps() {
        let cfg = RunConfig { s: 2, gamma_grid: 5, diag_scale: DiagScaleMode::BestOfThree, ..Default::default() };
        let rep = run_bounds(&block_diagonal(), "blk", &cfg).unwrap();
        assert!(rep.failures.is_empty(), "{:?}", rep.failures);
        assert!(rep.heuristic.value.abs() < 1e-12);
        assert!(!rep.rows.is_empty());
        for r in &rep.rows {
            assert!(r.upper >= -2e-6, "{}: {}", r.bound, r.upper);
            assert!(r.gap >= -2e-6);
        }
    }

    #[test]
    fn csv_header_order() {
        let cfg = RunConfig { s: 1, gamma_grid: 3, strategies: vec![Strategy::Identity], ..Default::default() };
        let cov = parse_covariance("2 1\n2 0.3 0.4\n0.3 1 0.2\n0.4 0.2 1\n").unwrap();
        let rep = run_bounds(&cov, "tiny", &cfg).unwrap();
        let text = csv_string(&rep.rows).unwrap();
        assert_eq!(text.lines().next().unwrap(), CSV_COLUMNS.join(","));
        assert_eq!(text.lines().count(), rep.rows.len() + 1);
        let bounds: Vec<&str> = rep.rows.iter().map(|r| r.bound.as_str()).collect();
        assert_eq!(bounds, vec!["spectral", "nlp[comp]", "nlp_aug[comp]"]);
    }

    #[test]
    fn ill_posed_orientation_is_an_error() {
        let cov = parse_covariance("2 1\n1 0 1\n0 1 1\n1 1 2\n").unwrap();
        let cfg = RunConfig {
            s: 1,
            orientation: crate::cli::Orientation::Complementary,
            ..Default::default()
        };
        assert_eq!(run_bounds(&cov, "ex", &cfg).unwrap_err().exit_code(), 3);
    }
}
