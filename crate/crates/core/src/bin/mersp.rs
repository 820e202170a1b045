use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mersp::cli::report::{self, SweepConfig};
use mersp::cli::{self, DiagScaleMode, GenKind, Orientation, OutputFormat, RunConfig};
use mersp::nlp::Strategy;
use mersp::{search, MerspError, Result};

#[derive(Parser)]
#[command(name = "mersp", version, about = "Bounds for maximum-entropy remote sampling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Upper bounds and gaps against the heuristic lower bound.
    Bound {
        matrix: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Greedy + local-search lower bound.
    Lower {
        matrix: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum)]
        orientation: Option<OrientationArg>,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Exact optimum by enumeration (small instances only).
    Exact {
        matrix: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long, value_enum)]
        orientation: Option<OrientationArg>,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Rank, condition (7) and ψ* diagnostics.
    Check {
        matrix: PathBuf,
        #[command(flatten)]
        out: OutFlags,
    },
    /// Write a seeded synthetic covariance matrix.
    Gen {
        #[arg(long, value_enum, default_value = "pd")]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
        #[arg(long)]
        rank: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Bounds over a range of t on generated instances; one CSV per t.
    Sweep {
        #[arg(long, value_enum, default_value = "pd")]
        kind: KindArg,
        #[arg(long)]
        n: usize,
        #[arg(long = "t-min", default_value_t = 1)]
        t_min: usize,
        #[arg(long = "t-max")]
        t_max: usize,
        #[arg(long, default_value_t = 1)]
        instances: usize,
        #[arg(long)]
        rank: Option<usize>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        run: RunFlags,
    },
}

#[derive(Args)]
struct RunFlags {
    /// Number of observables to select.
    #[arg(long)]
    s: Option<usize>,
    /// JSON file with RunConfig fields; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// NLP strategies, comma separated.
    #[arg(long, value_delimiter = ',')]
    strategy: Option<Vec<StrategyArg>>,
    #[arg(long, value_enum)]
    orientation: Option<OrientationArg>,
    /// Also report ψ-augmented bounds (default).
    #[arg(long, overrides_with = "no_augment")]
    augment: bool,
    #[arg(long)]
    no_augment: bool,
    /// Skip the spectral bound.
    #[arg(long)]
    no_spectral: bool,
    /// Diagonal scaling applied before the NLP bounds.
    #[arg(long, value_enum)]
    diag_scale: Option<DiagScaleArg>,
    /// Number of γ values tried per strategy.
    #[arg(long)]
    gamma_grid: Option<usize>,
    /// Frank-Wolfe gap at which the solver stops.
    #[arg(long)]
    gap_tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Enumerate subsets and use the optimum as the lower bound.
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutFlags {
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum StrategyArg {
    Id,
    Di,
    Tr,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrientationArg {
    Auto,
    Original,
    Complementary,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum DiagScaleArg {
    None,
    MinLamDiff,
    MinLamC2,
    Optimize,
    BestOfThree,
}

#[derive(Clone, Copy, ValueEnum)]
#[value(rename_all = "snake_case")]
enum KindArg {
    Pd,
    SingularCond7,
    SingularMaxpsi,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<OrientationArg> for Orientation {
    fn from(o: OrientationArg) -> Self {
        match o {
            OrientationArg::Auto => Orientation::Auto,
            OrientationArg::Original => Orientation::Original,
            OrientationArg::Complementary => Orientation::Complementary,
        }
    }
}

impl From<KindArg> for GenKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Pd => GenKind::Pd,
            KindArg::SingularCond7 => GenKind::SingularCond7,
            KindArg::SingularMaxpsi => GenKind::SingularMaxpsi,
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => OutputFormat::Csv,
            FormatArg::Json => OutputFormat::Json,
        }
    }
}

impl RunFlags {
    fn into_config(self, matrix: Option<PathBuf>) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        if matrix.is_some() {
            cfg.matrix_path = matrix;
        }
        if let Some(s) = self.s {
            cfg.s = s;
        }
        if let Some(list) = self.strategy {
            cfg.strategies = list
                .into_iter()
                .map(|s| match s {
                    StrategyArg::Id => Strategy::Identity,
                    StrategyArg::Di => Strategy::Diagonal,
                    StrategyArg::Tr => Strategy::Trace,
                })
                .collect();
        }
        if let Some(o) = self.orientation {
            cfg.orientation = o.into();
        }
        if self.augment {
            cfg.augment = true;
        }
        if self.no_augment {
            cfg.augment = false;
        }
        if self.no_spectral {
            cfg.spectral = false;
        }
        if let Some(d) = self.diag_scale {
            cfg.diag_scale = match d {
                DiagScaleArg::None => DiagScaleMode::None,
                DiagScaleArg::MinLamDiff => DiagScaleMode::MinLamDiff,
                DiagScaleArg::MinLamC2 => DiagScaleMode::MinLamC2,
                DiagScaleArg::Optimize => DiagScaleMode::Optimize,
                DiagScaleArg::BestOfThree => DiagScaleMode::BestOfThree,
            };
        }
        if let Some(g) = self.gamma_grid {
            cfg.gamma_grid = g;
        }
        if let Some(g) = self.gap_tol {
            cfg.gap_tol = g;
        }
        if let Some(m) = self.max_iter {
            cfg.max_iter = m;
        }
        if self.exact {
            cfg.exact = true;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: serde::Serialize>(value: &T, out: &mut dyn Write) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| MerspError::Io(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn instance_id(path: &Path) -> String {
    path.file_stem().map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned())
}

fn subset_command(matrix: &Path, s: usize, orientation: Option<OrientationArg>, out: OutFlags, exact: bool) -> Result<i32> {
    let cov = cli::read_covariance(matrix)?;
    let inst = orientation.map_or(Orientation::Auto, Into::into).resolve(&cov, s)?;
    let sol = if exact { search::brute_force(&inst)? } else { search::heuristic(&inst)? };
    let mut w = open_out(out.out.as_deref())?;
    match out.format.map_or(OutputFormat::Csv, Into::into) {
        OutputFormat::Json => write_json(&sol, &mut *w)?,
        OutputFormat::Csv => {
            let subset: Vec<String> = sol.subset.iter().map(ToString::to_string).collect();
            writeln!(w, "method,value,subset")?;
            writeln!(w, "{},{},{}", serde_json::to_value(sol.method).unwrap().as_str().unwrap(), sol.value, subset.join(" "))?;
        }
    }
    w.flush()?;
    Ok(0)
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Bound { matrix, run, out } => {
            let mut cfg = run.into_config(Some(matrix.clone()))?;
            if let Some(f) = out.format {
                cfg.format = f.into();
            }
            let cov = cli::read_covariance(&matrix)?;
            let rep = cli::run_bounds(&cov, &instance_id(&matrix), &cfg)?;
            let mut w = open_out(out.out.as_deref())?;
            match cfg.format {
                OutputFormat::Json => write_json(&rep, &mut *w)?,
                OutputFormat::Csv => report::write_csv(&rep.rows, &mut *w)?,
            }
            w.flush()?;
            for f in &rep.failures {
                eprintln!("bound {} failed: {}", f.bound, f.reason);
            }
            Ok(rep.exit_code())
        }
        Command::Lower { matrix, s, orientation, out } => subset_command(&matrix, s, orientation, out, false),
        Command::Exact { matrix, s, orientation, out } => subset_command(&matrix, s, orientation, out, true),
        Command::Check { matrix, out } => {
            let d = cli::check(&cli::read_covariance(&matrix)?)?;
            let mut w = open_out(out.out.as_deref())?;
            match out.format {
                Some(FormatArg::Json) => write_json(&d, &mut *w)?,
                _ => write!(w, "{d}")?,
            }
            w.flush()?;
            Ok(0)
        }
        Command::Gen { kind, n, t, rank, seed, out } => {
            let cov = cli::generate(kind.into(), n, t, rank, seed)?;
            match out {
                Some(p) => cli::write_covariance(&cov, &p)?,
                None => print!("{}", cli::io::format_covariance(&cov)),
            }
            Ok(0)
        }
        Command::Sweep { kind, n, t_min, t_max, instances, rank, out, run } => {
            if t_min == 0 || t_max < t_min {
                return Err(MerspError::InvalidArgument("need 1 <= t-min <= t-max".into()));
            }
            let cfg = run.into_config(None)?;
            let sweep = SweepConfig {
                kind: kind.into(),
                n,
                t_values: (t_min..=t_max).collect(),
                instances,
                rank,
                seed: cfg.seed,
                run: cfg,
            };
            let results = cli::sweep(&sweep)?;
            for p in report::write_sweep(&results, &out)? {
                println!("{}", p.display());
            }
            let failures: Vec<_> = results.iter().flat_map(|(_, r)| r.iter().flat_map(|r| &r.failures)).collect();
            for f in &failures {
                eprintln!("bound {} failed: {}", f.bound, f.reason);
            }
            Ok(if failures.is_empty() { 0 } else { 4 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
