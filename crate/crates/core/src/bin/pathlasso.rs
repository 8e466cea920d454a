//! Command-line front end for the sparse mediation toolkit.
//!
//! Six subcommands cover the whole pipeline:
//!
//! * `simulate` — draw synthetic replicate datasets with known truth,
//! * `fit` — fit one penalty configuration to a dataset,
//! * `path` — fit a descending tuning path,
//! * `cv` — cross-validate the tuning grid and emit the selected pathways,
//! * `compare` — benchmark every method on simulated replicates, or measure
//!   selection stability between two datasets when no truth is available,
//! * `refit` — refit a selection without shrinkage and bootstrap confidence
//!   intervals.
//!
//! Each command resolves its parameters from flags first, then an optional
//! `--config` JSON file, then built-in defaults, and writes the resolved
//! values to `config.json` in the output directory — so any run can be
//! reproduced with `--config <output>/config.json`. All randomness derives
//! from `--seed` through fixed per-replicate streams and results are written
//! in a fixed order, which makes every output file byte-identical across
//! repeat runs and across `--threads` settings.
//!
//! Exit codes: 0 on success (warnings such as non-converged grid points go
//! to stderr), 2 when an input cannot be read or parsed, 3 when a parameter
//! or the requested operation is invalid.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use pathlasso::admm::{self, PathResult, SolverOptions};
use pathlasso::baselines::{self, BkPathwayResult};
use pathlasso::dataset::{self, MediationDataset, StandardizedDataset};
use pathlasso::eval;
use pathlasso::model::PenaltySpec;
use pathlasso::refit::{self, BootstrapOptions};
use pathlasso::seed;
use pathlasso::simgen::{self, SimulationDesign, TreatmentKind};
use pathlasso::{Error, Result};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}", err);
            ExitCode::from(exit_code(&err))
        }
    }
}

/// 2 = an input could not be read or parsed; 3 = a parameter or the
/// requested operation is invalid.
fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::InvalidData(_) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::Path(args) => cmd_path(args),
        Command::Cv(args) => cmd_cv(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Refit(args) => cmd_refit(args),
    }
}

#[derive(Parser)]
#[command(
    name = "pathlasso",
    version,
    about = "Sparse mediation pathway selection",
    long_about = "Estimates, selects, and benchmarks treatment-to-outcome pathways through \
                  high-dimensional mediators. Outputs are deterministic given --seed: repeat \
                  runs and different --threads settings produce byte-identical files."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate synthetic replicate datasets with known truth
    Simulate(SimulateArgs),
    /// Fit one penalty configuration to a dataset
    Fit(FitArgs),
    /// Fit a descending lambda path
    Path(PathArgs),
    /// Cross-validate the tuning grid and emit the selected pathways
    Cv(CvArgs),
    /// Benchmark all methods on replicates, or check two-dataset stability
    Compare(CompareArgs),
    /// Refit selected pathways and bootstrap confidence intervals
    Refit(RefitArgs),
}

/// Flags every subcommand understands.
#[derive(Debug, Args)]
struct Shared {
    /// Input dataset CSV (fit/path/cv/refit) or replicate directory (compare)
    #[arg(long)]
    input: Option<PathBuf>,

    /// Directory all outputs are written into (created if needed)
    #[arg(long)]
    output_dir: Option<PathBuf>,

    /// Master seed; every random stream is derived from it [default: 0]
    #[arg(long)]
    seed: Option<u64>,

    /// Worker threads for replicate/fold parallelism (0 = one per core)
    #[arg(long)]
    threads: Option<usize>,

    /// JSON file supplying defaults for any flag of this command (flags win)
    #[arg(long)]
    config: Option<PathBuf>,
}

/// Solver controls shared by every fitting command.
#[derive(Debug, Args)]
struct SolverArgs {
    /// Step parameter of the solver [default: 1]
    #[arg(long)]
    rho: Option<f64>,

    /// Sweep cap per grid point [default: 10000]
    #[arg(long)]
    max_iter: Option<usize>,

    /// Constraint-violation tolerance [default: 1e-6]
    #[arg(long)]
    tol_primal: Option<f64>,

    /// Primal-change tolerance [default: 1e-8]
    #[arg(long)]
    tol_change: Option<f64>,
}

impl SolverArgs {
    fn resolve(&self, file: &FileConfig) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            rho: self.rho.or(file.rho).unwrap_or(d.rho),
            max_iter: self.max_iter.or(file.max_iter).unwrap_or(d.max_iter),
            tol_primal: self.tol_primal.or(file.tol_primal).unwrap_or(d.tol_primal),
            tol_change: self.tol_change.or(file.tol_change).unwrap_or(d.tol_change),
        }
    }
}

/// Lambda-grid controls shared by path, cv, and compare.
#[derive(Debug, Args)]
struct GridArgs {
    /// Smallest lambda on the log grid [default: 1e-6]
    #[arg(long)]
    lambda_min: Option<f64>,

    /// Largest lambda on the log grid [default: 100]
    #[arg(long)]
    lambda_max: Option<f64>,

    /// Number of grid points [default: 50]
    #[arg(long)]
    points: Option<usize>,

    /// Quadratic-guard strength phi [default: 2]
    #[arg(long)]
    phi: Option<f64>,
}

impl GridArgs {
    fn resolve(&self, file: &FileConfig) -> (f64, f64, usize, f64) {
        (
            self.lambda_min.or(file.lambda_min).unwrap_or(1e-6),
            self.lambda_max.or(file.lambda_max).unwrap_or(1e2),
            self.points.or(file.points).unwrap_or(50),
            self.phi.or(file.phi).unwrap_or(2.0),
        )
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    shared: Shared,

    /// Observations per replicate [default: 100]
    #[arg(long)]
    n: Option<usize>,

    /// Number of candidate mediators [default: 50]
    #[arg(long)]
    k: Option<usize>,

    /// Mediator-error correlation of the paired covariance [default: 0]
    #[arg(long)]
    rho_m: Option<f64>,

    /// Number of replicate datasets [default: 1]
    #[arg(long)]
    reps: Option<usize>,

    /// Outcome error standard deviation [default: 1]
    #[arg(long)]
    sigma2: Option<f64>,

    /// Draw a balanced binary (+/-1) treatment instead of a Gaussian one
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    binary: Option<bool>,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    shared: Shared,

    /// Pathway-penalty weight lambda [default: 0.1]
    #[arg(long)]
    lambda: Option<f64>,

    /// Plain-lasso weight omega [default: 0]
    #[arg(long)]
    omega: Option<f64>,

    /// Quadratic-guard strength phi [default: 2]
    #[arg(long)]
    phi: Option<f64>,

    /// Selection cutoff on |A_j B_j| [default: 1e-3]
    #[arg(long)]
    cutoff: Option<f64>,

    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct PathArgs {
    #[command(flatten)]
    shared: Shared,

    #[command(flatten)]
    grid: GridArgs,

    /// How omega follows lambda: zero, 0.1lambda, lambda, fixed [default: 0.1lambda]
    #[arg(long)]
    omega_rule: Option<String>,

    /// Omega value when --omega-rule is fixed [default: 0]
    #[arg(long)]
    omega: Option<f64>,

    /// Selection cutoff on |A_j B_j| [default: 1e-3]
    #[arg(long)]
    cutoff: Option<f64>,

    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct CvArgs {
    #[command(flatten)]
    shared: Shared,

    #[command(flatten)]
    grid: GridArgs,

    /// How omega follows lambda: zero, 0.1lambda, lambda, fixed [default: 0.1lambda]
    #[arg(long)]
    omega_rule: Option<String>,

    /// Omega value when --omega-rule is fixed [default: 0]
    #[arg(long)]
    omega: Option<f64>,

    /// Cross-validation folds [default: 10]
    #[arg(long)]
    folds: Option<usize>,

    /// Selection cutoff on |A_j B_j| [default: 1e-3]
    #[arg(long)]
    cutoff: Option<f64>,

    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    shared: Shared,

    #[command(flatten)]
    grid: GridArgs,

    /// Cross-validation folds for per-method tuning [default: 10]
    #[arg(long)]
    folds: Option<usize>,

    /// Selection cutoff on |A_j B_j| [default: 1e-3]
    #[arg(long)]
    cutoff: Option<f64>,

    /// BH false-discovery rate for the per-mediator baseline [default: 0.05]
    #[arg(long)]
    q: Option<f64>,

    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct RefitArgs {
    #[command(flatten)]
    shared: Shared,

    /// JSON selection file (as written by `cv`): selected_indices or selected names
    #[arg(long)]
    selected: Option<PathBuf>,

    /// Bootstrap resamples [default: 500]
    #[arg(long)]
    resamples: Option<usize>,

    /// Two-sided confidence level [default: 0.95]
    #[arg(long)]
    level: Option<f64>,
}

/// Every key a `--config` file may set. One flat superset across commands so
/// a `config.json` written by one run feeds straight back into `--config`;
/// unknown keys are rejected to catch typos.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    command: Option<String>,
    input: Option<String>,
    output_dir: Option<String>,
    selected: Option<String>,
    seed: Option<u64>,
    threads: Option<usize>,
    n: Option<usize>,
    k: Option<usize>,
    rho_m: Option<f64>,
    reps: Option<usize>,
    sigma2: Option<f64>,
    binary: Option<bool>,
    lambda: Option<f64>,
    omega: Option<f64>,
    phi: Option<f64>,
    lambda_min: Option<f64>,
    lambda_max: Option<f64>,
    points: Option<usize>,
    omega_rule: Option<String>,
    folds: Option<usize>,
    cutoff: Option<f64>,
    q: Option<f64>,
    resamples: Option<usize>,
    level: Option<f64>,
    rho: Option<f64>,
    max_iter: Option<usize>,
    tol_primal: Option<f64>,
    tol_change: Option<f64>,
}

impl Shared {
    fn file_config(&self, command: &str) -> Result<FileConfig> {
        let file = match &self.config {
            None => FileConfig::default(),
            Some(path) => {
                let text = fs::read_to_string(path)?;
                serde_json::from_str(&text)?
            }
        };
        if let Some(c) = &file.command {
            if c != command {
                return Err(Error::InvalidParameter(format!(
                    "config file was written by '{}' but the current command is '{}'",
                    c, command
                )));
            }
        }
        Ok(file)
    }

    fn seed(&self, file: &FileConfig) -> u64 {
        self.seed.or(file.seed).unwrap_or(0)
    }

    fn input(&self, file: &FileConfig) -> Result<PathBuf> {
        self.input
            .clone()
            .or_else(|| file.input.as_ref().map(PathBuf::from))
            .ok_or_else(|| Error::InvalidParameter("--input is required".into()))
    }

    fn output_dir(&self, file: &FileConfig) -> Result<PathBuf> {
        self.output_dir
            .clone()
            .or_else(|| file.output_dir.as_ref().map(PathBuf::from))
            .ok_or_else(|| Error::InvalidParameter("--output-dir is required".into()))
    }

    /// Builds the global thread pool. The thread count changes wall time
    /// only, never output bytes, so it is not recorded in `config.json`.
    fn init_threads(&self, file: &FileConfig) -> Result<()> {
        let threads = self.threads.or(file.threads).unwrap_or(0);
        if threads == 0 {
            return Ok(());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {}", e)))
    }
}

/// How omega follows lambda along a tuning path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OmegaRule {
    Zero,
    TenthLambda,
    Lambda,
    Fixed,
}

impl OmegaRule {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "0.1lambda" => Ok(Self::TenthLambda),
            "lambda" => Ok(Self::Lambda),
            "fixed" => Ok(Self::Fixed),
            other => Err(Error::InvalidParameter(format!(
                "unknown omega rule '{}' (expected zero, 0.1lambda, lambda, or fixed)",
                other
            ))),
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            Self::Zero => "zero",
            Self::TenthLambda => "0.1lambda",
            Self::Lambda => "lambda",
            Self::Fixed => "fixed",
        }
    }

    fn omega_for(self, lambda: f64, fixed: f64) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::TenthLambda => 0.1 * lambda,
            Self::Lambda => lambda,
            Self::Fixed => fixed,
        }
    }
}

/// Pathway-lasso specs over a descending lambda grid under one omega rule.
fn specs_for(grid: &[f64], k: usize, phi: f64, rule: OmegaRule, fixed_omega: f64) -> Vec<PenaltySpec> {
    grid.iter()
        .map(|&l| PenaltySpec::with_unit_weights(k, l, phi, rule.omega_for(l, fixed_omega)))
        .collect()
}

fn fmt(v: f64) -> String {
    format!("{}", v)
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

/// Writes pretty JSON with a trailing newline. Objects serialize with sorted
/// keys, so the bytes are stable.
fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn read_dataset(path: &Path) -> Result<(MediationDataset, StandardizedDataset)> {
    let data = MediationDataset::from_csv_path(path)?;
    let std = dataset::standardize(&data)?;
    Ok((data, std))
}

fn warn_nonconverged(count: usize, total: usize, max_iter: usize) {
    if count > 0 {
        eprintln!(
            "warning: {} of {} grid point(s) did not converge within {} sweeps \
             (see the converged column; results are still written)",
            count, total, max_iter
        );
    }
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct SimulateConfig {
    command: &'static str,
    output_dir: String,
    seed: u64,
    n: usize,
    k: usize,
    rho_m: f64,
    reps: usize,
    sigma2: f64,
    binary: bool,
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let file = args.shared.file_config("simulate")?;
    let out = args.shared.output_dir(&file)?;
    let cfg = SimulateConfig {
        command: "simulate",
        output_dir: display(&out),
        seed: args.shared.seed(&file),
        n: args.n.or(file.n).unwrap_or(100),
        k: args.k.or(file.k).unwrap_or(50),
        rho_m: args.rho_m.or(file.rho_m).unwrap_or(0.0),
        reps: args.reps.or(file.reps).unwrap_or(1),
        sigma2: args.sigma2.or(file.sigma2).unwrap_or(1.0),
        binary: args.binary.or(file.binary).unwrap_or(false),
    };

    // Reject bad parameters before touching the output directory.
    if cfg.reps == 0 {
        return Err(Error::InvalidParameter("need at least one replicate".into()));
    }
    if !(cfg.rho_m.abs() < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mediator-error correlation must satisfy |rho_m| < 1, got {}",
            cfg.rho_m
        )));
    }
    if cfg.n < 3 {
        return Err(Error::InvalidParameter(format!("need n >= 3, got {}", cfg.n)));
    }
    if cfg.k < 1 {
        return Err(Error::InvalidParameter("need k >= 1".into()));
    }
    if !(cfg.sigma2 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "sigma2 must be positive, got {}",
            cfg.sigma2
        )));
    }
    args.shared.init_threads(&file)?;

    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    let results: Vec<Result<_>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let rep_seed = seed::derive_seed(cfg.seed, rep as u64);
            let mut design = SimulationDesign::default_dgp(cfg.n, cfg.k, cfg.rho_m, rep_seed);
            design.sigma2 = cfg.sigma2;
            if cfg.binary {
                design.treatment = TreatmentKind::BinaryBalanced;
            }
            simgen::gen_proposed(&design)
        })
        .collect();
    for (rep, result) in results.into_iter().enumerate() {
        let (data, truth) = result?;
        data.to_csv_path(out.join(format!("data_rep{:03}.csv", rep)))?;
        write_json(
            &out.join(format!("truth_rep{:03}.json", rep)),
            &serde_json::to_value(&truth)?,
        )?;
    }
    println!("wrote {} replicate(s) to {}", cfg.reps, out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct FitConfig {
    command: &'static str,
    input: String,
    output_dir: String,
    seed: u64,
    lambda: f64,
    omega: f64,
    phi: f64,
    cutoff: f64,
    rho: f64,
    max_iter: usize,
    tol_primal: f64,
    tol_change: f64,
}

fn cmd_fit(args: FitArgs) -> Result<()> {
    let file = args.shared.file_config("fit")?;
    let input = args.shared.input(&file)?;
    let out = args.shared.output_dir(&file)?;
    let opts = args.solver.resolve(&file);
    let cfg = FitConfig {
        command: "fit",
        input: display(&input),
        output_dir: display(&out),
        seed: args.shared.seed(&file),
        lambda: args.lambda.or(file.lambda).unwrap_or(0.1),
        omega: args.omega.or(file.omega).unwrap_or(0.0),
        phi: args.phi.or(file.phi).unwrap_or(2.0),
        cutoff: args.cutoff.or(file.cutoff).unwrap_or(1e-3),
        rho: opts.rho,
        max_iter: opts.max_iter,
        tol_primal: opts.tol_primal,
        tol_change: opts.tol_change,
    };
    args.shared.init_threads(&file)?;

    let (_, std) = read_dataset(&input)?;
    let spec = PenaltySpec::with_unit_weights(std.k(), cfg.lambda, cfg.phi, cfg.omega);
    spec.validate(std.k())?;
    opts.validate()?;

    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    let fit = admm::fit(&std, &spec, &opts, None)?;
    warn_nonconverged(usize::from(!fit.converged), 1, opts.max_iter);
    let support = fit
        .pathway_effects()
        .iter()
        .filter(|v| v.abs() > cfg.cutoff)
        .count();
    println!(
        "fit lambda={} omega={}: converged={} iterations={} support={}",
        fmt(cfg.lambda),
        fmt(cfg.omega),
        fit.converged,
        fit.iterations,
        support
    );
    // A lambda = 0 fit is the plain two-stage lasso; tag it honestly.
    let method = if cfg.lambda == 0.0 { "TSLasso" } else { "PathLasso" };
    let path = PathResult {
        method: method.to_string(),
        fits: vec![fit],
    };
    path.write_csv(create(&out.join("fit.csv"))?)?;
    write_json(&out.join("fit.json"), &path.summary_json(cfg.cutoff))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// path
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct PathConfig {
    command: &'static str,
    input: String,
    output_dir: String,
    seed: u64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    omega_rule: String,
    omega: f64,
    phi: f64,
    cutoff: f64,
    rho: f64,
    max_iter: usize,
    tol_primal: f64,
    tol_change: f64,
}

fn resolve_path_config(
    command: &'static str,
    shared: &Shared,
    grid: &GridArgs,
    omega_rule: &Option<String>,
    omega: Option<f64>,
    cutoff: Option<f64>,
    solver: &SolverArgs,
    file: &FileConfig,
) -> Result<(PathConfig, OmegaRule, SolverOptions)> {
    let input = shared.input(file)?;
    let out = shared.output_dir(file)?;
    let opts = solver.resolve(file);
    let (lambda_min, lambda_max, points, phi) = grid.resolve(file);
    let rule_name = omega_rule
        .clone()
        .or_else(|| file.omega_rule.clone())
        .unwrap_or_else(|| "0.1lambda".to_string());
    let rule = OmegaRule::parse(&rule_name)?;
    let cfg = PathConfig {
        command,
        input: display(&input),
        output_dir: display(&out),
        seed: shared.seed(file),
        lambda_min,
        lambda_max,
        points,
        omega_rule: rule.as_str().to_string(),
        omega: omega.or(file.omega).unwrap_or(0.0),
        phi,
        cutoff: cutoff.or(file.cutoff).unwrap_or(1e-3),
        rho: opts.rho,
        max_iter: opts.max_iter,
        tol_primal: opts.tol_primal,
        tol_change: opts.tol_change,
    };
    Ok((cfg, rule, opts))
}

fn cmd_path(args: PathArgs) -> Result<()> {
    let file = args.shared.file_config("path")?;
    let (cfg, rule, opts) = resolve_path_config(
        "path",
        &args.shared,
        &args.grid,
        &args.omega_rule,
        args.omega,
        args.cutoff,
        &args.solver,
        &file,
    )?;
    args.shared.init_threads(&file)?;

    let grid = admm::log_grid(cfg.lambda_min, cfg.lambda_max, cfg.points)?;
    let (_, std) = read_dataset(Path::new(&cfg.input))?;
    let specs = specs_for(&grid, std.k(), cfg.phi, rule, cfg.omega);
    opts.validate()?;
    specs[0].validate(std.k())?;

    let out = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    let path = admm::fit_path(&std, &specs, &opts)?;
    let bad = path.fits.iter().filter(|f| !f.converged).count();
    warn_nonconverged(bad, path.fits.len(), opts.max_iter);
    path.write_csv(create(&out.join("path.csv"))?)?;
    write_json(&out.join("path.json"), &path.summary_json(cfg.cutoff))?;
    println!(
        "fitted {} grid point(s) (omega rule: {}) to {}",
        path.fits.len(),
        cfg.omega_rule,
        out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// cv
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CvConfig {
    command: &'static str,
    input: String,
    output_dir: String,
    seed: u64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    omega_rule: String,
    omega: f64,
    phi: f64,
    folds: usize,
    cutoff: f64,
    rho: f64,
    max_iter: usize,
    tol_primal: f64,
    tol_change: f64,
}

fn cmd_cv(args: CvArgs) -> Result<()> {
    let file = args.shared.file_config("cv")?;
    let (path_cfg, rule, opts) = resolve_path_config(
        "cv",
        &args.shared,
        &args.grid,
        &args.omega_rule,
        args.omega,
        args.cutoff,
        &args.solver,
        &file,
    )?;
    let folds = args.folds.or(file.folds).unwrap_or(10);
    let cfg = CvConfig {
        command: "cv",
        input: path_cfg.input,
        output_dir: path_cfg.output_dir,
        seed: path_cfg.seed,
        lambda_min: path_cfg.lambda_min,
        lambda_max: path_cfg.lambda_max,
        points: path_cfg.points,
        omega_rule: path_cfg.omega_rule,
        omega: path_cfg.omega,
        phi: path_cfg.phi,
        folds,
        cutoff: path_cfg.cutoff,
        rho: path_cfg.rho,
        max_iter: path_cfg.max_iter,
        tol_primal: path_cfg.tol_primal,
        tol_change: path_cfg.tol_change,
    };
    args.shared.init_threads(&file)?;

    let grid = admm::log_grid(cfg.lambda_min, cfg.lambda_max, cfg.points)?;
    let (data, std) = read_dataset(Path::new(&cfg.input))?;
    let specs = specs_for(&grid, std.k(), cfg.phi, rule, cfg.omega);
    opts.validate()?;
    specs[0].validate(std.k())?;
    if cfg.folds < 2 || cfg.folds > std.n() {
        return Err(Error::InvalidParameter(format!(
            "need 2 <= folds <= n, got folds = {} with n = {}",
            cfg.folds,
            std.n()
        )));
    }

    let out = PathBuf::from(&cfg.output_dir);
    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    let report = eval::cross_validate(&std, &specs, cfg.folds, cfg.seed, &opts)?;
    let path = admm::fit_path(&std, &specs, &opts)?;
    let bad = path.fits.iter().filter(|f| !f.converged).count();
    warn_nonconverged(bad, path.fits.len(), opts.max_iter);

    let chosen = &path.fits[report.chosen];
    let ab = chosen.pathway_effects();
    let sel = eval::select_pathways(&ab, cfg.cutoff).selected;
    let names = data.mediator_names();
    let selected_names: Vec<String> = sel.iter().map(|&j| names[j].clone()).collect();
    let selected_ab: Vec<f64> = sel.iter().map(|&j| ab[j]).collect();

    write_json(&out.join("cv.json"), &report.to_json())?;
    path.write_csv(create(&out.join("path.csv"))?)?;
    write_json(
        &out.join("selected.json"),
        &json!({
            "input": cfg.input,
            "cutoff": cfg.cutoff,
            "lambda": chosen.spec.lambda,
            "omega": chosen.spec.omega,
            "phi": chosen.spec.phi,
            "selected_indices": sel.iter().copied().collect::<Vec<usize>>(),
            "selected": selected_names,
            "ab": selected_ab,
        }),
    )?;
    println!(
        "chosen lambda={} omega={} ({} of {} grid points); selected {} pathway(s)",
        fmt(chosen.spec.lambda),
        fmt(chosen.spec.omega),
        report.chosen + 1,
        path.fits.len(),
        sel.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// refit
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct RefitConfig {
    command: &'static str,
    input: String,
    selected: String,
    output_dir: String,
    seed: u64,
    resamples: usize,
    level: f64,
}

/// The selection schema `cv` writes; indices win over names when both are
/// present. Extra keys (tuning values, estimates) are ignored.
#[derive(Debug, Deserialize)]
struct SelectedFile {
    #[serde(default)]
    selected_indices: Option<Vec<usize>>,
    #[serde(default)]
    selected: Option<Vec<String>>,
}

fn read_selection(path: &Path, names: &[String]) -> Result<BTreeSet<usize>> {
    let text = fs::read_to_string(path)?;
    let parsed: SelectedFile = serde_json::from_str(&text)?;
    if let Some(indices) = parsed.selected_indices {
        return Ok(indices.into_iter().collect());
    }
    let Some(listed) = parsed.selected else {
        return Err(Error::InvalidData(
            "selection file has neither 'selected_indices' nor 'selected'".into(),
        ));
    };
    let mut set = BTreeSet::new();
    for name in listed {
        match names.iter().position(|n| *n == name) {
            Some(j) => {
                set.insert(j);
            }
            None => {
                return Err(Error::InvalidParameter(format!(
                    "selected mediator '{}' is not a column of the dataset",
                    name
                )))
            }
        }
    }
    Ok(set)
}

fn cmd_refit(args: RefitArgs) -> Result<()> {
    let file = args.shared.file_config("refit")?;
    let input = args.shared.input(&file)?;
    let out = args.shared.output_dir(&file)?;
    let selected_path = args
        .selected
        .clone()
        .or_else(|| file.selected.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::InvalidParameter("--selected is required".into()))?;
    let cfg = RefitConfig {
        command: "refit",
        input: display(&input),
        selected: display(&selected_path),
        output_dir: display(&out),
        seed: args.shared.seed(&file),
        resamples: args.resamples.or(file.resamples).unwrap_or(500),
        level: args.level.or(file.level).unwrap_or(0.95),
    };
    args.shared.init_threads(&file)?;

    let (data, std) = read_dataset(&input)?;
    let names = data.mediator_names();
    let selection = read_selection(&selected_path, &names)?;
    if let Some(&j) = selection.iter().next_back() {
        if j >= std.k() {
            return Err(Error::InvalidParameter(format!(
                "selected pathway {} out of range for k = {}",
                j,
                std.k()
            )));
        }
    }
    if selection.len() > std.n().saturating_sub(2) {
        return Err(Error::InvalidParameter(format!(
            "cannot refit {} pathways with n = {} (need |selected| <= n - 2)",
            selection.len(),
            std.n()
        )));
    }

    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    let opts = BootstrapOptions {
        resamples: cfg.resamples,
        level: cfg.level,
        seed: cfg.seed,
    };
    let mut report = refit::bootstrap_ci(&std, &selection, &opts)?;

    // The bootstrap works on the standardized scale; products and the total
    // effect all carry the same positive factor back to raw units, so the
    // intervals, significance flags, and mediated proportions are unchanged
    // in meaning.
    let factor = std.r_scale() / std.z_scale();
    report.total_effect *= factor;
    for iv in &mut report.intervals {
        iv.ab_refit *= factor;
        iv.ci_low *= factor;
        iv.ci_high *= factor;
    }

    report.write_csv(&names, create(&out.join("refit.csv"))?)?;
    write_json(&out.join("refit.json"), &report.summary_json(&names))?;
    let significant = report.intervals.iter().filter(|iv| iv.significant).count();
    println!(
        "refit {} pathway(s), {} significant at level {}; total effect = {}",
        report.intervals.len(),
        significant,
        fmt(cfg.level),
        fmt(report.total_effect)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize)]
struct CompareConfig {
    command: &'static str,
    input: String,
    output_dir: String,
    seed: u64,
    lambda_min: f64,
    lambda_max: f64,
    points: usize,
    phi: f64,
    folds: usize,
    cutoff: f64,
    q: f64,
    rho: f64,
    max_iter: usize,
    tol_primal: f64,
    tol_change: f64,
}

/// Fixed report order for all aggregate tables.
const METHOD_ORDER: [&str; 5] = [
    "PathLasso-zero",
    "PathLasso-0.1lambda",
    "PathLasso-lambda",
    "TSLasso",
    "BK",
];

const TUNED_RULES: [OmegaRule; 3] = [OmegaRule::Zero, OmegaRule::TenthLambda, OmegaRule::Lambda];

struct ChosenRow {
    method: String,
    lambda: Option<f64>,
    omega: Option<f64>,
    f1: f64,
    mse: f64,
}

/// Everything one replicate contributes to the report files.
struct RepOutcome {
    idx: usize,
    metric_rows: Vec<eval::MetricRow>,
    bk_results: Vec<BkPathwayResult>,
    bk_names: Vec<String>,
    roc_rows: Vec<(String, f64, f64)>,
    aucs: Vec<(String, f64)>,
    matched: eval::MatchedTables,
    chosen_rows: Vec<ChosenRow>,
    nonconverged: usize,
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let file = args.shared.file_config("compare")?;
    let input = args.shared.input(&file)?;
    let out = args.shared.output_dir(&file)?;
    let opts = args.solver.resolve(&file);
    let (lambda_min, lambda_max, points, phi) = args.grid.resolve(&file);
    let cfg = CompareConfig {
        command: "compare",
        input: display(&input),
        output_dir: display(&out),
        seed: args.shared.seed(&file),
        lambda_min,
        lambda_max,
        points,
        phi,
        folds: args.folds.or(file.folds).unwrap_or(10),
        cutoff: args.cutoff.or(file.cutoff).unwrap_or(1e-3),
        q: args.q.or(file.q).unwrap_or(0.05),
        rho: opts.rho,
        max_iter: opts.max_iter,
        tol_primal: opts.tol_primal,
        tol_change: opts.tol_change,
    };
    opts.validate()?;
    let grid = admm::log_grid(cfg.lambda_min, cfg.lambda_max, cfg.points)?;

    let reps = scan_replicates(&input)?;
    if reps.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "no replicate datasets (data_repNNN.csv) found in {}",
            input.display()
        )));
    }
    let truth_paths: Vec<PathBuf> = reps
        .iter()
        .map(|(idx, _)| input.join(format!("truth_rep{:03}.json", idx)))
        .collect();
    let with_truth = truth_paths.iter().filter(|p| p.exists()).count();
    let stability = if with_truth == truth_paths.len() {
        false
    } else if with_truth == 0 {
        true
    } else {
        return Err(Error::InvalidParameter(format!(
            "{} of {} replicates have truth files; need all (benchmark) or none (stability)",
            with_truth,
            truth_paths.len()
        )));
    };
    if stability && reps.len() != 2 {
        return Err(Error::InvalidParameter(format!(
            "stability mode (no truth files) needs exactly two datasets, found {}",
            reps.len()
        )));
    }
    args.shared.init_threads(&file)?;

    fs::create_dir_all(&out)?;
    write_json(&out.join("config.json"), &serde_json::to_value(&cfg)?)?;

    if stability {
        compare_stability(&reps, &grid, &cfg, &opts, &out)
    } else {
        compare_benchmark(&reps, &truth_paths, &grid, &cfg, &opts, &out)
    }
}

/// Replicate datasets in an input directory: `data_repNNN.csv`, sorted by
/// replicate number.
fn scan_replicates(dir: &Path) -> Result<Vec<(usize, PathBuf)>> {
    let mut reps: Vec<(usize, PathBuf)> = Vec::new();
    for entry in fs::read_dir(dir)? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        let idx = name
            .strip_prefix("data_rep")
            .and_then(|s| s.strip_suffix(".csv"))
            .and_then(|s| s.parse::<usize>().ok());
        if let Some(idx) = idx {
            reps.push((idx, entry.path()));
        }
    }
    reps.sort_by_key(|(idx, _)| *idx);
    for pair in reps.windows(2) {
        if pair[0].0 == pair[1].0 {
            return Err(Error::InvalidData(format!(
                "two dataset files claim replicate {}",
                pair[0].0
            )));
        }
    }
    Ok(reps)
}

/// Fits one tuned method on one replicate: full-path metrics and ROC, then a
/// cross-validated pick for the headline F1/MSE row.
#[allow(clippy::too_many_arguments)]
fn tuned_method(
    std: &StandardizedDataset,
    path: PathResult,
    specs: &[PenaltySpec],
    truth: &BTreeSet<usize>,
    ab_true: &Array1<f64>,
    cv_seed: u64,
    cfg: &CompareConfig,
    opts: &SolverOptions,
    paths: &mut BTreeMap<String, PathResult>,
    outcome: &mut RepOutcome,
) -> Result<()> {
    outcome.nonconverged += path.fits.iter().filter(|f| !f.converged).count();
    outcome
        .metric_rows
        .extend(eval::path_metrics(&path, truth, ab_true, cfg.cutoff)?);
    let roc = eval::roc_from_path(&path, truth, cfg.cutoff)?;
    outcome
        .roc_rows
        .extend(roc.points.iter().map(|&(f, t)| (path.method.clone(), f, t)));
    outcome.aucs.push((path.method.clone(), roc.auc));

    let report = eval::cross_validate(std, specs, cfg.folds, cv_seed, opts)?;
    let fit = &path.fits[report.chosen];
    let ab = fit.pathway_effects();
    let sel = eval::select_pathways(&ab, cfg.cutoff).selected;
    outcome.chosen_rows.push(ChosenRow {
        method: path.method.clone(),
        lambda: Some(fit.spec.lambda),
        omega: Some(fit.spec.omega),
        f1: eval::f1_score(&sel, truth)?,
        mse: eval::mse_ab(&ab, ab_true)?,
    });
    paths.insert(path.method.clone(), path);
    Ok(())
}

fn run_replicate(
    idx: usize,
    data_path: &Path,
    truth_path: &Path,
    grid: &[f64],
    cfg: &CompareConfig,
    opts: &SolverOptions,
) -> Result<RepOutcome> {
    let (data, std) = read_dataset(data_path)?;
    let text = fs::read_to_string(truth_path)?;
    let truth: simgen::SimTruth = serde_json::from_str(&text)?;
    if truth.a_true.len() != std.k() {
        return Err(Error::InvalidData(format!(
            "truth file lists {} mediators, dataset has {}",
            truth.a_true.len(),
            std.k()
        )));
    }
    let ab_true = std.ab_to_standardized(
        &Array1::from(truth.a_true.clone()),
        &Array1::from(truth.b_true.clone()),
    );
    let truth_set = &truth.true_set;
    // One fold partition per replicate, shared by all tuned methods, so their
    // cross-validated picks are paired.
    let cv_seed = seed::derive_seed(cfg.seed, idx as u64);

    let mut outcome = RepOutcome {
        idx,
        metric_rows: Vec::new(),
        bk_results: Vec::new(),
        bk_names: data.mediator_names(),
        roc_rows: Vec::new(),
        aucs: Vec::new(),
        matched: eval::MatchedTables {
            f1_by_support: Vec::new(),
            mse_by_l1: Vec::new(),
        },
        chosen_rows: Vec::new(),
        nonconverged: 0,
    };
    let mut paths: BTreeMap<String, PathResult> = BTreeMap::new();

    for rule in TUNED_RULES {
        let specs = specs_for(grid, std.k(), cfg.phi, rule, 0.0);
        let mut path = admm::fit_path(&std, &specs, opts)?;
        path.method = format!("PathLasso-{}", rule.as_str());
        tuned_method(
            &std, path, &specs, truth_set, &ab_true, cv_seed, cfg, opts, &mut paths, &mut outcome,
        )?;
    }
    let ts_specs: Vec<PenaltySpec> = grid
        .iter()
        .map(|&w| PenaltySpec::with_unit_weights(std.k(), 0.0, 2.0, w))
        .collect();
    let ts_path = baselines::tslasso_path(&std, grid, opts)?;
    tuned_method(
        &std, ts_path, &ts_specs, truth_set, &ab_true, cv_seed, cfg, opts, &mut paths,
        &mut outcome,
    )?;

    // Per-mediator product tests: p-value ROC plus the BH selection as the
    // method's headline row (its estimate is zero off the selection).
    let bk = baselines::bk_fit(&std, cfg.q)?;
    let p_values: Vec<f64> = bk.iter().map(|r| r.p_value).collect();
    let roc = eval::roc_from_pvalues(&p_values, truth_set)?;
    outcome
        .roc_rows
        .extend(roc.points.iter().map(|&(f, t)| ("BK".to_string(), f, t)));
    outcome.aucs.push(("BK".to_string(), roc.auc));
    let bk_sel: BTreeSet<usize> = bk.iter().filter(|r| r.selected).map(|r| r.mediator).collect();
    let bk_ab = Array1::from_iter(bk.iter().map(|r| if r.selected { r.ab_hat } else { 0.0 }));
    outcome.chosen_rows.push(ChosenRow {
        method: "BK".to_string(),
        lambda: None,
        omega: None,
        f1: eval::f1_score(&bk_sel, truth_set)?,
        mse: eval::mse_ab(&bk_ab, &ab_true)?,
    });
    outcome.bk_results = bk;

    let path_refs: BTreeMap<String, &PathResult> =
        paths.iter().map(|(name, p)| (name.clone(), p)).collect();
    outcome.matched = eval::matched_curves(&path_refs, truth_set, &ab_true, cfg.cutoff)?;
    Ok(outcome)
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn compare_benchmark(
    reps: &[(usize, PathBuf)],
    truth_paths: &[PathBuf],
    grid: &[f64],
    cfg: &CompareConfig,
    opts: &SolverOptions,
    out: &Path,
) -> Result<()> {
    let outcomes: Vec<Result<RepOutcome>> = reps
        .par_iter()
        .zip(truth_paths.par_iter())
        .map(|((idx, data_path), truth_path)| {
            run_replicate(*idx, data_path, truth_path, grid, cfg, opts)
        })
        .collect();

    let mut auc_csv = csv::Writer::from_writer(create(&out.join("auc.csv"))?);
    auc_csv.write_record(["rep", "method", "auc"])?;
    let mut chosen_csv = csv::Writer::from_writer(create(&out.join("chosen.csv"))?);
    chosen_csv.write_record(["rep", "method", "lambda", "omega", "f1", "mse"])?;
    let mut mf1_csv = csv::Writer::from_writer(create(&out.join("matched_f1.csv"))?);
    mf1_csv.write_record(["rep", "method", "target_support", "grid_value", "support", "f1"])?;
    let mut mmse_csv = csv::Writer::from_writer(create(&out.join("matched_mse.csv"))?);
    mmse_csv.write_record(["rep", "method", "target_l1", "grid_value", "l1", "mse"])?;

    let mut f1s: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut mses: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut aucs: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    let mut nonconverged = 0usize;
    let mut total_points = 0usize;

    for outcome in outcomes {
        let o = outcome?;
        let rep = o.idx.to_string();
        eval::write_metrics_csv(
            &o.metric_rows,
            create(&out.join(format!("metrics_rep{:03}.csv", o.idx)))?,
        )?;
        baselines::write_bk_csv(
            &o.bk_results,
            &o.bk_names,
            create(&out.join(format!("bk_rep{:03}.csv", o.idx)))?,
        )?;
        let mut roc_csv =
            csv::Writer::from_writer(create(&out.join(format!("roc_rep{:03}.csv", o.idx)))?);
        roc_csv.write_record(["method", "fpr", "tpr"])?;
        for (method, fpr, tpr) in &o.roc_rows {
            roc_csv.write_record(&[method.clone(), fmt(*fpr), fmt(*tpr)])?;
        }
        roc_csv.flush()?;

        for (method, auc) in &o.aucs {
            auc_csv.write_record(&[rep.clone(), method.clone(), fmt(*auc)])?;
        }
        for row in &o.chosen_rows {
            chosen_csv.write_record(&[
                rep.clone(),
                row.method.clone(),
                row.lambda.map(fmt).unwrap_or_default(),
                row.omega.map(fmt).unwrap_or_default(),
                fmt(row.f1),
                fmt(row.mse),
            ])?;
        }
        for row in &o.matched.f1_by_support {
            mf1_csv.write_record(&[
                rep.clone(),
                row.method.clone(),
                row.target_support.to_string(),
                fmt(row.grid_value),
                row.support.to_string(),
                fmt(row.f1),
            ])?;
        }
        for row in &o.matched.mse_by_l1 {
            mmse_csv.write_record(&[
                rep.clone(),
                row.method.clone(),
                fmt(row.target_l1),
                fmt(row.grid_value),
                fmt(row.l1),
                fmt(row.mse),
            ])?;
        }

        for row in &o.chosen_rows {
            let key = METHOD_ORDER
                .iter()
                .find(|m| **m == row.method)
                .expect("method names are fixed");
            f1s.entry(key).or_default().push(row.f1);
            mses.entry(key).or_default().push(row.mse);
        }
        for (method, auc) in &o.aucs {
            let key = METHOD_ORDER
                .iter()
                .find(|m| **m == *method)
                .expect("method names are fixed");
            aucs.entry(key).or_default().push(*auc);
        }
        nonconverged += o.nonconverged;
        total_points += 4 * grid.len();
    }
    auc_csv.flush()?;
    chosen_csv.flush()?;
    mf1_csv.flush()?;
    mmse_csv.flush()?;

    let mut summary = csv::Writer::from_writer(create(&out.join("summary.csv"))?);
    summary.write_record(["method", "metric", "mean", "sd"])?;
    for method in METHOD_ORDER {
        for (metric, values) in [("f1", &f1s), ("mse", &mses), ("auc", &aucs)] {
            let (mean, sd) = mean_sd(&values[method]);
            summary.write_record(&[method.to_string(), metric.to_string(), fmt(mean), fmt(sd)])?;
        }
    }
    summary.flush()?;

    warn_nonconverged(nonconverged, total_points, opts.max_iter);
    println!(
        "compared {} method(s) on {} replicate(s); summary in {}",
        METHOD_ORDER.len(),
        reps.len(),
        out.join("summary.csv").display()
    );
    Ok(())
}

/// One method's cross-validated pick on one dataset, for stability checks.
struct StabilityProfile {
    selected: BTreeSet<usize>,
    ab: Array1<f64>,
    chosen: Option<(f64, f64)>,
}

fn stability_profiles(
    data_path: &Path,
    grid: &[f64],
    cfg: &CompareConfig,
    opts: &SolverOptions,
    cv_seed: u64,
) -> Result<(BTreeMap<String, StabilityProfile>, usize, usize)> {
    let (_, std) = read_dataset(data_path)?;
    let mut profiles = BTreeMap::new();
    let mut nonconverged = 0usize;

    let mut tuned = |path: PathResult, specs: &[PenaltySpec]| -> Result<usize> {
        let bad = path.fits.iter().filter(|f| !f.converged).count();
        let report = eval::cross_validate(&std, specs, cfg.folds, cv_seed, opts)?;
        let fit = &path.fits[report.chosen];
        let ab = fit.pathway_effects();
        profiles.insert(
            path.method.clone(),
            StabilityProfile {
                selected: eval::select_pathways(&ab, cfg.cutoff).selected,
                ab,
                chosen: Some((fit.spec.lambda, fit.spec.omega)),
            },
        );
        Ok(bad)
    };

    for rule in TUNED_RULES {
        let specs = specs_for(grid, std.k(), cfg.phi, rule, 0.0);
        let mut path = admm::fit_path(&std, &specs, opts)?;
        path.method = format!("PathLasso-{}", rule.as_str());
        nonconverged += tuned(path, &specs)?;
    }
    let ts_specs: Vec<PenaltySpec> = grid
        .iter()
        .map(|&w| PenaltySpec::with_unit_weights(std.k(), 0.0, 2.0, w))
        .collect();
    let ts_path = baselines::tslasso_path(&std, grid, opts)?;
    nonconverged += tuned(ts_path, &ts_specs)?;

    let bk = baselines::bk_fit(&std, cfg.q)?;
    profiles.insert(
        "BK".to_string(),
        StabilityProfile {
            selected: bk.iter().filter(|r| r.selected).map(|r| r.mediator).collect(),
            ab: Array1::from_iter(bk.iter().map(|r| if r.selected { r.ab_hat } else { 0.0 })),
            chosen: None,
        },
    );
    Ok((profiles, nonconverged, std.k()))
}

fn compare_stability(
    reps: &[(usize, PathBuf)],
    grid: &[f64],
    cfg: &CompareConfig,
    opts: &SolverOptions,
    out: &Path,
) -> Result<()> {
    let results: Vec<Result<_>> = reps
        .par_iter()
        .map(|(idx, path)| {
            stability_profiles(path, grid, cfg, opts, seed::derive_seed(cfg.seed, *idx as u64))
        })
        .collect();
    let mut profiles = Vec::with_capacity(2);
    let mut nonconverged = 0usize;
    let mut ks = Vec::with_capacity(2);
    for result in results {
        let (p, bad, k) = result?;
        profiles.push(p);
        nonconverged += bad;
        ks.push(k);
    }
    if ks[0] != ks[1] {
        return Err(Error::InvalidData(format!(
            "the two datasets have different mediator counts ({} vs {})",
            ks[0], ks[1]
        )));
    }

    let mut csv = csv::Writer::from_writer(create(&out.join("stability.csv"))?);
    csv.write_record([
        "method",
        "jaccard",
        "l2_difference",
        "lambda_first",
        "omega_first",
        "lambda_second",
        "omega_second",
    ])?;
    for method in METHOD_ORDER {
        let a = &profiles[0][method];
        let b = &profiles[1][method];
        let grid_field = |chosen: Option<(f64, f64)>, pick: fn((f64, f64)) -> f64| {
            chosen.map(|c| fmt(pick(c))).unwrap_or_default()
        };
        csv.write_record(&[
            method.to_string(),
            fmt(eval::jaccard(&a.selected, &b.selected)),
            fmt(eval::l2_difference(&a.ab, &b.ab)?),
            grid_field(a.chosen, |c| c.0),
            grid_field(a.chosen, |c| c.1),
            grid_field(b.chosen, |c| c.0),
            grid_field(b.chosen, |c| c.1),
        ])?;
    }
    csv.flush()?;

    warn_nonconverged(nonconverged, 2 * 4 * grid.len(), opts.max_iter);
    println!(
        "stability of {} method(s) across two datasets; table in {}",
        METHOD_ORDER.len(),
        out.join("stability.csv").display()
    );
    Ok(())
}
