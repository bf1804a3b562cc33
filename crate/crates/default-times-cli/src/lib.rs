//! Command-line front end for the `default-times` library.
//!
//! Five subcommands cover the library surface: `dist-constant` and
//! `dist-affine` tabulate the gap law (survival and density curves),
//! `simulate` runs the Monte Carlo check against the analytic law,
//! `fit` calibrates constant rates (maximum likelihood) or factor
//! parameters (grid search) to a binned gap histogram, and
//! `check-ushape` evaluates the two sufficient conditions for a
//! U-shaped gap density.
//!
//! Exit codes: `0` success, `1` numerical failure during an otherwise
//! valid computation (e.g. every simulated path censored), `2`
//! usage or validation failure (bad flags, malformed config or data,
//! inadmissible model). All CSV output is schema-stable with values
//! printed to 12 significant digits, and every command is
//! deterministic given its flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::de::DeserializeOwned;
use serde::Deserialize;

use default_times::affine_transform::AffineParams;
use default_times::calibrate::{self, GapHistogram, GridBase};
use default_times::default_law::{self, EigenStructure, DEFAULT_PRUNE_EPS, DEFAULT_TAIL_EPS};
use default_times::markov_core::{
    two_state_gap_density, two_state_gap_survival, PaymentSchedule, TwoStateRates,
};
use default_times::mc_oracle::{empirical_gap_law, SimConfig, DEFAULT_HORIZON};
use default_times::{format_significant, parallel, Error};

/// Historical reference estimate for the bundled recorded-default dataset,
/// in units of 1/day: `(λ₁, λ₂)`. The `fit` report flags which unit
/// hypothesis, if any, reproduces this pair.
pub const REFERENCE_RATES: (f64, f64) = (0.3631, 0.0238);

fn fmt(x: f64) -> String {
    format_significant(x, 12)
}

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Parser, Debug)]
#[command(
    name = "default-times",
    version,
    about = "Distribution, simulation, and calibration of economic vs recorded default times"
)]
pub struct Cli {
    /// Cap the worker thread pool (defaults to all cores).
    #[arg(long, global = true, env = "DEFAULT_TIMES_THREADS")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Tabulate gap survival and density under constant transition rates.
    DistConstant(DistConstantArgs),
    /// Tabulate gap survival, density, and truncation bound for a
    /// stochastic-rate model given as JSON (or a bundled preset).
    DistAffine(DistAffineArgs),
    /// Simulate paths and write the empirical gap histogram next to the
    /// analytic bin masses with z-scores.
    Simulate(SimulateArgs),
    /// Calibrate to a binned gap histogram (maximum likelihood over
    /// constant rates, or grid search over factor parameters).
    Fit(FitArgs),
    /// Evaluate the two sufficient conditions for a U-shaped gap density.
    CheckUshape(CheckUshapeArgs),
}

#[derive(Args, Debug)]
pub struct DistConstantArgs {
    /// Exit rate λ₁ from the live state (> 0).
    #[arg(long)]
    pub lambda1: f64,
    /// Recovery rate λ₂ from the default state (≥ 0).
    #[arg(long)]
    pub lambda2: f64,
    /// Payment interval length N (> 0).
    #[arg(long = "N")]
    pub n: f64,
    /// Number of evaluation points on [0, N].
    #[arg(long, default_value_t = 181)]
    pub grid_points: usize,
    /// Output CSV path (columns: t, survival, density).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(ArgGroup::new("source").required(true).args(["config", "preset"])))]
pub struct DistAffineArgs {
    /// JSON model file; see the README for the schema.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Bundled parameter block(s) instead of a config file.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output CSV path for a single curve
    /// (columns: t, survival, density, tail_bound).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output directory for sweep presets (one CSV per swept value).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Number of evaluation points on [0, N].
    #[arg(long, default_value_t = 181)]
    pub grid_points: usize,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// JSON model file (constant or affine; see the README).
    #[arg(long)]
    pub config: PathBuf,
    /// Number of independent paths.
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    /// Master seed; each path derives its own streams from it.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Euler step for the factor / rate grid (must be ≤ N/10).
    #[arg(long)]
    pub dt: f64,
    /// Number of equal histogram bins over [0, N].
    #[arg(long, default_value_t = 10)]
    pub bins: usize,
    /// Censoring horizon in payment windows.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    pub horizon: usize,
    /// Output CSV path (columns: bin_left, bin_right, count, frequency,
    /// std_err, analytic, z).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Calibration mode.
    #[arg(long, value_enum)]
    pub mode: FitMode,
    /// Input histogram CSV (columns: bin_left, bin_right, count).
    #[arg(long)]
    pub data: PathBuf,
    /// Initial λ₁ for the likelihood search.
    #[arg(long, default_value_t = 1.0)]
    pub init_lambda1: f64,
    /// Initial λ₂ for the likelihood search.
    #[arg(long, default_value_t = 1.0)]
    pub init_lambda2: f64,
    /// JSON base model for grid mode (eigenstructure and fixed factor
    /// parameters; κ, σ, γ come from the grids).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Comma-separated κ grid (grid mode).
    #[arg(long, value_delimiter = ',')]
    pub kappa_grid: Vec<f64>,
    /// Comma-separated σ grid (grid mode).
    #[arg(long, value_delimiter = ',')]
    pub sigma_grid: Vec<f64>,
    /// Comma-separated γ grid (grid mode).
    #[arg(long, value_delimiter = ',')]
    pub gamma_grid: Vec<f64>,
    /// Output report path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CheckUshapeArgs {
    /// Exit rate λ₁ from the live state (> 0).
    #[arg(long)]
    pub lambda1: f64,
    /// Recovery rate λ₂ from the default state (≥ 0).
    #[arg(long)]
    pub lambda2: f64,
    /// Payment interval length N (> 0).
    #[arg(long = "N")]
    pub n: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitMode {
    Mle,
    Grid,
}

/// Bundled parameter blocks reproducing the reference sweeps: mean-reversion
/// speed, jump size, and volatility sweeps around a light-volatility base,
/// plus the heavy-volatility fitted block.
#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Fig2KappaSweep,
    Fig3GammaSweep,
    Fig4SigmaSweep,
    Fig5Fit,
}

// ---------------------------------------------------------------------------
// JSON model documents
// ---------------------------------------------------------------------------

/// Top-level model document: `"model": "constant"` or `"model": "affine"`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelConfig {
    Constant(ConstantModel),
    Affine(AffineModel),
}

/// Constant-rate two-state model.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantModel {
    pub lambda1: f64,
    pub lambda2: f64,
    pub n: f64,
    #[serde(default)]
    pub i_max: Option<usize>,
}

/// Stochastic-rate model: eigenstructure rows `b` with eigenvalue loadings
/// `mu`, square-root-jump factor parameters, and the payment schedule.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineModel {
    pub b: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub kappa: f64,
    pub theta: f64,
    pub sigma: f64,
    pub lambda_j: f64,
    pub gamma: f64,
    pub x0: f64,
    pub n: f64,
    #[serde(default)]
    pub i_max: Option<usize>,
    #[serde(default)]
    pub tail_eps: Option<f64>,
    #[serde(default)]
    pub prune_eps: Option<f64>,
    /// Factor levels at which generator admissibility is checked; defaults
    /// to a grid spanning 0 through well past the jump-inflated range.
    #[serde(default)]
    pub validation_grid: Option<Vec<f64>>,
    /// 1-based start state for simulation (defaults to 1).
    #[serde(default)]
    pub start_state: Option<usize>,
}

impl AffineModel {
    pub fn params(&self) -> Result<AffineParams, Error> {
        AffineParams::new(
            self.kappa,
            self.theta,
            self.sigma,
            self.lambda_j,
            self.gamma,
            self.x0,
        )
    }

    pub fn eigen(&self) -> Result<EigenStructure, Error> {
        let b = rows_to_matrix(&self.b)?;
        let params = self.params()?;
        let grid = match &self.validation_grid {
            Some(g) => g.clone(),
            None => EigenStructure::default_validation_grid(&params),
        };
        EigenStructure::new(b, self.mu.clone(), &grid)
    }

    pub fn schedule(&self) -> Result<PaymentSchedule, Error> {
        PaymentSchedule::new(self.n, self.i_max.unwrap_or(PaymentSchedule::DEFAULT_I_MAX))
    }

    pub fn tail_eps(&self) -> f64 {
        self.tail_eps.unwrap_or(DEFAULT_TAIL_EPS)
    }

    pub fn prune_eps(&self) -> f64 {
        self.prune_eps.unwrap_or(DEFAULT_PRUNE_EPS)
    }
}

/// Base model for grid calibration: everything `fit --mode grid` holds
/// fixed. κ, σ, γ come from the command-line grids.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBaseConfig {
    pub b: Vec<Vec<f64>>,
    pub mu: Vec<f64>,
    pub theta: f64,
    pub lambda_j: f64,
    pub x0: f64,
    pub n: f64,
    #[serde(default)]
    pub i_max: Option<usize>,
    #[serde(default)]
    pub tail_eps: Option<f64>,
    #[serde(default)]
    pub prune_eps: Option<f64>,
    #[serde(default)]
    pub validation_grid: Option<Vec<f64>>,
}

impl GridBaseConfig {
    /// Builds the fixed part of the grid search. The admissibility grid must
    /// cover the factor range under the *largest* swept jump size, so the
    /// maximum of the γ grid is folded into the default.
    pub fn to_grid_base(&self, max_gamma: f64) -> Result<GridBase, Error> {
        let b = rows_to_matrix(&self.b)?;
        let grid = match &self.validation_grid {
            Some(g) => g.clone(),
            None => {
                let widest = AffineParams::new(1.0, self.theta, 0.0, 0.0, max_gamma, self.x0)?;
                EigenStructure::default_validation_grid(&widest)
            }
        };
        let es = EigenStructure::new(b, self.mu.clone(), &grid)?;
        let sched =
            PaymentSchedule::new(self.n, self.i_max.unwrap_or(PaymentSchedule::DEFAULT_I_MAX))?;
        Ok(GridBase {
            es,
            theta: self.theta,
            lambda_j: self.lambda_j,
            x0: self.x0,
            sched,
            tail_eps: self.tail_eps.unwrap_or(DEFAULT_TAIL_EPS),
            prune_eps: self.prune_eps.unwrap_or(DEFAULT_PRUNE_EPS),
        })
    }
}

fn rows_to_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, Error> {
    let k = rows.len();
    if k == 0 {
        return Err(Error::InvalidInput(
            "eigenstructure matrix b is empty".into(),
        ));
    }
    let mut flat = Vec::with_capacity(k * k);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(Error::InvalidInput(format!(
                "eigenstructure matrix b must be square: row {} has {} entries, expected {}",
                i + 1,
                row.len(),
                k
            )));
        }
        flat.extend_from_slice(row);
    }
    Ok(DMatrix::from_row_slice(k, k, &flat))
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: e.line(),
        msg: format!("{}: {e}", path.display()),
    })
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

fn sweep_base() -> AffineModel {
    AffineModel {
        b: vec![vec![-0.9992, -0.7071], vec![0.0400, -0.7071]],
        mu: vec![-0.52, 0.0],
        kappa: 1.0,
        theta: 1.0,
        sigma: 5.0,
        lambda_j: 0.2,
        gamma: 0.1,
        x0: 1.0,
        n: 180.0,
        i_max: None,
        tail_eps: None,
        prune_eps: None,
        validation_grid: None,
        start_state: None,
    }
}

fn heavy_block() -> AffineModel {
    AffineModel {
        b: vec![vec![-0.9997, -0.7071], vec![0.0246, -0.7071]],
        mu: vec![-0.5120, 0.0],
        kappa: 1.0,
        theta: 1.0,
        sigma: 9.0,
        lambda_j: 0.2,
        gamma: 3.6,
        x0: 1.0,
        n: 180.0,
        i_max: None,
        tail_eps: None,
        prune_eps: None,
        validation_grid: None,
        start_state: None,
    }
}

/// The models a preset expands to, each with the file stem its curve is
/// written under.
pub fn preset_models(preset: Preset) -> Vec<(String, AffineModel)> {
    match preset {
        Preset::Fig2KappaSweep => [0.5, 1.0, 2.0, 5.0]
            .iter()
            .map(|&kappa| {
                let mut m = sweep_base();
                m.kappa = kappa;
                (format!("kappa-{}", fmt(kappa)), m)
            })
            .collect(),
        Preset::Fig3GammaSweep => [0.1, 0.5, 1.0, 2.0, 3.6]
            .iter()
            .map(|&gamma| {
                let mut m = sweep_base();
                m.gamma = gamma;
                (format!("gamma-{}", fmt(gamma)), m)
            })
            .collect(),
        Preset::Fig4SigmaSweep => [1.0, 5.0, 9.0]
            .iter()
            .map(|&sigma| {
                let mut m = sweep_base();
                m.sigma = sigma;
                (format!("sigma-{}", fmt(sigma)), m)
            })
            .collect(),
        Preset::Fig5Fit => vec![("fig5-fit".to_string(), heavy_block())],
    }
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

pub fn run(cli: Cli) -> anyhow::Result<()> {
    if let Some(t) = cli.threads {
        if t == 0 {
            return Err(Error::InvalidInput("--threads must be ≥ 1".into()).into());
        }
        parallel::configure_threads(t);
    }
    match cli.command {
        Command::DistConstant(args) => cmd_dist_constant(args),
        Command::DistAffine(args) => cmd_dist_affine(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Fit(args) => cmd_fit(args),
        Command::CheckUshape(args) => cmd_check_ushape(args),
    }
}

/// Maps a failed run onto the process exit code: validation problems exit
/// 2, numerical failures exit 1.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.downcast_ref::<Error>() {
        Some(e) if e.is_validation() => 2,
        _ => 1,
    }
}

fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut s = String::with_capacity(64 * (rows.len() + 1));
    s.push_str(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    fs::write(path, s).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

fn uniform_grid(n: f64, points: usize) -> Result<Vec<f64>, Error> {
    if points < 2 {
        return Err(Error::InvalidInput(format!(
            "need at least 2 grid points, got {points}"
        )));
    }
    let h = n / (points - 1) as f64;
    Ok((0..points)
        .map(|j| if j + 1 == points { n } else { j as f64 * h })
        .collect())
}

// ---------------------------------------------------------------------------
// dist-constant
// ---------------------------------------------------------------------------

fn cmd_dist_constant(args: DistConstantArgs) -> anyhow::Result<()> {
    let r = TwoStateRates::new(args.lambda1, args.lambda2)?;
    PaymentSchedule::new(args.n, 1)?;
    let ts = uniform_grid(args.n, args.grid_points)?;
    let mut rows = Vec::with_capacity(ts.len());
    for &t in &ts {
        let s = two_state_gap_survival(r, args.n, t)?;
        let d = two_state_gap_density(r, args.n, t)?;
        rows.push(vec![fmt(t), fmt(s), fmt(d)]);
    }
    write_csv(&args.out, "t,survival,density", &rows)?;
    println!(
        "wrote {} ({} points, lambda1={}, lambda2={}, N={})",
        args.out.display(),
        ts.len(),
        fmt(r.lambda1),
        fmt(r.lambda2),
        fmt(args.n)
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// dist-affine
// ---------------------------------------------------------------------------

fn cmd_dist_affine(args: DistAffineArgs) -> anyhow::Result<()> {
    let models: Vec<(String, AffineModel)> = match (args.preset, &args.config) {
        (Some(p), _) => preset_models(p),
        (None, Some(path)) => {
            let doc: ModelConfig = load_json(path)?;
            match doc {
                ModelConfig::Affine(m) => vec![("curve".to_string(), m)],
                ModelConfig::Constant(_) => {
                    return Err(Error::InvalidInput(
                        "config declares a constant-rate model; use dist-constant for it".into(),
                    )
                    .into())
                }
            }
        }
        (None, None) => unreachable!("clap group requires one source"),
    };

    let targets: Vec<(PathBuf, &String, &AffineModel)> = if models.len() == 1 {
        let (stem, model) = &models[0];
        let path = match (&args.out, &args.out_dir) {
            (Some(out), _) => out.clone(),
            (None, Some(dir)) => dir.join(format!("{stem}.csv")),
            (None, None) => {
                return Err(
                    Error::InvalidInput("single curve: supply --out (or --out-dir)".into()).into(),
                )
            }
        };
        vec![(path, stem, model)]
    } else {
        let dir = args.out_dir.as_ref().ok_or_else(|| {
            Error::InvalidInput("sweep presets write one CSV per value; supply --out-dir".into())
        })?;
        if args.out.is_some() {
            return Err(Error::InvalidInput(
                "sweep presets write multiple files; use --out-dir instead of --out".into(),
            )
            .into());
        }
        models
            .iter()
            .map(|(stem, model)| (dir.join(format!("{stem}.csv")), stem, model))
            .collect()
    };

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }

    for (path, stem, model) in targets {
        let es = model.eigen()?;
        let params = model.params()?;
        let sched = model.schedule()?;
        let curve = default_law::gap_curve(
            &es,
            &params,
            &sched,
            args.grid_points,
            model.tail_eps(),
            model.prune_eps(),
        )?;
        let max_tail = curve.iter().map(|p| p.tail_bound).fold(0.0, f64::max);
        let rows: Vec<Vec<String>> = curve
            .iter()
            .map(|p| vec![fmt(p.t), fmt(p.survival), fmt(p.density), fmt(p.tail_bound)])
            .collect();
        write_csv(&path, "t,survival,density,tail_bound", &rows)?;
        println!(
            "wrote {} [{stem}] ({} points, max tail bound {})",
            path.display(),
            rows.len(),
            fmt(max_tail)
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

/// Analytic bin masses of the gap law over `edges`, for the z-score column.
fn analytic_bin_masses(
    doc: &ModelConfig,
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    edges: &[f64],
) -> anyhow::Result<Vec<f64>> {
    let survival: Vec<f64> = match doc {
        ModelConfig::Constant(c) => {
            let r = TwoStateRates::new(c.lambda1, c.lambda2)?;
            edges
                .iter()
                .map(|&t| two_state_gap_survival(r, sched.n, t))
                .collect::<Result<_, _>>()?
        }
        ModelConfig::Affine(m) => {
            default_law::gap_survival_batch(es, params, sched, edges, m.tail_eps(), m.prune_eps())?
                .into_iter()
                .map(|g| g.value)
                .collect()
        }
    };
    Ok(survival.windows(2).map(|w| w[0] - w[1]).collect())
}

fn cmd_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let doc: ModelConfig = load_json(&args.config)?;
    let (es, params, sched, s0) = match &doc {
        ModelConfig::Constant(c) => {
            let r = TwoStateRates::new(c.lambda1, c.lambda2)?;
            let sched =
                PaymentSchedule::new(c.n, c.i_max.unwrap_or(PaymentSchedule::DEFAULT_I_MAX))?;
            (
                EigenStructure::from_two_state_rates(r),
                AffineParams::constant_unit(),
                sched,
                1,
            )
        }
        ModelConfig::Affine(m) => (
            m.eigen()?,
            m.params()?,
            m.schedule()?,
            m.start_state.unwrap_or(1),
        ),
    };
    if args.bins == 0 {
        return Err(Error::InvalidInput("--bins must be ≥ 1".into()).into());
    }
    let cfg = SimConfig::new(args.paths, args.dt, args.seed, args.horizon)?;
    let law = empirical_gap_law(&es, &params, &sched, &cfg, s0)?;

    let edges = uniform_grid(sched.n, args.bins + 1)?;
    let analytic = analytic_bin_masses(&doc, &es, &params, &sched, &edges)?;
    let counts = law.bin_counts(args.bins)?;
    let n_def = law.defaulted() as f64;

    let mut rows = Vec::with_capacity(args.bins);
    for (j, (&c, &p)) in counts.iter().zip(&analytic).enumerate() {
        let f = c as f64 / n_def;
        let se = (f * (1.0 - f) / n_def).sqrt();
        // z uses the null standard error sqrt(p(1-p)/n) so zero-count bins
        // still get a finite score.
        let z = (f - p) / (p * (1.0 - p) / n_def).sqrt();
        rows.push(vec![
            fmt(edges[j]),
            fmt(edges[j + 1]),
            format!("{c}"),
            fmt(f),
            fmt(se),
            fmt(p),
            fmt(z),
        ]);
    }
    write_csv(
        &args.out,
        "bin_left,bin_right,count,frequency,std_err,analytic,z",
        &rows,
    )?;
    println!(
        "wrote {} ({} bins; paths={}, defaulted={}, censored={} [fraction {}])",
        args.out.display(),
        args.bins,
        law.n_paths,
        law.defaulted(),
        law.censored,
        fmt(law.censored_fraction())
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit
// ---------------------------------------------------------------------------

fn load_histogram(path: &Path) -> anyhow::Result<GapHistogram> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    Ok(GapHistogram::from_csv(&text)?)
}

fn cmd_fit(args: FitArgs) -> anyhow::Result<()> {
    let h = load_histogram(&args.data)?;
    let report = match args.mode {
        FitMode::Mle => fit_mle_report(&args, &h)?,
        FitMode::Grid => fit_grid_report(&args, &h)?,
    };
    fs::write(&args.out, &report)
        .with_context(|| format!("cannot write {}", args.out.display()))?;
    print!("{report}");
    println!("report written to {}", args.out.display());
    Ok(())
}

fn fit_mle_report(args: &FitArgs, h: &GapHistogram) -> anyhow::Result<String> {
    let init = TwoStateRates::new(args.init_lambda1, args.init_lambda2)?;
    let reference = TwoStateRates::new(REFERENCE_RATES.0, REFERENCE_RATES.1)?;
    let rows = calibrate::unit_scan(h, init, reference, 1e-3)?;

    let mut out = String::new();
    out.push_str("fit report: constant-rate maximum likelihood\n");
    out.push_str(&format!(
        "data: {} ({} bins, delta={}, N={}, total count={})\n",
        args.data.display(),
        h.m(),
        fmt(h.delta),
        fmt(h.n),
        fmt(h.total())
    ));
    out.push_str(&format!(
        "reference pair: lambda1={}, lambda2={} (per day)\n\n",
        fmt(reference.lambda1),
        fmt(reference.lambda2)
    ));
    out.push_str("unit hypothesis scan (tolerance 1e-3 per component):\n");
    for row in &rows {
        let r = &row.result;
        out.push_str(&format!(
            "  {: <13} lambda1={}, lambda2={}, loglik={}, converged={}, evals={}, reproduces_reference={}\n",
            row.label,
            fmt(r.lambda1),
            fmt(r.lambda2),
            fmt(r.loglik),
            r.converged,
            r.iterations,
            row.reproduces
        ));
    }
    match rows.iter().find(|r| r.reproduces) {
        Some(row) => out.push_str(&format!(
            "auto-detected unit hypothesis: {} (reproduces the reference pair)\n",
            row.label
        )),
        None => out.push_str(
            "auto-detected unit hypothesis: none — no convention reproduces the reference pair\n",
        ),
    }

    let primary = &rows[0].result;
    out.push_str(&format!(
        "\nselected fit (per-day units): lambda1={}, lambda2={}\n",
        fmt(primary.lambda1),
        fmt(primary.lambda2)
    ));
    out.push_str(&format!(
        "log-likelihood: {}\nconverged: {} (objective evaluations: {})\n",
        fmt(primary.loglik),
        primary.converged,
        primary.iterations
    ));
    out.push_str(&format!(
        "stationarity residuals: dL/dlambda1={}, dL/dlambda2={}\n",
        fmt(primary.grad.0),
        fmt(primary.grad.1)
    ));
    Ok(out)
}

fn fit_grid_report(args: &FitArgs, h: &GapHistogram) -> anyhow::Result<String> {
    let config_path = args.config.as_ref().ok_or_else(|| {
        Error::InvalidInput("--mode grid requires --config (base model JSON)".into())
    })?;
    for (name, grid) in [
        ("--kappa-grid", &args.kappa_grid),
        ("--sigma-grid", &args.sigma_grid),
        ("--gamma-grid", &args.gamma_grid),
    ] {
        if grid.is_empty() {
            return Err(Error::InvalidInput(format!("--mode grid requires {name}")).into());
        }
    }
    let base_cfg: GridBaseConfig = load_json(config_path)?;
    let max_gamma = args.gamma_grid.iter().cloned().fold(0.0, f64::max);
    let base = base_cfg.to_grid_base(max_gamma)?;
    let fit = calibrate::fit_grid(
        h,
        &base,
        &args.kappa_grid,
        &args.sigma_grid,
        &args.gamma_grid,
    )?;

    let grid_line = |g: &[f64]| g.iter().map(|&v| fmt(v)).collect::<Vec<_>>().join(", ");
    let mut out = String::new();
    out.push_str("fit report: factor-parameter grid search\n");
    out.push_str(&format!(
        "data: {} ({} bins, delta={}, N={}, total count={})\n",
        args.data.display(),
        h.m(),
        fmt(h.delta),
        fmt(h.n),
        fmt(h.total())
    ));
    out.push_str(&format!("kappa grid: [{}]\n", grid_line(&fit.kappa_grid)));
    out.push_str(&format!("sigma grid: [{}]\n", grid_line(&fit.sigma_grid)));
    out.push_str(&format!("gamma grid: [{}]\n\n", grid_line(&fit.gamma_grid)));
    out.push_str(&format!(
        "selected: kappa={}, sigma={}, gamma={}\n",
        fmt(fit.kappa),
        fmt(fit.sigma),
        fmt(fit.gamma)
    ));
    out.push_str(&format!("mean squared error over bins: {}\n", fmt(fit.mse)));
    out.push_str(&format!("skipped grid points: {}\n", fit.skipped.len()));
    for s in fit.skipped.iter().take(5) {
        out.push_str(&format!(
            "  kappa={}, sigma={}, gamma={}: {}\n",
            fmt(s.kappa),
            fmt(s.sigma),
            fmt(s.gamma),
            s.reason
        ));
    }
    if fit.skipped.len() > 5 {
        out.push_str(&format!("  ... and {} more\n", fit.skipped.len() - 5));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// check-ushape
// ---------------------------------------------------------------------------

fn cmd_check_ushape(args: CheckUshapeArgs) -> anyhow::Result<()> {
    let r = TwoStateRates::new(args.lambda1, args.lambda2)?;
    PaymentSchedule::new(args.n, 1)?;
    let check = default_law::check_ushape(r, args.n);
    println!(
        "u-shape sufficient conditions at lambda1={}, lambda2={}, N={}",
        fmt(r.lambda1),
        fmt(r.lambda2),
        fmt(args.n)
    );
    println!(
        "  (i)  density falls at t = 0: {} (slack {})",
        check.falls_at_zero,
        fmt(check.slack_at_zero)
    );
    println!(
        "  (ii) density rises at t = N: {} (slack {})",
        check.rises_at_end,
        fmt(check.slack_at_end)
    );
    println!("  u-shaped (both conditions hold): {}", check.is_u_shaped());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_well_formed() {
        Cli::command().debug_assert();
    }

    #[test]
    fn presets_expand_to_the_documented_sweeps() {
        assert_eq!(preset_models(Preset::Fig2KappaSweep).len(), 4);
        assert_eq!(preset_models(Preset::Fig3GammaSweep).len(), 5);
        assert_eq!(preset_models(Preset::Fig4SigmaSweep).len(), 3);
        let fig5 = preset_models(Preset::Fig5Fit);
        assert_eq!(fig5.len(), 1);
        let m = &fig5[0].1;
        assert_eq!(m.sigma, 9.0);
        assert_eq!(m.gamma, 3.6);
        assert_eq!(m.mu[0], -0.5120);
        assert_eq!(m.b[0][0], -0.9997);
        let stems: Vec<String> = preset_models(Preset::Fig3GammaSweep)
            .into_iter()
            .map(|(s, _)| s)
            .collect();
        assert_eq!(
            stems,
            ["gamma-0.1", "gamma-0.5", "gamma-1", "gamma-2", "gamma-3.6"]
        );
    }

    #[test]
    fn preset_models_are_admissible() {
        for preset in [
            Preset::Fig2KappaSweep,
            Preset::Fig3GammaSweep,
            Preset::Fig4SigmaSweep,
            Preset::Fig5Fit,
        ] {
            for (stem, model) in preset_models(preset) {
                model.eigen().unwrap_or_else(|e| panic!("{stem}: {e}"));
                model.params().unwrap();
                model.schedule().unwrap();
            }
        }
    }

    #[test]
    fn model_json_round_trips() {
        let text = r#"{
            "model": "affine",
            "b": [[-0.9997, -0.7071], [0.0246, -0.7071]],
            "mu": [-0.5120, 0.0],
            "kappa": 1.0, "theta": 1.0, "sigma": 9.0,
            "lambda_j": 0.2, "gamma": 3.6, "x0": 1.0,
            "n": 180.0
        }"#;
        let doc: ModelConfig = serde_json::from_str(text).unwrap();
        match doc {
            ModelConfig::Affine(m) => {
                assert_eq!(m.sigma, 9.0);
                m.eigen().unwrap();
            }
            _ => panic!("expected affine"),
        }
        let text = r#"{"model": "constant", "lambda1": 0.3631, "lambda2": 0.0238, "n": 180.0}"#;
        let doc: ModelConfig = serde_json::from_str(text).unwrap();
        match doc {
            ModelConfig::Constant(c) => assert_eq!(c.lambda1, 0.3631),
            _ => panic!("expected constant"),
        }
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let text =
            r#"{"model": "constant", "lambda1": 1.0, "lambda2": 0.1, "n": 10.0, "sigma": 2.0}"#;
        assert!(serde_json::from_str::<ModelConfig>(text).is_err());
    }

    #[test]
    fn exit_codes_split_validation_from_numerical_failures() {
        let validation: anyhow::Error = Error::InvalidInput("x".into()).into();
        assert_eq!(exit_code(&validation), 2);
        let parse: anyhow::Error = Error::Parse {
            line: 3,
            msg: "bad".into(),
        }
        .into();
        assert_eq!(exit_code(&parse), 2);
        let numerical: anyhow::Error = Error::EmptyLaw("all censored".into()).into();
        assert_eq!(exit_code(&numerical), 1);
        let io: anyhow::Error = anyhow::anyhow!("disk full");
        assert_eq!(exit_code(&io), 1);
    }

    #[test]
    fn ragged_matrices_are_rejected() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(rows_to_matrix(&rows).is_err());
    }

    #[test]
    fn uniform_grid_hits_both_endpoints() {
        let g = uniform_grid(180.0, 181).unwrap();
        assert_eq!(g.len(), 181);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[180], 180.0);
        assert!(uniform_grid(10.0, 1).is_err());
    }
}
