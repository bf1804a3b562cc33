//! Parameter estimation against binned gap data: closed-form-likelihood
//! maximum likelihood for the constant-rate two-state model, and
//! mean-squared-error grid search over `(κ, σ, γ)` for the stochastic-rate
//! model.
//!
//! The likelihood of a gap histogram with edges `t_i = δ·i` is
//! `L = Σ N_i·(ln g_i − ln Z)` where `g_i` is the unnormalized mass the gap
//! density puts on `(t_{i−1}, t_i]` and `Z = 1 − e^{−(λ₁+λ₂)N}`. Both are
//! evaluated in fused-exponent form so no intermediate overflows for any
//! positive rates. The optimizer is a derivative-free direct search in
//! log-rate space (positivity by construction); the analytic gradient is
//! kept solely as a stationarity diagnostic on the result.

use crate::affine_transform::AffineParams;
use crate::default_law::{gap_survival_batch, EigenStructure};
use crate::error::{Error, Result};
use crate::markov_core::{two_state_gap_survival, PaymentSchedule, TwoStateRates};

/// Histogram of observed gaps `τ_r − τ_e` with uniform bin width `delta`
/// over `(0, N]`: `counts[i]` covers `(δ·i, δ·(i+1)]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GapHistogram {
    pub delta: f64,
    pub counts: Vec<f64>,
    /// Payment interval of the underlying data; equals `M·δ`.
    pub n: f64,
}

impl GapHistogram {
    pub fn new(delta: f64, counts: Vec<f64>, n: f64) -> Result<Self> {
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::InvalidInput(format!(
                "bin width must be finite and > 0, got {delta}"
            )));
        }
        if counts.is_empty() {
            return Err(Error::InvalidInput(
                "histogram needs at least one bin".into(),
            ));
        }
        if counts.iter().any(|c| !c.is_finite() || *c < 0.0) {
            return Err(Error::InvalidInput(
                "counts must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = counts.iter().sum();
        if !(total > 0.0) {
            return Err(Error::InvalidInput("counts must not all be zero".into()));
        }
        let implied = delta * counts.len() as f64;
        if !(n.is_finite() && n > 0.0) || (implied - n).abs() > 1e-9 * n.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "M·δ = {implied} does not match the payment interval N = {n}"
            )));
        }
        Ok(Self { delta, counts, n })
    }

    pub fn m(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }

    /// Bin edges `0, δ, 2δ, …, N` (length `M + 1`).
    pub fn edges(&self) -> Vec<f64> {
        let m = self.m();
        (0..=m)
            .map(|i| {
                if i == m {
                    self.n
                } else {
                    self.delta * i as f64
                }
            })
            .collect()
    }

    /// Counts normalized to frequencies.
    pub fn frequencies(&self) -> Vec<f64> {
        let total = self.total();
        self.counts.iter().map(|c| c / total).collect()
    }

    /// Parses the CSV shape `bin_left, bin_right, count` (header required).
    /// Bins must tile `(0, N]` contiguously with one uniform width.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        let mut saw_header = false;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if !saw_header {
                let cols: Vec<&str> = line.split(',').map(str::trim).collect();
                if cols != ["bin_left", "bin_right", "count"] {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected header 'bin_left,bin_right,count', got '{line}'"),
                    });
                }
                saw_header = true;
                continue;
            }
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols.len() != 3 {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected 3 columns, got {}", cols.len()),
                });
            }
            let mut vals = [0.0f64; 3];
            for (slot, col) in vals.iter_mut().zip(&cols) {
                *slot = col.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("'{col}' is not a number"),
                })?;
            }
            rows.push((vals[0], vals[1], vals[2]));
        }
        if !saw_header || rows.is_empty() {
            return Err(Error::Parse {
                line: text.lines().count(),
                msg: "no data rows".into(),
            });
        }
        let delta = rows[0].1 - rows[0].0;
        if !(delta > 0.0) {
            return Err(Error::Parse {
                line: 2,
                msg: format!("first bin width {delta} is not positive"),
            });
        }
        let tol = 1e-9 * (rows.last().unwrap().1.abs()).max(1.0);
        for (i, &(left, right, count)) in rows.iter().enumerate() {
            let line_no = i + 2;
            if (left - delta * i as f64).abs() > tol || (right - delta * (i + 1) as f64).abs() > tol
            {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!(
                        "bin ({left}, {right}] breaks the uniform tiling of width {delta}"
                    ),
                });
            }
            if count < 0.0 || !count.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("count {count} must be finite and ≥ 0"),
                });
            }
        }
        let n = rows.last().unwrap().1;
        GapHistogram::new(delta, rows.into_iter().map(|r| r.2).collect(), n)
    }
}

/// Unnormalized mass the gap law places on `(t0, t1]` at rates `r`:
/// `(e^{−λ₂t0} − e^{−λ₂t1}) − e^{−(λ₁+λ₂)N}(e^{λ₁t0} − e^{λ₁t1})`,
/// with the second bracket fused as `e^{λ₁(t−N) − λ₂N}`.
fn unnormalized_bin_mass(r: TwoStateRates, n: f64, t0: f64, t1: f64) -> f64 {
    let head = (-r.lambda2 * t0).exp() - (-r.lambda2 * t1).exp();
    let tail =
        (r.lambda1 * (t0 - n) - r.lambda2 * n).exp() - (r.lambda1 * (t1 - n) - r.lambda2 * n).exp();
    head - tail
}

/// Probabilities the constant-rate gap law assigns to the histogram's bins.
pub fn bin_masses(r: TwoStateRates, h: &GapHistogram) -> Vec<f64> {
    let z = 1.0 - (-(r.lambda1 + r.lambda2) * h.n).exp();
    let edges = h.edges();
    (0..h.m())
        .map(|i| unnormalized_bin_mass(r, h.n, edges[i], edges[i + 1]) / z)
        .collect()
}

/// Log-likelihood of the histogram under constant rates. Parameters that
/// drive any observed bin's probability to zero or below (e.g. by exponent
/// underflow far outside the feasible region) yield `−∞` — a sentinel the
/// optimizer treats as "infeasible", distinct from an error.
pub fn loglik_two_state(r: TwoStateRates, h: &GapHistogram) -> f64 {
    let z = 1.0 - (-(r.lambda1 + r.lambda2) * h.n).exp();
    if !(z > 0.0) {
        return f64::NEG_INFINITY;
    }
    let ln_z = z.ln();
    let edges = h.edges();
    let mut acc = 0.0;
    for i in 0..h.m() {
        if h.counts[i] == 0.0 {
            continue;
        }
        let g = unnormalized_bin_mass(r, h.n, edges[i], edges[i + 1]);
        if !(g > 0.0) || !g.is_finite() {
            return f64::NEG_INFINITY;
        }
        acc += h.counts[i] * (g.ln() - ln_z);
    }
    acc
}

/// Analytic gradient `(∂L/∂λ₁, ∂L/∂λ₂)` of [`loglik_two_state`], in the
/// same fused-exponent form. Used as a post-fit stationarity diagnostic.
pub fn loglik_gradient(r: TwoStateRates, h: &GapHistogram) -> (f64, f64) {
    let n = h.n;
    let e_full = (-(r.lambda1 + r.lambda2) * n).exp();
    let z = 1.0 - e_full;
    let dz = n * e_full; // ∂Z/∂λ₁ = ∂Z/∂λ₂
    let edges = h.edges();
    let total = h.total();
    let mut d1 = -total * dz / z;
    let mut d2 = d1;
    for i in 0..h.m() {
        if h.counts[i] == 0.0 {
            continue;
        }
        let (t0, t1) = (edges[i], edges[i + 1]);
        let g = unnormalized_bin_mass(r, n, t0, t1);
        // E·e^{λ₁t} and E·t·e^{λ₁t} without forming E or e^{λ₁t} separately.
        let fe0 = (r.lambda1 * (t0 - n) - r.lambda2 * n).exp();
        let fe1 = (r.lambda1 * (t1 - n) - r.lambda2 * n).exp();
        let dg1 = n * (fe0 - fe1) - (t0 * fe0 - t1 * fe1);
        let dg2 = -t0 * (-r.lambda2 * t0).exp() + t1 * (-r.lambda2 * t1).exp() + n * (fe0 - fe1);
        d1 += h.counts[i] * dg1 / g;
        d2 += h.counts[i] * dg2 / g;
    }
    (d1, d2)
}

/// Outcome of the constant-rate maximum-likelihood fit.
#[derive(Debug, Clone, Copy)]
pub struct MleResult {
    pub lambda1: f64,
    pub lambda2: f64,
    pub loglik: f64,
    /// Direct search shrank below the diameter threshold within budget.
    pub converged: bool,
    /// Objective evaluations spent.
    pub iterations: usize,
    /// Stationarity residuals `(∂L/∂λ₁, ∂L/∂λ₂)` at the returned point.
    pub grad: (f64, f64),
}

/// Log-rate box: the search never leaves `λ ∈ [e^{−LOG_BOX}, e^{LOG_BOX}]`.
const LOG_BOX: f64 = 30.0;
const MAX_EVALS: usize = 100_000;
const DIAMETER_TOL: f64 = 1e-8;

struct Objective<'a> {
    h: &'a GapHistogram,
    evals: usize,
}

impl Objective<'_> {
    /// Negative log-likelihood over log-rates, `+∞` outside the box.
    fn eval(&mut self, u: [f64; 2]) -> f64 {
        self.evals += 1;
        if u[0].abs() > LOG_BOX || u[1].abs() > LOG_BOX {
            return f64::INFINITY;
        }
        let r = TwoStateRates {
            lambda1: u[0].exp(),
            lambda2: u[1].exp(),
        };
        -loglik_two_state(r, self.h)
    }
}

/// One Nelder–Mead run from `start` with initial simplex edge `scale`;
/// returns the best vertex, its value, and whether the simplex diameter
/// dropped below the threshold within the evaluation budget.
fn nelder_mead(obj: &mut Objective<'_>, start: [f64; 2], scale: f64) -> ([f64; 2], f64, bool) {
    let mut simplex: Vec<([f64; 2], f64)> = vec![
        (start, 0.0),
        ([start[0] + scale, start[1]], 0.0),
        ([start[0], start[1] + scale], 0.0),
    ];
    for v in &mut simplex {
        v.1 = obj.eval(v.0);
    }
    let mut converged = false;
    while obj.evals < MAX_EVALS {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let diameter = simplex
            .iter()
            .flat_map(|a| {
                simplex
                    .iter()
                    .map(move |b| (a.0[0] - b.0[0]).abs().max((a.0[1] - b.0[1]).abs()))
            })
            .fold(0.0f64, f64::max);
        if diameter < DIAMETER_TOL {
            converged = true;
            break;
        }
        let (best, mid, worst) = (simplex[0], simplex[1], simplex[2]);
        let centroid = [0.5 * (best.0[0] + mid.0[0]), 0.5 * (best.0[1] + mid.0[1])];
        let shifted = |t: f64| {
            [
                centroid[0] + t * (centroid[0] - worst.0[0]),
                centroid[1] + t * (centroid[1] - worst.0[1]),
            ]
        };
        let reflected = shifted(1.0);
        let fr = obj.eval(reflected);
        let replacement = if fr < best.1 {
            let expanded = shifted(2.0);
            let fe = obj.eval(expanded);
            if fe < fr {
                (expanded, fe)
            } else {
                (reflected, fr)
            }
        } else if fr < mid.1 {
            (reflected, fr)
        } else {
            let contracted = if fr < worst.1 {
                shifted(0.5)
            } else {
                shifted(-0.5)
            };
            let fc = obj.eval(contracted);
            if fc < worst.1.min(fr) {
                (contracted, fc)
            } else {
                // Shrink toward the best vertex.
                for v in simplex.iter_mut().skip(1) {
                    v.0 = [0.5 * (v.0[0] + best.0[0]), 0.5 * (v.0[1] + best.0[1])];
                    v.1 = obj.eval(v.0);
                }
                continue;
            }
        };
        simplex[2] = replacement;
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    (simplex[0].0, simplex[0].1, converged)
}

/// Maximizes the histogram likelihood over `(λ₁, λ₂)` by Nelder–Mead
/// polytopes in log-rate space interleaved with coordinate-wise
/// golden-section polish. A single small simplex can collapse along a
/// likelihood ridge and stall far from the maximum, so the search is run
/// from the caller's initial point plus a fixed fan of log-space starts and
/// the best endpoint wins; this also makes the result effectively
/// init-independent. Runs single-threaded; budget `10⁵` evaluations,
/// convergence at simplex diameter `< 1e-8` (log scale). Non-convergence
/// returns the best point found with `converged = false` rather than an
/// error.
pub fn fit_mle(h: &GapHistogram, init: TwoStateRates) -> Result<MleResult> {
    if !(init.lambda2 > 0.0) {
        return Err(Error::InvalidInput(
            "initial rates must be strictly positive for the log-parameterization".into(),
        ));
    }
    let mut obj = Objective { h, evals: 0 };
    let starts: [[f64; 2]; 5] = [
        [init.lambda1.ln(), init.lambda2.ln()],
        [0.0, 0.0],
        [-2.3, -2.3],
        [0.7, -2.3],
        [-2.3, 0.7],
    ];
    let mut best: Option<([f64; 2], f64, bool)> = None;
    for (si, &s) in starts.iter().enumerate() {
        if si > 0 && obj.evals + 600 > MAX_EVALS {
            break;
        }
        let (mut u, mut fu, mut converged) = nelder_mead(&mut obj, s, 1.0);
        // Wide then narrow line searches to step off flat stretches, then a
        // tight polytope to finish.
        for &half in &[2.0, 0.5] {
            for coord in 0..2 {
                if obj.evals + 80 > MAX_EVALS {
                    break;
                }
                let (v, fv) = golden_section(&mut obj, u, coord, half);
                if fv < fu {
                    u = v;
                    fu = fv;
                }
            }
        }
        if obj.evals + 400 <= MAX_EVALS {
            let (u2, f2, c2) = nelder_mead(&mut obj, u, 0.05);
            if f2 <= fu {
                u = u2;
                fu = f2;
                converged = c2;
            }
        }
        if best.as_ref().map_or(true, |b| fu < b.1) {
            best = Some((u, fu, converged));
        }
    }
    let (u, fu, converged) = best.expect("at least the caller's start is evaluated");

    let rates = TwoStateRates {
        lambda1: u[0].exp(),
        lambda2: u[1].exp(),
    };
    Ok(MleResult {
        lambda1: rates.lambda1,
        lambda2: rates.lambda2,
        loglik: -fu,
        converged,
        iterations: obj.evals,
        grad: loglik_gradient(rates, h),
    })
}

/// Minimizes along one log-rate coordinate over `±half` around `at`.
fn golden_section(
    obj: &mut Objective<'_>,
    at: [f64; 2],
    coord: usize,
    half: f64,
) -> ([f64; 2], f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let probe = |obj: &mut Objective<'_>, x: f64| {
        let mut v = at;
        v[coord] = x;
        (v, obj.eval(v))
    };
    let (mut lo, mut hi) = (at[coord] - half, at[coord] + half);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut v1, mut f1) = probe(obj, x1);
    let (mut v2, mut f2) = probe(obj, x2);
    for _ in 0..36 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            v2 = v1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            (v1, f1) = probe(obj, x1);
        } else {
            lo = x1;
            x1 = x2;
            v1 = v2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            (v2, f2) = probe(obj, x2);
        }
    }
    if f1 <= f2 {
        (v1, f1)
    } else {
        (v2, f2)
    }
}

/// One unit convention under which the histogram can be read.
#[derive(Debug, Clone, Copy)]
pub struct UnitHypothesis {
    pub label: &'static str,
    pub delta: f64,
    pub n: f64,
}

/// The three unit conventions the scan tries: time measured in days, in
/// bins, or in payment intervals.
pub fn unit_hypotheses(h: &GapHistogram) -> [UnitHypothesis; 3] {
    let m = h.m() as f64;
    [
        UnitHypothesis {
            label: "per-day",
            delta: h.delta,
            n: h.n,
        },
        UnitHypothesis {
            label: "per-bin",
            delta: 1.0,
            n: m,
        },
        UnitHypothesis {
            label: "per-interval",
            delta: 1.0 / m,
            n: 1.0,
        },
    ]
}

/// Fit under one unit hypothesis.
#[derive(Debug, Clone)]
pub struct UnitScanRow {
    pub label: &'static str,
    pub result: MleResult,
    /// Fitted pair lies within `tol` of the reference pair.
    pub reproduces: bool,
}

/// Re-fits the histogram under each unit hypothesis and reports which, if
/// any, reproduces `reference` within `tol` componentwise. The likelihood
/// itself only fixes rates *relative* to the time unit, so a published pair
/// can be meaningful under one convention and not another; this records the
/// finding instead of guessing.
pub fn unit_scan(
    h: &GapHistogram,
    init: TwoStateRates,
    reference: TwoStateRates,
    tol: f64,
) -> Result<Vec<UnitScanRow>> {
    unit_hypotheses(h)
        .iter()
        .map(|hyp| {
            let rescaled = GapHistogram::new(hyp.delta, h.counts.clone(), hyp.n)?;
            let result = fit_mle(&rescaled, init)?;
            Ok(UnitScanRow {
                label: hyp.label,
                result,
                reproduces: (result.lambda1 - reference.lambda1).abs() <= tol
                    && (result.lambda2 - reference.lambda2).abs() <= tol,
            })
        })
        .collect()
}

/// Quantities the grid search holds fixed: the eigenstructure, the factor
/// parameters other than `(κ, σ, γ)`, the payment schedule, and the
/// truncation thresholds.
#[derive(Debug, Clone)]
pub struct GridBase {
    pub es: EigenStructure,
    pub theta: f64,
    pub lambda_j: f64,
    pub x0: f64,
    pub sched: PaymentSchedule,
    pub tail_eps: f64,
    pub prune_eps: f64,
}

/// A grid point that failed to evaluate, with the reason it was skipped.
#[derive(Debug, Clone)]
pub struct SkippedPoint {
    pub kappa: f64,
    pub sigma: f64,
    pub gamma: f64,
    pub reason: String,
}

/// Outcome of the `(κ, σ, γ)` grid search.
#[derive(Debug, Clone)]
pub struct GridFitResult {
    pub kappa: f64,
    pub sigma: f64,
    pub gamma: f64,
    /// Mean squared error over bins at the selected triple.
    pub mse: f64,
    pub kappa_grid: Vec<f64>,
    pub sigma_grid: Vec<f64>,
    pub gamma_grid: Vec<f64>,
    pub skipped: Vec<SkippedPoint>,
}

fn validate_grid(name: &str, grid: &[f64], allow_zero: bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidInput(format!("{name} grid is empty")));
    }
    for &v in grid {
        let ok = v.is_finite() && if allow_zero { v >= 0.0 } else { v > 0.0 };
        if !ok {
            return Err(Error::InvalidInput(format!(
                "{name} grid value {v} must be finite and {}",
                if allow_zero { "≥ 0" } else { "> 0" }
            )));
        }
    }
    Ok(())
}

/// Model probabilities of the histogram's bins under one parameter triple.
fn model_bin_probs(base: &GridBase, params: &AffineParams, edges: &[f64]) -> Result<Vec<f64>> {
    let survivals = gap_survival_batch(
        &base.es,
        params,
        &base.sched,
        edges,
        base.tail_eps,
        base.prune_eps,
    )?;
    Ok(survivals
        .windows(2)
        .map(|w| w[0].value - w[1].value)
        .collect())
}

/// Grid search of `(κ, σ, γ)` minimizing the mean squared error between
/// model bin probabilities and the histogram's frequencies. Points are
/// evaluated in parallel and reduced in lexicographic `(κ, σ, γ)` order, so
/// ties resolve to the lexicographically smallest triple; grid points whose
/// evaluation fails numerically are skipped and reported, not fatal.
pub fn fit_grid(
    h: &GapHistogram,
    base: &GridBase,
    kappa_grid: &[f64],
    sigma_grid: &[f64],
    gamma_grid: &[f64],
) -> Result<GridFitResult> {
    validate_grid("kappa", kappa_grid, false)?;
    validate_grid("sigma", sigma_grid, true)?;
    validate_grid("gamma", gamma_grid, true)?;
    if (h.n - base.sched.n).abs() > 1e-9 * base.sched.n {
        return Err(Error::InvalidInput(format!(
            "histogram covers N = {} but the schedule has N = {}",
            h.n, base.sched.n
        )));
    }
    let edges = h.edges();
    let freqs = h.frequencies();

    let mut triples = Vec::with_capacity(kappa_grid.len() * sigma_grid.len() * gamma_grid.len());
    for &kappa in kappa_grid {
        for &sigma in sigma_grid {
            for &gamma in gamma_grid {
                triples.push((kappa, sigma, gamma));
            }
        }
    }

    let outcomes = crate::parallel::map_ordered(&triples, |&(kappa, sigma, gamma)| {
        AffineParams::new(kappa, base.theta, sigma, base.lambda_j, gamma, base.x0)
            .and_then(|params| model_bin_probs(base, &params, &edges))
            .map(|probs| {
                probs
                    .iter()
                    .zip(&freqs)
                    .map(|(p, f)| (p - f).powi(2))
                    .sum::<f64>()
                    / probs.len() as f64
            })
    });

    let mut best: Option<(f64, f64, f64, f64)> = None;
    let mut skipped = Vec::new();
    for (&(kappa, sigma, gamma), outcome) in triples.iter().zip(outcomes) {
        match outcome {
            Ok(mse) if mse.is_finite() => {
                // Strict improvement keeps the earliest (lexicographically
                // smallest) triple on ties.
                if best.map_or(true, |b| mse < b.3) {
                    best = Some((kappa, sigma, gamma, mse));
                }
            }
            Ok(mse) => skipped.push(SkippedPoint {
                kappa,
                sigma,
                gamma,
                reason: format!("non-finite mse {mse}"),
            }),
            Err(e) => skipped.push(SkippedPoint {
                kappa,
                sigma,
                gamma,
                reason: e.to_string(),
            }),
        }
    }
    let (kappa, sigma, gamma, mse) = best.ok_or_else(|| {
        Error::EmptyLaw(format!(
            "all {} grid points failed; first: {}",
            triples.len(),
            skipped
                .first()
                .map(|s| s.reason.as_str())
                .unwrap_or("empty grid")
        ))
    })?;
    Ok(GridFitResult {
        kappa,
        sigma,
        gamma,
        mse,
        kappa_grid: kappa_grid.to_vec(),
        sigma_grid: sigma_grid.to_vec(),
        gamma_grid: gamma_grid.to_vec(),
        skipped,
    })
}

/// Mean squared error of the *constant-rate* two-state model against the
/// histogram — the degenerate-reduction oracle for [`fit_grid`] and the
/// comparison number quoted next to grid results.
pub fn constant_rate_mse(r: TwoStateRates, h: &GapHistogram) -> Result<f64> {
    let edges = h.edges();
    let freqs = h.frequencies();
    let mut acc = 0.0;
    for i in 0..h.m() {
        let p = two_state_gap_survival(r, h.n, edges[i])?
            - two_state_gap_survival(r, h.n, edges[i + 1])?;
        acc += (p - freqs[i]).powi(2);
    }
    Ok(acc / h.m() as f64)
}
