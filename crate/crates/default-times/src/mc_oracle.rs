//! Monte Carlo ground truth for the analytic laws: simulate the affine
//! factor, the conditional chain given the factor, and the empirical laws
//! of `(τ_e, τ_r)`.
//!
//! The factor follows a full-truncation Euler scheme on a uniform grid that
//! is snapped to an integer number of steps per payment window. The chain
//! is simulated under the generator frozen at the left grid node of each
//! step; *within* a step it is advanced by exact exponential holding times,
//! so the economic default time is located in continuous time rather than
//! rounded to the grid (the frozen-generator transition law over the step
//! is the same either way, but no within-step location bias is introduced).
//!
//! Every path owns two counter-indexed RNG streams derived from
//! `(seed, path_index)` — one for the factor, one for the chain — so results
//! are bit-identical for any worker count and [`empirical_gap_law`] is
//! exactly the composition of [`simulate_factor`] and [`simulate_chain`].

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::affine_transform::AffineParams;
use crate::default_law::EigenStructure;
use crate::error::{Error, Result};
use crate::markov_core::PaymentSchedule;

/// Default censoring horizon: paths with no recorded default within this
/// many payment dates are counted as censored.
pub const DEFAULT_HORIZON: usize = 50;

/// Simulation controls shared by every path.
#[derive(Debug, Clone, Copy)]
pub struct SimConfig {
    pub n_paths: usize,
    /// Requested step for the factor grid and intensity integration; the
    /// effective step is `N / round-up(N / dt)` so payment dates land on
    /// grid nodes exactly.
    pub dt: f64,
    pub seed: u64,
    /// Number of payment dates before a path is censored.
    pub horizon: usize,
}

impl SimConfig {
    pub fn new(n_paths: usize, dt: f64, seed: u64, horizon: usize) -> Result<Self> {
        if n_paths < 1 {
            return Err(Error::InvalidInput("n_paths must be ≥ 1".into()));
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt must be finite and > 0, got {dt}"
            )));
        }
        if horizon < 1 {
            return Err(Error::InvalidInput("horizon must be ≥ 1".into()));
        }
        Ok(Self {
            n_paths,
            dt,
            seed,
            horizon,
        })
    }

    /// Checks the step against the payment window (`0 < dt ≤ N/10`).
    pub fn validate_against(&self, sched: &PaymentSchedule) -> Result<()> {
        if self.dt > sched.n / 10.0 {
            return Err(Error::InvalidInput(format!(
                "dt = {} exceeds N/10 = {}",
                self.dt,
                sched.n / 10.0
            )));
        }
        Ok(())
    }

    /// Number of grid steps per payment window after snapping.
    pub fn steps_per_window(&self, n: f64) -> usize {
        let ratio = n / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() < 1e-9 * ratio.max(1.0) {
            rounded as usize
        } else {
            ratio.ceil() as usize
        }
    }
}

/// One ChaCha stream of the family indexed by `(seed, stream)`.
fn stream_rng(seed: u64, stream: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Exponential with the given mean, safe at `u = 0`.
fn sample_exp(rng: &mut ChaCha12Rng, mean: f64) -> f64 {
    -mean * (1.0 - rng.gen::<f64>()).ln()
}

/// Poisson count by inverse-CDF multiplication; exact and cheap for the
/// small per-step intensities `λ_J·dt` that arise here.
fn sample_poisson(rng: &mut ChaCha12Rng, intensity: f64) -> u64 {
    if intensity <= 0.0 {
        return 0;
    }
    let floor = (-intensity).exp();
    let mut k = 0u64;
    let mut p = 1.0f64;
    loop {
        p *= rng.gen::<f64>();
        if p <= floor {
            return k;
        }
        k += 1;
    }
}

/// Advances the factor by one Euler step, consuming randomness in a fixed
/// layout: one normal iff `σ > 0`, then the jump block iff `λ_J·γ > 0`
/// (zero-intensity and zero-size jumps both contribute nothing and are
/// skipped identically).
fn factor_step(params: &AffineParams, x: f64, dt: f64, rng: &mut ChaCha12Rng) -> f64 {
    let xf = x.max(0.0);
    let mut next = x + params.kappa * (params.theta - xf) * dt;
    if params.sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        next += params.sigma * (xf * dt).sqrt() * z;
    }
    if params.lambda_j > 0.0 && params.gamma > 0.0 {
        let jumps = sample_poisson(rng, params.lambda_j * dt);
        for _ in 0..jumps {
            next += sample_exp(rng, params.gamma);
        }
    }
    next
}

/// Simulates one factor path on the snapped grid over `[0, horizon·N]`,
/// reported as the truncated (nonnegative) values used by drift, diffusion,
/// and transition rates. Path `path_index` of the run `(cfg.seed, …)`.
pub fn simulate_factor(
    params: &AffineParams,
    cfg: &SimConfig,
    sched: &PaymentSchedule,
    path_index: u64,
) -> Result<Vec<f64>> {
    cfg.validate_against(sched)?;
    let spw = cfg.steps_per_window(sched.n);
    let dt = sched.n / spw as f64;
    let steps = spw * cfg.horizon;
    let mut rng = stream_rng(cfg.seed, 2 * path_index);
    let mut path = Vec::with_capacity(steps + 1);
    let mut x = params.x0;
    path.push(x.max(0.0));
    for _ in 0..steps {
        x = factor_step(params, x, dt, &mut rng);
        path.push(x.max(0.0));
    }
    Ok(path)
}

/// Per-state exit rates and jump destinations of the unit-factor generator,
/// precomputed once per run. `A_X(x) = x·A_X(1)` because every entry is
/// linear in the factor.
struct ChainRates {
    k: usize,
    /// Off-diagonal rates at unit factor, row-major.
    rates: Vec<f64>,
    /// Row sums of the off-diagonal rates at unit factor.
    exits: Vec<f64>,
}

impl ChainRates {
    fn new(es: &EigenStructure) -> Result<Self> {
        let generator = es.generator_at(1.0)?;
        let k = generator.k();
        let mut rates = vec![0.0; k * k];
        let mut exits = vec![0.0; k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let r = generator.rates()[(i, j)].max(0.0);
                    rates[i * k + j] = r;
                    exits[i] += r;
                }
            }
        }
        Ok(Self { k, rates, exits })
    }

    /// Destination of a jump out of `state` (0-based), by cumulative scan.
    fn destination(&self, state: usize, rng: &mut ChaCha12Rng) -> usize {
        let u = rng.gen::<f64>() * self.exits[state];
        let mut cum = 0.0;
        for j in 0..self.k {
            if j == state {
                continue;
            }
            cum += self.rates[state * self.k + j];
            if u < cum {
                return j;
            }
        }
        // Rounding pushed u past the last positive rate; take it.
        (0..self.k)
            .rev()
            .find(|&j| j != state && self.rates[state * self.k + j] > 0.0)
            .unwrap_or(state)
    }
}

/// Chain state advanced through one grid step under the generator frozen at
/// factor value `xf`, by exact exponential holding times. Updates the
/// last-entry-into-default time when the chain enters state `K`.
#[allow(clippy::too_many_arguments)]
fn chain_step(
    rates: &ChainRates,
    state: &mut usize,
    xf: f64,
    step_start: f64,
    dt: f64,
    last_default_entry: &mut f64,
    rng: &mut ChaCha12Rng,
) {
    let mut remaining = dt;
    let mut local = 0.0;
    loop {
        let exit = rates.exits[*state] * xf;
        if exit <= 0.0 {
            return;
        }
        let hold = sample_exp(rng, 1.0 / exit);
        if hold >= remaining {
            return;
        }
        local += hold;
        remaining -= hold;
        let dest = rates.destination(*state, rng);
        if dest == rates.k - 1 {
            *last_default_entry = step_start + local;
        }
        *state = dest;
    }
}

/// Simulates the chain along a prepared factor path; returns
/// `Some((τ_e, τ_r))` on recorded default, `None` if censored. Path
/// `path_index` of the run; the chain consumes the sibling stream of the
/// factor stream, so composing with [`simulate_factor`] reproduces
/// [`empirical_gap_law`] exactly.
pub fn simulate_chain(
    es: &EigenStructure,
    xpath: &[f64],
    sched: &PaymentSchedule,
    cfg: &SimConfig,
    path_index: u64,
    s0: usize,
) -> Result<Option<(f64, f64)>> {
    cfg.validate_against(sched)?;
    let rates = ChainRates::new(es)?;
    validate_start_state(s0, rates.k)?;
    let spw = cfg.steps_per_window(sched.n);
    if xpath.len() < spw * cfg.horizon + 1 {
        return Err(Error::InvalidInput(format!(
            "factor path has {} nodes but the horizon needs {}",
            xpath.len(),
            spw * cfg.horizon + 1
        )));
    }
    let mut rng = stream_rng(cfg.seed, 2 * path_index + 1);
    Ok(run_chain(&rates, sched, cfg, s0, &mut rng, |step| {
        xpath[step]
    }))
}

fn validate_start_state(s0: usize, k: usize) -> Result<()> {
    if s0 == 0 || s0 >= k {
        return Err(Error::InvalidInput(format!(
            "start state {s0} must be a live state in 1..{k} (K = {k} is the default state)"
        )));
    }
    Ok(())
}

/// Core chain loop over `horizon` payment windows; `factor_at(step)` yields
/// the truncated factor value at the left node of global step index `step`.
fn run_chain(
    rates: &ChainRates,
    sched: &PaymentSchedule,
    cfg: &SimConfig,
    s0: usize,
    rng: &mut ChaCha12Rng,
    factor_at: impl FnMut(usize) -> f64,
) -> Option<(f64, f64)> {
    let mut factor_at = factor_at;
    let spw = cfg.steps_per_window(sched.n);
    let dt = sched.n / spw as f64;
    let default_state = rates.k - 1;
    let mut state = s0 - 1;
    let mut last_default_entry = f64::NAN;
    for window in 0..cfg.horizon {
        for k in 0..spw {
            let step = window * spw + k;
            let xf = factor_at(step);
            chain_step(
                rates,
                &mut state,
                xf,
                step as f64 * dt,
                dt,
                &mut last_default_entry,
                rng,
            );
        }
        if state == default_state {
            let tau_r = (window + 1) as f64 * sched.n;
            return Some((last_default_entry, tau_r));
        }
    }
    None
}

/// Empirical law of `(τ_e, τ_r)` aggregated over paths.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalLaw {
    /// Realized gaps `τ_r − τ_e`, in path order, censored paths excluded.
    pub gap_samples: Vec<f64>,
    /// `recorded_counts[i]` counts paths with `τ_r = N_{i+1}`.
    pub recorded_counts: Vec<u64>,
    pub censored: u64,
    pub n_paths: u64,
    /// Payment window length, kept for binning.
    pub window: f64,
}

impl EmpiricalLaw {
    pub fn defaulted(&self) -> u64 {
        self.n_paths - self.censored
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.n_paths as f64
    }

    /// Conditional empirical survival `P(τ_r − τ_e > t | default recorded)`
    /// with its binomial standard error.
    pub fn gap_survival_at(&self, t: f64) -> (f64, f64) {
        let n = self.gap_samples.len() as f64;
        if n == 0.0 {
            return (f64::NAN, f64::NAN);
        }
        let hits = self.gap_samples.iter().filter(|&&g| g > t).count() as f64;
        let p = hits / n;
        (p, (p * (1.0 - p) / n).sqrt())
    }

    /// Gap-sample counts over `bins` equal cells of `[0, N]`.
    pub fn bin_counts(&self, bins: usize) -> Result<Vec<u64>> {
        if bins == 0 {
            return Err(Error::InvalidInput("need at least one bin".into()));
        }
        if self.gap_samples.is_empty() {
            return Err(Error::EmptyLaw("no uncensored paths to bin".into()));
        }
        let width = self.window / bins as f64;
        let mut counts = vec![0u64; bins];
        for &g in &self.gap_samples {
            let cell = ((g / width) as usize).min(bins - 1);
            counts[cell] += 1;
        }
        Ok(counts)
    }

    /// Histogram of the gap samples over `bins` equal cells of `[0, N]` as
    /// CSV with columns `bin_left, bin_right, count, frequency, std_err`.
    pub fn to_csv(&self, bins: usize) -> Result<String> {
        let counts = self.bin_counts(bins)?;
        let n_def = self.gap_samples.len();
        let width = self.window / bins as f64;
        let mut out = String::from("bin_left,bin_right,count,frequency,std_err\n");
        for (i, &c) in counts.iter().enumerate() {
            let f = c as f64 / n_def as f64;
            let se = (f * (1.0 - f) / n_def as f64).sqrt();
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                crate::format_significant(i as f64 * width, 12),
                crate::format_significant((i + 1) as f64 * width, 12),
                c,
                crate::format_significant(f, 12),
                crate::format_significant(se, 12),
            ));
        }
        Ok(out)
    }
}

/// Simulates `cfg.n_paths` independent `(factor, chain)` pairs starting
/// from live state `s0` and aggregates the empirical law. Paths are
/// independent work items; they are fanned out over the worker pool and
/// merged in path order, so the result is bit-identical for any thread
/// count and equal to composing [`simulate_factor`] with [`simulate_chain`]
/// path by path.
pub fn empirical_gap_law(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    cfg: &SimConfig,
    s0: usize,
) -> Result<EmpiricalLaw> {
    cfg.validate_against(sched)?;
    let rates = ChainRates::new(es)?;
    validate_start_state(s0, rates.k)?;
    let spw = cfg.steps_per_window(sched.n);
    let dt = sched.n / spw as f64;

    let indices: Vec<u64> = (0..cfg.n_paths as u64).collect();
    let outcomes = crate::parallel::map_ordered(&indices, |&p| {
        // Fused per-path run: the factor advances in lockstep with the
        // chain instead of being materialized, consuming the same two
        // streams as the public single-path operations.
        let mut rng_x = stream_rng(cfg.seed, 2 * p);
        let mut rng_s = stream_rng(cfg.seed, 2 * p + 1);
        let mut x = params.x0;
        run_chain(&rates, sched, cfg, s0, &mut rng_s, |_| {
            let xf = x.max(0.0);
            x = factor_step(params, x, dt, &mut rng_x);
            xf
        })
    });

    let mut law = EmpiricalLaw {
        gap_samples: Vec::with_capacity(cfg.n_paths),
        recorded_counts: vec![0; cfg.horizon],
        censored: 0,
        n_paths: cfg.n_paths as u64,
        window: sched.n,
    };
    for outcome in outcomes {
        match outcome {
            Some((tau_e, tau_r)) => {
                law.gap_samples.push(tau_r - tau_e);
                let i = (tau_r / sched.n).round() as usize - 1;
                law.recorded_counts[i] += 1;
            }
            None => law.censored += 1,
        }
    }
    if law.gap_samples.is_empty() {
        return Err(Error::EmptyLaw(format!(
            "all {} paths were censored within {} payment dates",
            cfg.n_paths, cfg.horizon
        )));
    }
    Ok(law)
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and
/// the continuous CDF `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max((i + 1) as f64 / n - f);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::default_law::EigenStructure;
    use crate::markov_core::{two_state_gap_survival, TwoStateRates};

    fn reference_rates() -> TwoStateRates {
        TwoStateRates::new(0.3631, 0.0238).unwrap()
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(0, 0.1, 1, 50).is_err());
        assert!(SimConfig::new(10, 0.0, 1, 50).is_err());
        assert!(SimConfig::new(10, 0.1, 1, 0).is_err());
        let cfg = SimConfig::new(10, 19.0, 1, 50).unwrap();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        assert!(cfg.validate_against(&sched).is_err()); // dt > N/10
        let cfg = SimConfig::new(10, 18.0, 1, 50).unwrap();
        assert!(cfg.validate_against(&sched).is_ok());
        assert_eq!(cfg.steps_per_window(180.0), 10);
        // Snapping: N/1800 divides exactly; 0.07 rounds the count up.
        let fine = SimConfig::new(1, 0.1, 1, 1).unwrap();
        assert_eq!(fine.steps_per_window(180.0), 1800);
        let odd = SimConfig::new(1, 0.07, 1, 1).unwrap();
        assert_eq!(odd.steps_per_window(180.0), 2572);
    }

    #[test]
    fn deterministic_factor_relaxes_to_theta() {
        // σ = λ_J = 0 leaves the Euler recursion for dX = κ(θ−X)dt, whose
        // error against θ + (x0−θ)e^{−κt} is O(dt).
        let params = AffineParams::new(1.4, 1.0, 0.0, 0.0, 0.0, 3.0).unwrap();
        let sched = PaymentSchedule::new(10.0, 25).unwrap();
        let cfg = SimConfig::new(1, 0.01, 9, 1).unwrap();
        let path = simulate_factor(&params, &cfg, &sched, 0).unwrap();
        assert_eq!(path.len(), 1001);
        let max_err = path
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let t = k as f64 * 0.01;
                (x - (1.0 + 2.0 * (-1.4 * t).exp())).abs()
            })
            .fold(0.0f64, f64::max);
        assert!(max_err < 5.0 * 1.4 * 2.0 * 0.01, "max error {max_err}");
    }

    #[test]
    fn square_root_diffusion_reaches_stationary_mean() {
        // At t = 10/κ the transient (x0−θ)e^{−κt} is ~5e−5; the sample
        // mean over 10⁵ paths must bracket θ within 3 standard errors.
        let params = AffineParams::new(1.0, 1.0, 0.5, 0.0, 0.0, 0.3).unwrap();
        let sched = PaymentSchedule::new(10.0, 25).unwrap();
        let cfg = SimConfig::new(100_000, 0.01, 4, 1).unwrap();
        let indices: Vec<u64> = (0..cfg.n_paths as u64).collect();
        let finals = crate::parallel::map_ordered(&indices, |&p| {
            *simulate_factor(&params, &cfg, &sched, p)
                .unwrap()
                .last()
                .unwrap()
        });
        let n = finals.len() as f64;
        let mean: f64 = finals.iter().sum::<f64>() / n;
        let var: f64 = finals.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se = (var / n).sqrt();
        let expected = 1.0 + (0.3 - 1.0) * (-10.0f64).exp();
        assert!(
            (mean - expected).abs() < 3.0 * se,
            "mean {mean} vs {expected} (se {se})"
        );
    }

    #[test]
    fn zero_mean_jumps_match_zero_intensity_exactly() {
        let sched = PaymentSchedule::new(10.0, 25).unwrap();
        let cfg = SimConfig::new(1, 0.05, 123, 2).unwrap();
        let no_jumps = AffineParams::new(1.0, 1.0, 2.0, 0.0, 0.7, 0.5).unwrap();
        let zero_size = AffineParams::new(1.0, 1.0, 2.0, 0.3, 0.0, 0.5).unwrap();
        let live = AffineParams::new(1.0, 1.0, 2.0, 0.3, 0.5, 0.5).unwrap();
        let a = simulate_factor(&no_jumps, &cfg, &sched, 7).unwrap();
        let b = simulate_factor(&zero_size, &cfg, &sched, 7).unwrap();
        let c = simulate_factor(&live, &cfg, &sched, 7).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn constant_rate_gap_law_matches_closed_form() {
        let r = reference_rates();
        let es = EigenStructure::from_two_state_rates(r);
        let params = AffineParams::constant_unit();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let cfg = SimConfig::new(100_000, 0.1, 42, 50).unwrap();
        let law = empirical_gap_law(&es, &params, &sched, &cfg, 1).unwrap();

        assert_eq!(
            law.recorded_counts.iter().sum::<u64>() + law.censored,
            law.n_paths
        );
        assert!(law.gap_samples.iter().all(|&g| (0.0..=180.0).contains(&g)));
        // With q ≈ 0.0615 the chance of surviving 50 payment dates is
        // ~1e−61; essentially nothing is censored.
        assert!(law.censored < 5, "censored {}", law.censored);

        for t in [0.0, 45.0, 90.0] {
            let (est, se) = law.gap_survival_at(t);
            let truth = two_state_gap_survival(r, 180.0, t).unwrap();
            let slack = 3.0 * se.max(1e-12);
            assert!(
                (est - truth).abs() <= slack,
                "t = {t}: {est} vs {truth} (3se = {slack})"
            );
        }

        // Distribution-level agreement: one-sample KS test at the exact law.
        let d = ks_distance(&law.gap_samples, |t| {
            1.0 - two_state_gap_survival(r, 180.0, t.clamp(0.0, 180.0)).unwrap()
        });
        let bound = 1.63 / (law.gap_samples.len() as f64).sqrt();
        assert!(d < bound, "KS distance {d} ≥ {bound}");

        // Recorded dates are geometric: compare the first mass.
        let q = crate::markov_core::two_state_payment_survival(r, 180.0);
        let f0 = law.recorded_counts[0] as f64 / law.defaulted() as f64;
        let p0 = (1.0 - q) / (1.0 - law.censored_fraction());
        assert!((f0 - p0).abs() < 0.005, "first recorded mass {f0} vs {p0}");
    }

    #[test]
    fn refining_the_step_moves_estimates_less_than_noise() {
        let es = EigenStructure::from_two_state_rates(reference_rates());
        let params = AffineParams::constant_unit();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let coarse = SimConfig::new(100_000, 0.1, 12, 50).unwrap();
        let fine = SimConfig::new(100_000, 0.05, 12, 50).unwrap();
        let (a, sa) = empirical_gap_law(&es, &params, &sched, &coarse, 1)
            .unwrap()
            .gap_survival_at(90.0);
        let (b, sb) = empirical_gap_law(&es, &params, &sched, &fine, 1)
            .unwrap()
            .gap_survival_at(90.0);
        // Standard error of the difference of the two independent runs.
        let se_diff = (sa * sa + sb * sb).sqrt();
        assert!((a - b).abs() < se_diff, "|{a} − {b}| ≥ {se_diff}");
    }

    #[test]
    fn no_live_exit_rate_censors_every_path() {
        // λ₁(x) ≡ 0: the live state is absorbing, so no default can occur.
        let b = nalgebra::DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -0.05, 1.0]);
        let es = EigenStructure::new(b, vec![-0.05, 0.0], &[0.0, 1.0]).unwrap();
        let params = AffineParams::constant_unit();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let cfg = SimConfig::new(200, 18.0, 5, 3).unwrap();
        match empirical_gap_law(&es, &params, &sched, &cfg, 1) {
            Err(Error::EmptyLaw(msg)) => assert!(msg.contains("censored")),
            other => panic!("expected empty-law error, got {other:?}"),
        }
    }

    #[test]
    fn default_start_state_is_rejected() {
        let es = EigenStructure::from_two_state_rates(reference_rates());
        let params = AffineParams::constant_unit();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let cfg = SimConfig::new(10, 18.0, 5, 3).unwrap();
        for bad in [0usize, 2, 3] {
            assert!(
                empirical_gap_law(&es, &params, &sched, &cfg, bad).is_err(),
                "s0 = {bad} accepted"
            );
        }
    }

    #[test]
    fn aggregate_law_composes_from_single_path_operations() {
        let b = nalgebra::DMatrix::from_row_slice(2, 2, &[-0.9997, -0.7071, 0.0246, -0.7071]);
        let es = EigenStructure::new(b, vec![-0.5120, 0.0], &[0.0, 1.0, 19.0, 100.0]).unwrap();
        let params = AffineParams::new(1.0, 1.0, 9.0, 0.2, 3.6, 1.0).unwrap();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let cfg = SimConfig::new(40, 1.0, 77, 6).unwrap();
        let law = empirical_gap_law(&es, &params, &sched, &cfg, 1).unwrap();

        let mut gaps = Vec::new();
        let mut censored = 0;
        for p in 0..40 {
            let xpath = simulate_factor(&params, &cfg, &sched, p).unwrap();
            match simulate_chain(&es, &xpath, &sched, &cfg, p, 1).unwrap() {
                Some((te, tr)) => gaps.push(tr - te),
                None => censored += 1,
            }
        }
        assert_eq!(law.gap_samples, gaps);
        assert_eq!(law.censored, censored);

        // And the whole aggregation is reproducible bit for bit.
        let again = empirical_gap_law(&es, &params, &sched, &cfg, 1).unwrap();
        assert_eq!(law, again);
        let other_seed = SimConfig::new(40, 1.0, 78, 6).unwrap();
        let different = empirical_gap_law(&es, &params, &sched, &other_seed, 1).unwrap();
        assert_ne!(law, different);
    }

    #[test]
    fn single_path_law_and_csv_shape() {
        let es = EigenStructure::from_two_state_rates(reference_rates());
        let params = AffineParams::constant_unit();
        let sched = PaymentSchedule::new(180.0, 25).unwrap();
        let cfg = SimConfig::new(1, 18.0, 40, 50).unwrap();
        let law = empirical_gap_law(&es, &params, &sched, &cfg, 1).unwrap();
        assert_eq!(law.gap_samples.len(), 1);
        let csv = law.to_csv(10).unwrap();
        let mut lines = csv.lines();
        assert_eq!(
            lines.next().unwrap(),
            "bin_left,bin_right,count,frequency,std_err"
        );
        assert_eq!(lines.count(), 10);
        let total: u64 = csv
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 1);
    }

    #[test]
    fn ks_distance_of_exact_uniform_grid() {
        // Midpoints of n equal cells give the minimal distance 1/(2n).
        let samples: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        let d = ks_distance(&samples, |x| x.clamp(0.0, 1.0));
        assert!((d - 0.05).abs() < 1e-12, "d = {d}");
    }
}
