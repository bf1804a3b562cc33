//! Distributions of the economic default time, the recorded default date,
//! and their gap when transition rates are driven by the affine factor.
//!
//! The generator is `A_X(s) = B·diag(μ₁X_s, …, μ_{K−1}X_s, 0)·B⁻¹` with
//! constant eigenvector matrix `B`, so conditional transition matrices only
//! need the integrals `∫μ_k X_u du`. Averaging over the factor turns every
//! window probability into exponential moments of integrated `X`, i.e. into
//! the `(α, β)` coefficients of [`crate::affine_transform`]. Two equivalent
//! evaluation strategies are provided for the two-state chain:
//!
//! - explicit enumeration over the `2^{i+1}` live/default window patterns
//!   ([`tau_e_interval_prob_enumerated`]), transparent but exponential;
//! - a level-by-level recursion on exponential sums `Σ aⱼ·exp(bⱼX₀)`
//!   ([`tau_e_interval_prob_recursive`]), which prunes negligible terms
//!   with a certified error bound and scales to deep windows.
//!
//! On top of these sit the adaptive-truncation gap survival function, the
//! numerical gap density, and the closed-form U-shape test.

use nalgebra::DMatrix;

use crate::affine_transform::{AffineParams, TransformEngine};
use crate::error::{Error, Result};
use crate::markov_core::{GeneratorMatrix, PaymentSchedule, TransitionMatrix, TwoStateRates};

/// Default relative-mass threshold below which exponential-sum terms are
/// dropped (with their contribution added to the reported error bound).
pub const DEFAULT_PRUNE_EPS: f64 = 1e-14;
/// Default tail bound for adaptive truncation of sums over payment windows.
pub const DEFAULT_TAIL_EPS: f64 = 1e-6;
/// Deepest window index the explicit path enumeration will expand
/// (`2^{i+1}` patterns).
pub const ENUMERATION_I_MAX: usize = 12;

/// The eigenstructure `(B, B⁻¹, μ)` generating `A_X(s) = B·diag(μ·X_s)·B⁻¹`.
///
/// Admission checks that `B` is invertible, that `μ_K = 0` exactly, and
/// that the induced matrix is a valid generator (nonnegative off-diagonals,
/// zero row sums) at every point of a caller-supplied factor grid. Because
/// each entry of `B·diag(μ·x)·B⁻¹` is linear in `x`, signs checked at the
/// grid extremes hold for every factor value in between, and beyond the
/// largest grid point the off-diagonal signs cannot flip back; checking a
/// grid that brackets the factor's reachable range is therefore sufficient.
#[derive(Debug, Clone)]
pub struct EigenStructure {
    b: DMatrix<f64>,
    b_inv: DMatrix<f64>,
    mu: Vec<f64>,
}

impl EigenStructure {
    pub fn new(b: DMatrix<f64>, mu: Vec<f64>, validation_grid: &[f64]) -> Result<Self> {
        let k = mu.len();
        if b.nrows() != k || b.ncols() != k {
            return Err(Error::InvalidInput(format!(
                "B is {}×{} but μ has {} entries",
                b.nrows(),
                b.ncols(),
                k
            )));
        }
        if k < 2 {
            return Err(Error::InvalidInput("need at least 2 states".into()));
        }
        if b.iter().any(|v| !v.is_finite()) || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite entry in B or μ".into()));
        }
        if mu[k - 1] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "μ_K must be 0 exactly (default state generates no rates), got {}",
                mu[k - 1]
            )));
        }
        let b_inv = b
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("B is not invertible".into()))?;
        let identity_defect = (&b * &b_inv - DMatrix::<f64>::identity(k, k))
            .iter()
            .fold(0.0f64, |acc, v| acc.max(v.abs()));
        if identity_defect > 1e-10 {
            return Err(Error::InvalidInput(format!(
                "B·B⁻¹ deviates from identity by {identity_defect:e} (ill-conditioned B)"
            )));
        }
        let es = Self { b, b_inv, mu };
        for &x in validation_grid {
            es.check_generator_at(x)?;
        }
        Ok(es)
    }

    /// Grid admission check at one factor value.
    fn check_generator_at(&self, x: f64) -> Result<()> {
        let k = self.k();
        let a = self.raw_generator_at(x);
        for i in 0..k {
            let mut row_sum = 0.0;
            for j in 0..k {
                let v = a[(i, j)];
                row_sum += v;
                if i != j && v < -1e-10 {
                    return Err(Error::InvalidInput(format!(
                        "off-diagonal entry ({}, {}) = {v:e} of A_X(x) is negative at grid point x = {x}",
                        i + 1,
                        j + 1
                    )));
                }
            }
            if row_sum.abs() > 1e-10 {
                return Err(Error::InvalidInput(format!(
                    "row {} of A_X(x) sums to {row_sum:e} ≠ 0 at grid point x = {x}",
                    i + 1
                )));
            }
        }
        Ok(())
    }

    /// The admission grid used when only the factor parameters are known:
    /// `{0, x0, θ, θ + 5γ, 10·max(1, x0, θ + 5γ)}`. The last point dominates
    /// the others so the linear-in-`x` sign argument covers all larger `x`.
    pub fn default_validation_grid(params: &AffineParams) -> Vec<f64> {
        let spike = params.theta + 5.0 * params.gamma;
        vec![
            0.0,
            params.x0,
            params.theta,
            spike,
            10.0 * params.x0.max(spike).max(1.0),
        ]
    }

    /// The two-state structure reproducing constant rates `(λ₁, λ₂)` at
    /// `X ≡ 1`: `B = [[λ₁, 1], [−λ₂, 1]]`, `μ = (−(λ₁+λ₂), 0)`, for which
    /// `B·diag(μ₁x, 0)·B⁻¹ = [[−λ₁x, λ₁x], [λ₂x, −λ₂x]]`.
    pub fn from_two_state_rates(r: TwoStateRates) -> Self {
        let b = DMatrix::from_row_slice(2, 2, &[r.lambda1, 1.0, -r.lambda2, 1.0]);
        let mu = vec![-(r.lambda1 + r.lambda2), 0.0];
        Self::new(b, mu, &[0.0, 1.0, 10.0]).expect("two-state structure is always admissible")
    }

    pub fn k(&self) -> usize {
        self.mu.len()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn b_inv(&self) -> &DMatrix<f64> {
        &self.b_inv
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    fn raw_generator_at(&self, x: f64) -> DMatrix<f64> {
        let k = self.k();
        let diag = DMatrix::from_fn(k, k, |i, j| if i == j { self.mu[i] * x } else { 0.0 });
        &self.b * diag * &self.b_inv
    }

    /// The constant generator `A_X(x)` frozen at factor value `x`.
    pub fn generator_at(&self, x: f64) -> Result<GeneratorMatrix> {
        GeneratorMatrix::new(self.raw_generator_at(x))
    }

    /// The mixing coefficients of the two-state conditional transition
    /// matrix (products of `B` and `B⁻¹` entries).
    pub fn two_state_coeffs(&self) -> Result<TwoStateCoeffs> {
        if self.k() != 2 {
            return Err(Error::InvalidInput(format!(
                "two-state coefficients require K = 2, got K = {}",
                self.k()
            )));
        }
        let c = TwoStateCoeffs {
            m1: self.b[(0, 0)] * self.b_inv[(0, 0)],
            m2: self.b[(0, 1)] * self.b_inv[(1, 0)],
            n1: self.b[(0, 0)] * self.b_inv[(0, 1)],
            n2: self.b[(0, 1)] * self.b_inv[(1, 1)],
            p1: self.b[(1, 0)] * self.b_inv[(0, 1)],
            p2: self.b[(1, 1)] * self.b_inv[(1, 1)],
        };
        c.check()?;
        Ok(c)
    }
}

/// Entry products of `B` and `B⁻¹` for the two-state chain: the live-state
/// row of the conditional transition matrix is
/// `P₁₁ = m₁e^{∫μ₁X} + m₂e^{∫μ₂X}`, `P₁₂ = n₁e^{∫μ₁X} + n₂e^{∫μ₂X}`, and
/// the default row uses `p₁, p₂` likewise.
#[derive(Debug, Clone, Copy)]
pub struct TwoStateCoeffs {
    pub m1: f64,
    pub m2: f64,
    pub n1: f64,
    pub n2: f64,
    pub p1: f64,
    pub p2: f64,
}

impl TwoStateCoeffs {
    fn check(&self) -> Result<()> {
        for (what, got, want) in [
            ("m₁+m₂", self.m1 + self.m2, 1.0),
            ("n₁+n₂", self.n1 + self.n2, 0.0),
            ("p₁+p₂", self.p1 + self.p2, 1.0),
        ] {
            if (got - want).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!(
                    "coefficient identity {what} = {got} deviates from {want}"
                )));
            }
        }
        Ok(())
    }
}

/// A live/default window pattern `(e₀, …, e_i)` with entries in `{1, 2}`:
/// the state occupied at the start of each payment window before default is
/// recorded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PathVector {
    pub e: Vec<u8>,
}

impl PathVector {
    pub fn new(e: Vec<u8>) -> Result<Self> {
        if e.is_empty() || e.iter().any(|&s| s != 1 && s != 2) {
            return Err(Error::InvalidInput(
                "path entries must be in {1, 2} and nonempty".into(),
            ));
        }
        Ok(Self { e })
    }

    /// All `2^{i+1}` patterns of length `i + 1`, in lexicographic order.
    pub fn all(i: usize) -> Vec<PathVector> {
        let len = i + 1;
        (0..(1usize << len))
            .map(|bits| PathVector {
                e: (0..len)
                    .map(|pos| 1 + ((bits >> (len - 1 - pos)) & 1) as u8)
                    .collect(),
            })
            .collect()
    }
}

/// A value represented as `Σⱼ aⱼ·exp(bⱼ·X₀)`.
#[derive(Debug, Clone, Default)]
pub struct ExpSum {
    /// `(coefficient, exponent-per-unit-X₀)` pairs.
    pub terms: Vec<(f64, f64)>,
}

impl ExpSum {
    pub fn eval(&self, x0: f64) -> f64 {
        self.terms.iter().map(|&(a, b)| a * (b * x0).exp()).sum()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// An [`ExpSum`] together with the certified bound on the evaluation error
/// introduced by pruning.
#[derive(Debug, Clone)]
pub struct PrunedExpSum {
    pub sum: ExpSum,
    /// Bound on `|eval(pruned) − eval(unpruned)|` at the engine's `X₀`.
    pub dropped_bound: f64,
}

/// Shared per-call context: transform engine plus the two-state ladder
/// coefficients.
struct Ladder {
    engine: TransformEngine,
    mu: [f64; 2],
    m: [f64; 2],
    n: [f64; 2],
    /// `R` of the recorded-window exponent: `p₁μ₁ + p₂μ₂` (the default
    /// row's rate of slipping back to life, negated per unit factor).
    r_def: f64,
    x0: f64,
}

impl Ladder {
    fn new(es: &EigenStructure, params: &AffineParams) -> Result<Self> {
        if es.k() != 2 {
            return Err(Error::InvalidInput(format!(
                "stochastic-rate default laws are implemented for K = 2, got K = {}",
                es.k()
            )));
        }
        let c = es.two_state_coeffs()?;
        Ok(Self {
            engine: TransformEngine::new(*params),
            mu: [es.mu[0], es.mu[1]],
            m: [c.m1, c.m2],
            n: [c.n1, c.n2],
            r_def: c.p1 * es.mu[0] + c.p2 * es.mu[1],
            x0: params.x0,
        })
    }

    fn coeffs(&self, r: f64, w: f64, s: f64) -> Result<(f64, f64)> {
        let c = self.engine.coeffs(r, w, s)?;
        Ok((c.alpha, c.beta))
    }
}

/// Probability that the economic default time falls in `(N_i, N_i + t]`
/// (recorded at `N_{i+1}`), by explicit enumeration of the `2^{i+1}`
/// live/default window patterns.
///
/// Each pattern `e` contributes `n_{e_i}·Π_{j<i} m_{e_j}` times the
/// exponential moment of its integrated-rate schedule, which is evaluated
/// by chaining `(α, β)` solutions backwards: the recorded stretch of length
/// `N − t` seeds `w`, the window of length `t` where economic default
/// happens comes next, and each earlier full window of length `N` feeds the
/// one before it.
pub fn tau_e_interval_prob_enumerated(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    i: usize,
    t: f64,
) -> Result<f64> {
    if i > ENUMERATION_I_MAX {
        return Err(Error::EnumerationLimit(format!(
            "window index {i} expands 2^{} patterns; use tau_e_interval_prob_recursive",
            i + 1
        )));
    }
    if !(0.0..=sched.n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [0, N = {}]",
            sched.n
        )));
    }
    let lad = Ladder::new(es, params)?;
    let n = sched.n;

    let mut total = 0.0;
    for path in PathVector::all(i) {
        let e = &path.e;
        let weight: f64 = lad.n[(e[i] - 1) as usize]
            * e[..i]
                .iter()
                .map(|&s| lad.m[(s - 1) as usize])
                .product::<f64>();
        // Backward ladder: recorded stretch, then the default window, then
        // the earlier full windows in reverse.
        let (mut alpha_sum, mut w) = lad.coeffs(lad.r_def, 0.0, n - t)?;
        let (a, b) = lad.coeffs(lad.mu[(e[i] - 1) as usize], w, t)?;
        alpha_sum += a;
        w = b;
        for &s in e[..i].iter().rev() {
            let (a, b) = lad.coeffs(lad.mu[(s - 1) as usize], w, n)?;
            alpha_sum += a;
            w = b;
        }
        total += weight * (alpha_sum + w * lad.x0).exp();
    }
    Ok(total)
}

/// Merges terms with bit-identical exponents (children of distinct parents
/// often coincide) and drops terms whose coefficient is below
/// `prune_eps · Σ|a|`, accumulating the certified evaluation-error bound.
fn prune_and_merge(
    terms: Vec<(f64, f64)>,
    prune_eps: f64,
    x0: f64,
    dropped: &mut f64,
) -> Vec<(f64, f64)> {
    use std::collections::BTreeMap;
    let mut merged: BTreeMap<u64, f64> = BTreeMap::new();
    for (a, b) in terms {
        *merged.entry(b.to_bits()).or_insert(0.0) += a;
    }
    let total: f64 = merged.values().map(|a| a.abs()).sum();
    let cut = prune_eps * total;
    let mut out = Vec::with_capacity(merged.len());
    for (bits, a) in merged {
        let b = f64::from_bits(bits);
        if a.abs() < cut {
            // Conservative bound on the dropped term's value at X₀; later
            // levels cannot amplify it because level factors carry total
            // mass ≤ 1 for nonpositive exponents.
            *dropped += a.abs() * (b * x0).exp().max(1.0);
        } else {
            out.push((a, b));
        }
    }
    out
}

/// Exponential-sum state advanced one payment window at a time. Level `i`
/// holds the representation of `P(τ_e ∈ (N_i, N_i + t'])` for the fixed
/// offset `t'` chosen at the base.
struct LevelChain<'a> {
    lad: &'a Ladder,
    terms: Vec<(f64, f64)>,
    dropped: f64,
    prune_eps: f64,
    level: usize,
}

impl<'a> LevelChain<'a> {
    /// Base level `i = 0`: one term per final live/default pattern entry,
    /// `a = n_k·exp(α(N−t'; R_def, 0) + α(t'; μ_k, β(N−t'; R_def, 0)))` and
    /// `b = β(t'; μ_k, β(N−t'; R_def, 0))`.
    fn base(lad: &'a Ladder, n: f64, t_prime: f64, prune_eps: f64) -> Result<Self> {
        let (a_tail, w_tail) = lad.coeffs(lad.r_def, 0.0, n - t_prime)?;
        let mut terms = Vec::with_capacity(2);
        for k in 0..2 {
            let (av, bv) = lad.coeffs(lad.mu[k], w_tail, t_prime)?;
            terms.push((lad.n[k] * (a_tail + av).exp(), bv));
        }
        let mut dropped = 0.0;
        let terms = prune_and_merge(terms, prune_eps, lad.x0, &mut dropped);
        Ok(Self {
            lad,
            terms,
            dropped,
            prune_eps,
            level: 0,
        })
    }

    /// Prepends one more full live window: each term `(a, b)` spawns
    /// `(m_k·a·exp(α(N; μ_k, b)), β(N; μ_k, b))` for `k ∈ {1, 2}`.
    fn advance(&mut self, n: f64) -> Result<()> {
        let mut next = Vec::with_capacity(2 * self.terms.len());
        for &(a, b) in &self.terms {
            for k in 0..2 {
                let (av, bv) = self
                    .lad
                    .coeffs(self.lad.mu[k], b, n)
                    .map_err(|e| attach_level(e, self.level + 1))?;
                next.push((self.lad.m[k] * a * av.exp(), bv));
            }
        }
        self.terms = prune_and_merge(next, self.prune_eps, self.lad.x0, &mut self.dropped);
        self.level += 1;
        Ok(())
    }

    fn eval(&self) -> f64 {
        self.terms
            .iter()
            .map(|&(a, b)| a * (b * self.lad.x0).exp())
            .sum()
    }
}

fn attach_level(e: Error, level: usize) -> Error {
    match e {
        Error::TransformDivergence { s, reason } => Error::TransformDivergence {
            s,
            reason: format!("{reason} (while advancing exponential-sum level {level})"),
        },
        other => other,
    }
}

/// Probability that the economic default time falls in `(N_i, N_i + t]`,
/// as an exponential sum in `X₀`, built by the level recursion with
/// relative-mass pruning. `prune_eps = 0` keeps every term (up to exact
/// merging of coinciding exponents).
pub fn tau_e_interval_prob_recursive(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    i: usize,
    t: f64,
    prune_eps: f64,
) -> Result<PrunedExpSum> {
    if !(0.0..=sched.n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [0, N = {}]",
            sched.n
        )));
    }
    if !(prune_eps.is_finite() && prune_eps >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "prune_eps must be finite and ≥ 0, got {prune_eps}"
        )));
    }
    let lad = Ladder::new(es, params)?;
    let mut chain = LevelChain::base(&lad, sched.n, t, prune_eps)?;
    for _ in 0..i {
        chain.advance(sched.n)?;
    }
    Ok(PrunedExpSum {
        sum: ExpSum {
            terms: chain.terms.clone(),
        },
        dropped_bound: chain.dropped,
    })
}

/// Gap survival value plus the realized truncation bound.
#[derive(Debug, Clone, Copy)]
pub struct GapSurvival {
    pub value: f64,
    /// Unaccounted recorded-date mass `1 − Σ P(τ_r = N_{i+1})` at the stop
    /// index — an upper bound on the truncation error.
    pub tail_bound: f64,
}

/// `P(τ_r − τ_e > t) = Σ_{i≥0} P(τ_e ∈ (N_i, N_{i+1} − t])`, truncated
/// adaptively: windows are added until the unaccounted recorded-date mass
/// drops below `tail_eps` (the same mass that bounds the discarded tail).
pub fn gap_survival(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    t: f64,
    tail_eps: f64,
) -> Result<GapSurvival> {
    gap_survival_with_prune(es, params, sched, t, tail_eps, DEFAULT_PRUNE_EPS)
}

/// [`gap_survival`] with an explicit pruning threshold.
pub fn gap_survival_with_prune(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    t: f64,
    tail_eps: f64,
    prune_eps: f64,
) -> Result<GapSurvival> {
    if !(0.0..=sched.n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [0, N = {}]",
            sched.n
        )));
    }
    if !(tail_eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail_eps must be > 0, got {tail_eps}"
        )));
    }
    let lad = Ladder::new(es, params)?;
    // Two synchronized level chains over the same windows: one at offset
    // N − t accumulates the survival sum, one at offset N accumulates
    // recorded-date mass for the stopping rule.
    let mut value_chain = LevelChain::base(&lad, sched.n, sched.n - t, prune_eps)?;
    let mut mass_chain = LevelChain::base(&lad, sched.n, sched.n, prune_eps)?;
    let mut value = 0.0;
    let mut mass = 0.0;
    for i in 0..=sched.i_max {
        value += value_chain.eval();
        mass += mass_chain.eval();
        let tail = 1.0 - mass;
        if tail < tail_eps {
            return Ok(GapSurvival {
                value,
                tail_bound: tail.max(0.0),
            });
        }
        if i < sched.i_max {
            value_chain.advance(sched.n)?;
            mass_chain.advance(sched.n)?;
        }
    }
    Err(Error::TruncationFailure {
        achieved: 1.0 - mass,
        requested: tail_eps,
        terms: sched.i_max + 1,
    })
}

/// [`gap_survival`] evaluated at many offsets with one shared transform
/// engine: the adaptive stop index is determined once from the recorded-date
/// masses and every offset is summed to that index. Intended for callers
/// that sweep bin edges per parameter point (calibration, curve export).
pub fn gap_survival_batch(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    ts: &[f64],
    tail_eps: f64,
    prune_eps: f64,
) -> Result<Vec<GapSurvival>> {
    if !(tail_eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail_eps must be > 0, got {tail_eps}"
        )));
    }
    for &t in ts {
        if !(0.0..=sched.n).contains(&t) || !t.is_finite() {
            return Err(Error::InvalidInput(format!(
                "t = {t} outside [0, N = {}]",
                sched.n
            )));
        }
    }
    let lad = Ladder::new(es, params)?;
    // Stop index from the recorded-date masses.
    let mut mass_chain = LevelChain::base(&lad, sched.n, sched.n, prune_eps)?;
    let mut mass = 0.0;
    let mut stop = None;
    for i in 0..=sched.i_max {
        mass += mass_chain.eval();
        let tail = 1.0 - mass;
        if tail < tail_eps {
            stop = Some((i, tail.max(0.0)));
            break;
        }
        if i < sched.i_max {
            mass_chain.advance(sched.n)?;
        }
    }
    let (stop, tail_bound) = stop.ok_or(Error::TruncationFailure {
        achieved: 1.0 - mass,
        requested: tail_eps,
        terms: sched.i_max + 1,
    })?;
    let per_point: Vec<Result<GapSurvival>> = crate::parallel::map_ordered(ts, |&t| {
        let mut chain = LevelChain::base(&lad, sched.n, sched.n - t, prune_eps)?;
        let mut value = chain.eval();
        for _ in 0..stop {
            chain.advance(sched.n)?;
            value += chain.eval();
        }
        Ok(GapSurvival { value, tail_bound })
    });
    per_point.into_iter().collect()
}

/// `P(τ_r = N_{i+1})` for `i = 0, 1, …`, listed until the unaccounted mass
/// drops below `tail_eps`.
pub fn recorded_default_masses(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    tail_eps: f64,
) -> Result<Vec<f64>> {
    if !(tail_eps > 0.0) {
        return Err(Error::InvalidInput(format!(
            "tail_eps must be > 0, got {tail_eps}"
        )));
    }
    let lad = Ladder::new(es, params)?;
    let mut chain = LevelChain::base(&lad, sched.n, sched.n, DEFAULT_PRUNE_EPS)?;
    let mut masses = Vec::new();
    let mut cum = 0.0;
    for i in 0..=sched.i_max {
        let m = chain.eval();
        masses.push(m);
        cum += m;
        if 1.0 - cum < tail_eps {
            return Ok(masses);
        }
        if i < sched.i_max {
            chain.advance(sched.n)?;
        }
    }
    Err(Error::TruncationFailure {
        achieved: 1.0 - cum,
        requested: tail_eps,
        terms: sched.i_max + 1,
    })
}

/// One point of the gap distribution curve.
#[derive(Debug, Clone, Copy)]
pub struct GapCurvePoint {
    pub t: f64,
    pub survival: f64,
    pub density: f64,
    pub tail_bound: f64,
}

/// Survival, density, and truncation bound on a uniform `grid_points`-point
/// grid over `[0, N]`. Survival values are computed per grid point (in
/// parallel, deterministically reduced); the density is the negated central
/// difference, one-sided at the two endpoints.
pub fn gap_curve(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    grid_points: usize,
    tail_eps: f64,
    prune_eps: f64,
) -> Result<Vec<GapCurvePoint>> {
    if grid_points < 3 {
        return Err(Error::InvalidInput(format!(
            "grid needs ≥ 3 points, got {grid_points}"
        )));
    }
    let h = sched.n / (grid_points - 1) as f64;
    let ts: Vec<f64> = (0..grid_points)
        .map(|j| {
            if j + 1 == grid_points {
                sched.n
            } else {
                j as f64 * h
            }
        })
        .collect();
    // One shared ladder (and coefficient memo) across the whole grid; the
    // batch parallelizes over the evaluation points internally.
    let s = gap_survival_batch(es, params, sched, &ts, tail_eps, prune_eps)?;
    let density = |j: usize| -> f64 {
        if j == 0 {
            (s[0].value - s[1].value) / h
        } else if j + 1 == grid_points {
            (s[j - 1].value - s[j].value) / h
        } else {
            (s[j - 1].value - s[j + 1].value) / (2.0 * h)
        }
    };
    Ok((0..grid_points)
        .map(|j| GapCurvePoint {
            t: ts[j],
            survival: s[j].value,
            density: density(j),
            tail_bound: s[j].tail_bound,
        })
        .collect())
}

/// `(t, density)` pairs of the gap density on a uniform grid over `[0, N]`,
/// with the default truncation and pruning thresholds.
pub fn gap_density_curve(
    es: &EigenStructure,
    params: &AffineParams,
    sched: &PaymentSchedule,
    grid_points: usize,
) -> Result<Vec<(f64, f64)>> {
    Ok(gap_curve(
        es,
        params,
        sched,
        grid_points,
        DEFAULT_TAIL_EPS,
        DEFAULT_PRUNE_EPS,
    )?
    .into_iter()
    .map(|p| (p.t, p.density))
    .collect())
}

/// Truth values and numeric slack of the two sufficient conditions for a
/// U-shaped gap density of the constant-rate two-state chain:
///
/// - falling at 0:  `e^{−(λ₁+λ₂)N/2}·λ₁ − λ₂ ≤ 0`
/// - rising at N:  `λ₁ − λ₂ ≥ 0`
///
/// Together with the (unconditional) convexity of the density these give an
/// interior minimum.
#[derive(Debug, Clone, Copy)]
pub struct UShapeCheck {
    /// Condition "density falls at t = 0" holds.
    pub falls_at_zero: bool,
    /// Condition "density rises at t = N" holds.
    pub rises_at_end: bool,
    /// `λ₂ − e^{−(λ₁+λ₂)N/2}·λ₁` (≥ 0 iff the first condition holds).
    pub slack_at_zero: f64,
    /// `λ₁ − λ₂` (≥ 0 iff the second condition holds).
    pub slack_at_end: f64,
}

impl UShapeCheck {
    /// Both sufficient conditions hold.
    pub fn is_u_shaped(&self) -> bool {
        self.falls_at_zero && self.rises_at_end
    }
}

/// Evaluates the two U-shape conditions for rates `(λ₁, λ₂)` and payment
/// interval `N`.
pub fn check_ushape(r: TwoStateRates, n: f64) -> UShapeCheck {
    let slack_at_zero = r.lambda2 - (-(r.lambda1 + r.lambda2) * n / 2.0).exp() * r.lambda1;
    let slack_at_end = r.lambda1 - r.lambda2;
    UShapeCheck {
        falls_at_zero: slack_at_zero >= 0.0,
        rises_at_end: slack_at_end >= 0.0,
        slack_at_zero,
        slack_at_end,
    }
}

/// Conditional transition matrix given the realized integrals
/// `∫ μ_k X_u du` over an interval: `B·diag(e^{∫μ_k X})·B⁻¹`.
pub fn eigen_transition(es: &EigenStructure, integrated_mu: &[f64]) -> Result<TransitionMatrix> {
    let k = es.k();
    if integrated_mu.len() != k {
        return Err(Error::InvalidInput(format!(
            "expected {k} integrated eigenvalue entries, got {}",
            integrated_mu.len()
        )));
    }
    if integrated_mu[k - 1] != 0.0 {
        return Err(Error::InvalidInput(
            "last integrated entry must be 0 (μ_K ≡ 0)".into(),
        ));
    }
    let diag = DMatrix::from_fn(
        k,
        k,
        |i, j| {
            if i == j {
                integrated_mu[i].exp()
            } else {
                0.0
            }
        },
    );
    TransitionMatrix::checked(&es.b * diag * &es.b_inv)
}
