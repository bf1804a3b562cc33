//! Generator matrices, transition matrices, and the constant-rate laws of
//! the economic/recorded default times.
//!
//! The firm's state follows a continuous-time Markov chain on `{1, ..., K}`
//! with state `K` the default state. Payments happen every `N` time units;
//! the recorded default time `τ_r` is the first payment date at which the
//! chain sits in state `K`, and the economic default time `τ_e` is the last
//! time before `τ_r` at which it does not. This module covers the case of a
//! constant generator matrix `A`, where everything reduces to matrix
//! exponentials, plus the two-state closed forms used as fast paths and test
//! oracles throughout the crate.
//!
//! States are numbered `1..=K` in documentation and public signatures that
//! talk about states; storage is 0-based.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Tolerance for transition-matrix row sums (must be 1 within this).
pub const ROW_SUM_TOL: f64 = 1e-10;
/// Tolerance below which a slightly negative probability entry is accepted
/// as round-off.
pub const ENTRY_TOL: f64 = 1e-12;

/// A `K×K` transition-rate matrix: off-diagonal entries are the
/// instantaneous rates `λ_{i,j} ≥ 0`, each diagonal entry is the negated sum
/// of its row's off-diagonal part, so rows sum to zero exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    rates: DMatrix<f64>,
}

impl GeneratorMatrix {
    /// Validates and normalizes a rate matrix.
    ///
    /// The input must be square with `K ≥ 2`, all entries finite,
    /// off-diagonal entries nonnegative, and each row summing to zero within
    /// `1e-9` (relative to the row's magnitude). The diagonal is then
    /// recomputed as the exact negated off-diagonal sum so the row-sum
    /// invariant holds to the last bit.
    pub fn new(mut rates: DMatrix<f64>) -> Result<Self> {
        let (nr, nc) = rates.shape();
        if nr != nc {
            return Err(Error::InvalidInput(format!(
                "generator must be square, got {nr}×{nc}"
            )));
        }
        if nr < 2 {
            return Err(Error::InvalidInput(
                "generator needs at least 2 states".into(),
            ));
        }
        for i in 0..nr {
            let mut offdiag_sum = 0.0;
            let mut row_scale: f64 = 1.0;
            for j in 0..nc {
                let v = rates[(i, j)];
                if !v.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "non-finite rate at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                row_scale = row_scale.max(v.abs());
                if i != j {
                    if v < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "negative off-diagonal rate {} at ({}, {})",
                            v,
                            i + 1,
                            j + 1
                        )));
                    }
                    offdiag_sum += v;
                }
            }
            let row_sum = rates.row(i).sum();
            if row_sum.abs() > 1e-9 * row_scale {
                return Err(Error::InvalidInput(format!(
                    "row {} sums to {row_sum}, expected 0",
                    i + 1
                )));
            }
            rates[(i, i)] = -offdiag_sum;
        }
        Ok(Self { rates })
    }

    /// Builds a generator from full rows (diagonal entries included).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput("ragged rate rows".into()));
        }
        Self::new(DMatrix::from_fn(k, k, |i, j| rows[i][j]))
    }

    /// The two-state generator `[[−λ₁, λ₁], [λ₂, −λ₂]]`.
    pub fn from_two_state(r: TwoStateRates) -> Self {
        Self {
            rates: DMatrix::from_row_slice(2, 2, &[-r.lambda1, r.lambda1, r.lambda2, -r.lambda2]),
        }
    }

    /// Number of states `K`.
    pub fn k(&self) -> usize {
        self.rates.nrows()
    }

    /// The rate matrix itself.
    pub fn rates(&self) -> &DMatrix<f64> {
        &self.rates
    }

    /// Exit rate `λ_i = −a_{ii}` of 1-based state `i`.
    pub fn exit_rate(&self, state: usize) -> f64 {
        -self.rates[(state - 1, state - 1)]
    }
}

/// A `K×K` stochastic matrix `P(s,t)`: entry `(i,j)` is the probability of
/// being in state `j` at `t` given state `i` at `s`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    p: DMatrix<f64>,
}

impl TransitionMatrix {
    pub(crate) fn checked(p: DMatrix<f64>) -> Result<Self> {
        for i in 0..p.nrows() {
            let mut sum = 0.0;
            for j in 0..p.ncols() {
                let v = p[(i, j)];
                if !v.is_finite() || !(-ENTRY_TOL..=1.0 + ENTRY_TOL).contains(&v) {
                    return Err(Error::InvalidInput(format!(
                        "transition entry ({}, {}) = {v} outside [0, 1]",
                        i + 1,
                        j + 1
                    )));
                }
                sum += v;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!(
                    "transition row {} sums to {sum}",
                    i + 1
                )));
            }
        }
        Ok(Self { p })
    }

    /// Entry `(i, j)`, 0-based.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.p[(i, j)]
    }

    /// The underlying matrix.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.p
    }

    /// Copy with negative round-off clamped to `[0, 1]`, for presentation
    /// only. Computations stay on the raw matrix to preserve algebraic
    /// identities.
    pub fn clamped(&self) -> DMatrix<f64> {
        self.p.map(|v| v.clamp(0.0, 1.0))
    }
}

/// Rates of the two-state chain: `lambda1` is the default rate 1→2,
/// `lambda2` the recovery rate 2→1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoStateRates {
    pub lambda1: f64,
    pub lambda2: f64,
}

impl TwoStateRates {
    pub fn new(lambda1: f64, lambda2: f64) -> Result<Self> {
        if !(lambda1.is_finite() && lambda1 > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda1 must be finite and > 0, got {lambda1}"
            )));
        }
        if !(lambda2.is_finite() && lambda2 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda2 must be finite and ≥ 0, got {lambda2}"
            )));
        }
        Ok(Self { lambda1, lambda2 })
    }
}

/// Payment schedule: payments at `N, 2N, 3N, ...` plus the truncation index
/// used when an infinite sum over payment windows must be cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaymentSchedule {
    pub n: f64,
    pub i_max: usize,
}

impl PaymentSchedule {
    /// Default cap on the number of payment windows expanded by adaptive
    /// series truncation.
    pub const DEFAULT_I_MAX: usize = 25;

    pub fn new(n: f64, i_max: usize) -> Result<Self> {
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidInput(format!(
                "payment interval must be finite and > 0, got {n}"
            )));
        }
        if i_max < 1 {
            return Err(Error::InvalidInput("i_max must be ≥ 1".into()));
        }
        Ok(Self { n, i_max })
    }

    /// Schedule with the default truncation cap.
    pub fn with_default_cap(n: f64) -> Result<Self> {
        Self::new(n, Self::DEFAULT_I_MAX)
    }
}

/// Computes `exp(A·dt)` by scaling and squaring of a truncated Taylor
/// series: `A·dt` is halved until its infinity norm is ≤ 0.5, the series is
/// summed to machine precision, and the result squared back up. Robust and
/// accurate for the small dense generators used here (K ≤ 10).
pub fn matrix_exponential(a: &GeneratorMatrix, dt: f64) -> Result<TransitionMatrix> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt must be finite and ≥ 0, got {dt}"
        )));
    }
    TransitionMatrix::checked(expm(&(a.rates() * dt)))
}

/// Scaling-and-squaring Taylor exponential of an arbitrary square matrix.
/// Shared with the stochastic-rate machinery, which exponentiates matrices
/// that are not themselves generators (integrated eigenvalue diagonals are
/// handled elsewhere; this is for dense `M`).
pub(crate) fn expm(m: &DMatrix<f64>) -> DMatrix<f64> {
    let k = m.nrows();
    let norm = inf_norm(m);
    // Choose s with ‖M‖/2^s ≤ 0.5.
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = m / 2f64.powi(s as i32);

    // Taylor series of exp(scaled); at norm ≤ 0.5 this converges to machine
    // precision in well under 30 terms.
    let mut result = DMatrix::<f64>::identity(k, k);
    let mut term = DMatrix::<f64>::identity(k, k);
    for order in 1..=30 {
        term = (&term * &scaled) / order as f64;
        result += &term;
        if inf_norm(&term) < 1e-18 * inf_norm(&result) {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    result
}

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|i| m.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Closed-form two-state transition matrix over an interval of length `dt`:
///
/// ```text
/// P₁₁ = λ₁/(λ₁+λ₂)·e^{−(λ₁+λ₂)dt} + λ₂/(λ₁+λ₂)      P₁₂ = 1 − P₁₁
/// P₂₂ = λ₂/(λ₁+λ₂)·e^{−(λ₁+λ₂)dt} + λ₁/(λ₁+λ₂)      P₂₁ = 1 − P₂₂
/// ```
pub fn two_state_transition(r: TwoStateRates, dt: f64) -> Result<TransitionMatrix> {
    if !(dt.is_finite() && dt >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "dt must be finite and ≥ 0, got {dt}"
        )));
    }
    let s = r.lambda1 + r.lambda2;
    if s == 0.0 {
        return Err(Error::DegenerateInput(
            "lambda1 + lambda2 = 0: closed form divides by the total rate".into(),
        ));
    }
    let e = (-s * dt).exp();
    let p11 = r.lambda1 / s * e + r.lambda2 / s;
    let p22 = r.lambda2 / s * e + r.lambda1 / s;
    TransitionMatrix::checked(DMatrix::from_row_slice(
        2,
        2,
        &[p11, 1.0 - p11, 1.0 - p22, p22],
    ))
}

/// Probability that the economic default time falls in the window
/// `(N_i, N_i + t]` (and is recorded at `N_{i+1}`), under constant rates,
/// for a chain started in 1-based state `s0 < K`:
///
/// ```text
/// [ (P**)^i · P*(t) ]_{s0,K} · e^{−λ_K (N − t)}
/// ```
///
/// where `P** ` is `P(0,N)` with the default row and column deleted, `P*(t)`
/// is `P(0,t)` with the default row deleted, and the trailing factor is the
/// probability of staying in default from `N_i + t` through the next
/// payment date. The `i = 0` case uses the empty product (identity).
pub fn tau_e_interval_prob(
    a: &GeneratorMatrix,
    sched: &PaymentSchedule,
    i: usize,
    t: f64,
    s0: usize,
) -> Result<f64> {
    let k = a.k();
    if !(0.0..=sched.n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [0, N = {}]",
            sched.n
        )));
    }
    if s0 == 0 || s0 >= k {
        return Err(Error::InvalidInput(format!(
            "start state {s0} must satisfy 1 ≤ s0 ≤ K−1 = {}",
            k - 1
        )));
    }
    let p_n = matrix_exponential(a, sched.n)?;
    let p_t = matrix_exponential(a, t)?;

    // Row vector through (P**)^i: live-state block of P(0,N), applied i
    // times starting from the indicator of s0.
    let mut v = vec![0.0; k - 1];
    v[s0 - 1] = 1.0;
    for _ in 0..i {
        let mut next = vec![0.0; k - 1];
        for (col, slot) in next.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (row, &vr) in v.iter().enumerate() {
                acc += vr * p_n.entry(row, col);
            }
            *slot = acc;
        }
        v = next;
    }
    // Then one application of P*(t), keeping only the default column.
    let reach_default: f64 = v
        .iter()
        .enumerate()
        .map(|(row, &vr)| vr * p_t.entry(row, k - 1))
        .sum();
    let hold = (-a.exit_rate(k) * (sched.n - t)).exp();
    Ok(reach_default * hold)
}

/// `q`, the per-window probability that the chain is **not** caught in
/// default at the next payment date when starting live:
/// `q = λ₁/(λ₁+λ₂)·e^{−(λ₁+λ₂)N} + λ₂/(λ₁+λ₂)`.
pub fn two_state_payment_survival(r: TwoStateRates, n: f64) -> f64 {
    let s = r.lambda1 + r.lambda2;
    r.lambda1 / s * (-s * n).exp() + r.lambda2 / s
}

/// Survival function of the gap `τ_r − τ_e` for the two-state chain:
///
/// ```text
/// P(τ_r − τ_e > t) = (e^{−λ₂t} − e^{−(λ₁+λ₂)N}·e^{λ₁t}) / (1 − e^{−(λ₁+λ₂)N})
/// ```
///
/// The numerator's second term is evaluated as `e^{λ₁(t−N) − λ₂N}`, which
/// never overflows for `t ≤ N` and keeps the `t = N` cancellation exact.
pub fn two_state_gap_survival(r: TwoStateRates, n: f64, t: f64) -> Result<f64> {
    if !(0.0..=n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, N = {n}]")));
    }
    let den = 1.0 - (-(r.lambda1 + r.lambda2) * n).exp();
    if den <= 0.0 {
        return Err(Error::DegenerateInput(
            "survival denominator 1 − e^{−(λ₁+λ₂)N} vanishes".into(),
        ));
    }
    let num = (-r.lambda2 * t).exp() - (r.lambda1 * (t - n) - r.lambda2 * n).exp();
    Ok(num / den)
}

/// Density of the gap `τ_r − τ_e` on `(0, N)` for the two-state chain:
/// `f(t) = (λ₂·e^{−λ₂t} + λ₁·e^{−(λ₁+λ₂)N}·e^{λ₁t}) / (1 − e^{−(λ₁+λ₂)N})`,
/// the negated derivative of [`two_state_gap_survival`].
pub fn two_state_gap_density(r: TwoStateRates, n: f64, t: f64) -> Result<f64> {
    if !(0.0..=n).contains(&t) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("t = {t} outside [0, N = {n}]")));
    }
    let den = 1.0 - (-(r.lambda1 + r.lambda2) * n).exp();
    if den <= 0.0 {
        return Err(Error::DegenerateInput(
            "density denominator 1 − e^{−(λ₁+λ₂)N} vanishes".into(),
        ));
    }
    let num = r.lambda2 * (-r.lambda2 * t).exp()
        + r.lambda1 * (r.lambda1 * (t - n) - r.lambda2 * n).exp();
    Ok(num / den)
}

/// Law of the recorded default date: `P(τ_r = N_{i+1}) = q^i (1 − q)` with
/// `q` from [`two_state_payment_survival`]. Sums to 1 over `i ≥ 0`.
pub fn two_state_recorded_law(r: TwoStateRates, n: f64, i: usize) -> f64 {
    let q = two_state_payment_survival(r, n);
    q.powi(i as i32) * (1.0 - q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn table_rates() -> TwoStateRates {
        TwoStateRates::new(0.3631, 0.0238).unwrap()
    }

    #[test]
    fn exponential_of_zero_time_is_identity() {
        let a = GeneratorMatrix::from_rows(&[
            vec![-2.0, 1.5, 0.5],
            vec![0.25, -0.75, 0.5],
            vec![0.0, 0.0, 0.0],
        ])
        .unwrap();
        let p = matrix_exponential(&a, 0.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(p.entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn symmetric_two_state_matches_hand_value() {
        // λ₁ = λ₂ = 1, dt = ln(4)/2: P₁₁ = 0.5·e^{−2dt} + 0.5 = 0.625.
        let a = GeneratorMatrix::from_rows(&[vec![-1.0, 1.0], vec![1.0, -1.0]]).unwrap();
        let dt = 4f64.ln() / 2.0;
        let p = matrix_exponential(&a, dt).unwrap();
        assert_abs_diff_eq!(p.entry(0, 0), 0.625, epsilon = 1e-14);
        assert_abs_diff_eq!(p.entry(0, 1), 0.375, epsilon = 1e-14);

        let closed = two_state_transition(TwoStateRates::new(1.0, 1.0).unwrap(), dt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(p.entry(i, j), closed.entry(i, j), epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn long_horizon_rows_stay_stochastic() {
        let a = GeneratorMatrix::from_two_state(table_rates());
        let p = matrix_exponential(&a, 180.0).unwrap();
        for i in 0..2 {
            let sum = p.entry(i, 0) + p.entry(i, 1);
            assert_abs_diff_eq!(sum, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn matches_plain_taylor_series_at_small_time() {
        // Independent oracle: straight Taylor summation with no scaling,
        // valid at small dt where the series is strongly convergent.
        let a = GeneratorMatrix::from_rows(&[
            vec![-1.3, 0.4, 0.9],
            vec![0.2, -0.2, 0.0],
            vec![0.7, 0.1, -0.8],
        ])
        .unwrap();
        let dt = 0.01;
        let m = a.rates() * dt;
        let mut oracle = DMatrix::<f64>::identity(3, 3);
        let mut term = DMatrix::<f64>::identity(3, 3);
        for order in 1..=40 {
            term = (&term * &m) / order as f64;
            oracle += &term;
        }
        let p = matrix_exponential(&a, dt).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_abs_diff_eq!(p.entry(i, j), oracle[(i, j)], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn semigroup_property_holds() {
        let a = GeneratorMatrix::from_two_state(table_rates());
        let p1 = matrix_exponential(&a, 70.0).unwrap();
        let p2 = matrix_exponential(&a, 110.0).unwrap();
        let p12 = matrix_exponential(&a, 180.0).unwrap();
        let prod = p1.matrix() * p2.matrix();
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(prod[(i, j)], p12.entry(i, j), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn stationary_rows_in_the_long_run() {
        let r = table_rates();
        let s = r.lambda1 + r.lambda2;
        let p = two_state_transition(r, 1e6).unwrap();
        for i in 0..2 {
            assert_abs_diff_eq!(p.entry(i, 0), r.lambda2 / s, epsilon = 1e-12);
            assert_abs_diff_eq!(p.entry(i, 1), r.lambda1 / s, epsilon = 1e-12);
        }
    }

    #[test]
    fn zero_total_rate_is_rejected() {
        assert!(TwoStateRates::new(0.0, 0.0).is_err());
        // Defensive check inside the op for hand-built values.
        let degenerate = TwoStateRates {
            lambda1: 0.0,
            lambda2: 0.0,
        };
        assert!(matches!(
            two_state_transition(degenerate, 1.0),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn generator_validation_rejects_bad_rows() {
        assert!(GeneratorMatrix::from_rows(&[vec![-1.0, 0.5], vec![1.0, -1.0]]).is_err());
        assert!(GeneratorMatrix::from_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).is_err());
        assert!(GeneratorMatrix::from_rows(&[vec![-f64::NAN, f64::NAN], vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn interval_prob_is_zero_at_t_zero() {
        let a = GeneratorMatrix::from_two_state(table_rates());
        let sched = PaymentSchedule::with_default_cap(180.0).unwrap();
        for i in [0, 1, 5] {
            assert_eq!(tau_e_interval_prob(&a, &sched, i, 0.0, 1).unwrap(), 0.0);
        }
    }

    #[test]
    fn interval_prob_matches_two_state_closed_form() {
        // Closed-form oracle:
        // q^i · λ₁/(λ₁+λ₂) · (1 − e^{−(λ₁+λ₂)t}) · e^{−λ₂(N−t)}.
        let r = table_rates();
        let a = GeneratorMatrix::from_two_state(r);
        let sched = PaymentSchedule::with_default_cap(180.0).unwrap();

        let got = tau_e_interval_prob(&a, &sched, 2, 90.0, 1).unwrap();
        assert_abs_diff_eq!(got, 0.0004169895713028551, epsilon = 1e-12);

        let got0 = tau_e_interval_prob(&a, &sched, 0, 18.0, 1).unwrap();
        assert_abs_diff_eq!(got0, 0.019840429108220995, epsilon = 1e-12);
    }

    #[test]
    fn interval_prob_rejects_bad_arguments() {
        let a = GeneratorMatrix::from_two_state(table_rates());
        let sched = PaymentSchedule::with_default_cap(180.0).unwrap();
        assert!(tau_e_interval_prob(&a, &sched, 0, -1.0, 1).is_err());
        assert!(tau_e_interval_prob(&a, &sched, 0, 181.0, 1).is_err());
        assert!(tau_e_interval_prob(&a, &sched, 0, 90.0, 2).is_err());
        assert!(tau_e_interval_prob(&a, &sched, 0, 90.0, 0).is_err());
    }

    #[test]
    fn gap_survival_endpoints_are_exact() {
        let r = table_rates();
        assert_eq!(two_state_gap_survival(r, 180.0, 0.0).unwrap(), 1.0);
        assert_eq!(two_state_gap_survival(r, 180.0, 180.0).unwrap(), 0.0);
    }

    #[test]
    fn gap_survival_matches_frozen_values() {
        let r = table_rates();
        assert_abs_diff_eq!(
            two_state_gap_survival(r, 180.0, 90.0).unwrap(),
            0.11741976848862687,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            two_state_gap_survival(r, 180.0, 18.0).unwrap(),
            0.65155074237077366,
            epsilon = 1e-15
        );
    }

    #[test]
    fn gap_density_matches_frozen_values() {
        let r = table_rates();
        assert_abs_diff_eq!(
            two_state_gap_density(r, 180.0, 90.0).unwrap(),
            0.0027945904900293538,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            two_state_gap_density(r, 180.0, 0.0).unwrap(),
            0.0238,
            epsilon = 1e-15
        );
    }

    #[test]
    fn recorded_law_is_geometric() {
        let r = table_rates();
        let n = 180.0;
        let q = two_state_payment_survival(r, n);
        assert_abs_diff_eq!(q, 0.061514603256655467, epsilon = 1e-15);

        // Partial sums of q^i(1−q) telescope to 1 − q^{i_max+1} exactly.
        let i_max = 20;
        let partial: f64 = (0..=i_max).map(|i| two_state_recorded_law(r, n, i)).sum();
        assert_abs_diff_eq!(partial, 1.0 - q.powi(i_max as i32 + 1), epsilon = 1e-14);

        assert_abs_diff_eq!(
            two_state_recorded_law(r, n, 3),
            0.00021845510658916428,
            epsilon = 1e-15
        );
    }

    #[test]
    fn absorbed_chain_is_caught_at_first_payment() {
        // λ₂ = 0 with a huge horizon: default is absorbing and always
        // recorded at the first payment date.
        let r = TwoStateRates::new(0.7, 0.0).unwrap();
        assert_abs_diff_eq!(two_state_recorded_law(r, 1e6, 0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn recorded_law_consistent_with_interval_prob_at_full_window() {
        // P(τ_r = N_{i+1}) equals the interval probability at t = N.
        let r = table_rates();
        let a = GeneratorMatrix::from_two_state(r);
        let sched = PaymentSchedule::with_default_cap(1.0).unwrap();
        let via_interval = tau_e_interval_prob(&a, &sched, 3, 1.0, 1).unwrap();
        let via_geometric = two_state_recorded_law(r, 1.0, 3);
        assert_abs_diff_eq!(via_interval, via_geometric, epsilon = 1e-12);
        assert_abs_diff_eq!(via_geometric, 0.10279072808363834, epsilon = 1e-14);
    }
}
