//! Distribution-level invariants of the gap and recorded-default laws that
//! cut across modules: monotonicity, mass conservation, and reduction of
//! the stochastic-rate machinery to the constant-rate closed forms.

use default_times::affine_transform::AffineParams;
use default_times::default_law::{
    gap_curve, gap_survival, recorded_default_masses, EigenStructure, DEFAULT_PRUNE_EPS,
    DEFAULT_TAIL_EPS,
};
use default_times::markov_core::{two_state_gap_survival, PaymentSchedule, TwoStateRates};
use nalgebra::DMatrix;

fn heavy_structure() -> (EigenStructure, AffineParams, PaymentSchedule) {
    let params = AffineParams::new(1.0, 1.0, 9.0, 0.2, 3.6, 1.0).unwrap();
    let b = DMatrix::from_row_slice(2, 2, &[-0.9997, -0.7071, 0.0246, -0.7071]);
    let grid = EigenStructure::default_validation_grid(&params);
    let es = EigenStructure::new(b, vec![-0.5120, 0.0], &grid).unwrap();
    (es, params, PaymentSchedule::new(180.0, 25).unwrap())
}

#[test]
fn gap_survival_is_monotone_decreasing_with_pinned_endpoints() {
    let (es, params, sched) = heavy_structure();
    let curve = gap_curve(
        &es,
        &params,
        &sched,
        61,
        DEFAULT_TAIL_EPS,
        DEFAULT_PRUNE_EPS,
    )
    .unwrap();
    assert!((curve[0].survival - 1.0).abs() <= curve[0].tail_bound + 1e-12);
    assert_eq!(curve.last().unwrap().survival, 0.0);
    for w in curve.windows(2) {
        assert!(
            w[1].survival <= w[0].survival + 1e-12,
            "survival rises between t = {} and t = {}",
            w[0].t,
            w[1].t
        );
    }
}

#[test]
fn recorded_mass_partial_sums_are_monotone_and_bounded_by_one() {
    let (es, params, sched) = heavy_structure();
    let masses = recorded_default_masses(&es, &params, &sched, 1e-9).unwrap();
    let mut partial = 0.0;
    for (i, &m) in masses.iter().enumerate() {
        assert!(m >= -1e-15, "negative mass {m} at window {i}");
        partial += m;
        assert!(
            partial <= 1.0 + 1e-9,
            "partial sum {partial} exceeds 1 at window {i}"
        );
    }
    assert!(
        1.0 - partial <= 1e-9,
        "series stopped early: total {partial}"
    );

    // Same invariant where the factor is frozen at 1 and the law is the
    // constant-rate geometric one.
    let es = EigenStructure::from_two_state_rates(TwoStateRates::new(0.3631, 0.0238).unwrap());
    let params = AffineParams::constant_unit();
    let masses = recorded_default_masses(&es, &params, &sched, 1e-9).unwrap();
    let mut partial = 0.0;
    for &m in &masses {
        partial += m;
        assert!(partial <= 1.0 + 1e-9);
    }
    assert!(1.0 - partial <= 1e-9);
}

#[test]
fn degenerate_factor_reduces_to_the_constant_rate_closed_form() {
    let params = AffineParams::constant_unit();
    for (lambda1, lambda2) in [(0.3631, 0.0238), (1.5, 0.4), (0.05, 0.9), (2.0, 0.0)] {
        let r = TwoStateRates::new(lambda1, lambda2).unwrap();
        let es = EigenStructure::from_two_state_rates(r);
        for n in [10.0, 180.0] {
            // Recovery-heavy pairs put most recorded-default mass hundreds
            // of windows out, so give the adaptive truncation room.
            let sched = PaymentSchedule::new(n, 800).unwrap();
            for frac in [0.0, 0.2, 0.5, 0.8, 1.0] {
                let t = frac * n;
                let got = gap_survival(&es, &params, &sched, t, 1e-10).unwrap().value;
                let want = two_state_gap_survival(r, n, t).unwrap();
                assert!(
                    (got - want).abs() <= 1e-8,
                    "survival mismatch at rates ({lambda1}, {lambda2}), N = {n}, t = {t}: \
                     {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn tighter_tail_budgets_change_the_value_within_the_reported_bounds() {
    let (es, params, sched) = heavy_structure();
    for t in [18.0, 90.0, 162.0] {
        let loose = gap_survival(&es, &params, &sched, t, 1e-4).unwrap();
        let tight = gap_survival(&es, &params, &sched, t, 1e-9).unwrap();
        assert!(loose.tail_bound <= 1e-4);
        assert!(tight.tail_bound <= 1e-9);
        assert!(
            (loose.value - tight.value).abs() <= loose.tail_bound + tight.tail_bound,
            "refinement moved the value at t = {t} by more than the certified bounds"
        );
    }
}
