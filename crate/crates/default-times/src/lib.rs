//! Probability laws of economic vs. recorded default times.
//!
//! A firm's operating state follows a continuous-time Markov chain whose
//! last state is "default". Payments are due every `N` time units; default
//! is *recorded* at the first payment date the firm misses (`τ_r`), while
//! the *economic* default happened earlier, at the last instant the firm
//! was still operating (`τ_e`). This crate computes, simulates, and
//! calibrates the joint law of `(τ_e, τ_r)` and of the gap `τ_r − τ_e`:
//!
//! - [`markov_core`] — generators, transition matrices, and closed-form
//!   laws when transition rates are constant;
//! - [`affine_transform`] — the affine jump-diffusion factor driving
//!   stochastic rates and its exponential-moment coefficients;
//! - [`default_law`] — gap and recorded-date distributions under
//!   stochastic rates, via path enumeration and an exponential-sum
//!   recursion, plus the U-shape test;
//! - [`mc_oracle`] — independent Monte Carlo ground truth;
//! - [`calibrate`] — maximum-likelihood and grid-search fitting against
//!   binned gap data.
//!
//! Time units are the caller's: rates and `N` must share one unit per run;
//! nothing inside converts units.

pub mod affine_transform;
pub mod calibrate;
pub mod default_law;
pub mod error;
pub mod markov_core;
pub mod mc_oracle;
pub mod parallel;

pub use error::{Error, Result};

/// Formats a number with `sig` significant digits, trimming the trailing
/// zeros the `{:e}` notation would keep — the fixed text form used by every
/// CSV artifact so outputs are reproducible across platforms.
pub fn format_significant(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let formatted = format!("{:.*e}", sig.saturating_sub(1), x);
    // Split mantissa and exponent, trim the mantissa's trailing zeros.
    let (mantissa, exp) = formatted.split_once('e').expect("exponential form");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    let exp: i32 = exp.parse().expect("exponent");
    // Small exponents read better in plain decimal notation.
    if (-4..=15).contains(&exp) {
        let digits = sig as i32 - 1 - exp;
        let plain = format!("{:.*}", digits.max(0) as usize, x);
        if plain.contains('.') {
            return plain
                .trim_end_matches('0')
                .trim_end_matches('.')
                .to_string();
        }
        return plain;
    }
    format!("{mantissa}e{exp}")
}
