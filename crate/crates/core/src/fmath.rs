//! Float functions that `core` does not provide.

pub(crate) use libm::{cosh, erf, exp, log as ln, sinh, sqrt};

/// `ln Σ exp(x_k)` without overflow.
pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + ln(xs.iter().map(|&x| exp(x - max)).sum::<f64>())
}
