//! LogSumExp smoothing of extrema.

use crate::error::{Error, Result};

/// Max-shifted parts of `(1/α)·log Σ exp(α·x_i)`: returns `(pivot, log_sum)`
/// with the result equal to `pivot + log_sum / α`, where `pivot` is the max
/// (α > 0) or min (α < 0) of `values` and `log_sum ∈ [0, ln n]`.
fn shifted(values: &[f64], alpha: f64) -> Result<(f64, f64)> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("LSE of an empty list".into()));
    }
    if alpha == 0.0 || alpha.is_nan() {
        return Err(Error::InvalidArgument(
            "LSE smoothing parameter must be nonzero".into(),
        ));
    }
    let pivot = if alpha > 0.0 {
        values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    } else {
        values.iter().copied().fold(f64::INFINITY, f64::min)
    };
    let sum: f64 = values.iter().map(|&v| (alpha * (v - pivot)).exp()).sum();
    Ok((pivot, sum.ln()))
}

/// `(1/α)·log Σ exp(α·x_i)`, a smooth maximum for α > 0 and a smooth minimum
/// for α < 0. Evaluated in shifted form, so no intermediate overflows.
pub fn lse(values: &[f64], alpha: f64) -> Result<f64> {
    let (pivot, log_sum) = shifted(values, alpha)?;
    Ok(pivot + log_sum / alpha)
}

/// `lse(values, α) − ln(n)/α`. For α > 0 this is a lower smoothing of the
/// max (never above it); for α < 0 an upper smoothing of the min.
pub fn lse_centered(values: &[f64], alpha: f64) -> Result<f64> {
    let (pivot, log_sum) = shifted(values, alpha)?;
    let n = values.len() as f64;
    Ok(pivot + (log_sum - n.ln()) / alpha)
}
