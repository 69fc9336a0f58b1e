use super::harmonic::harmonic_numbers;
use crate::error::{Error, Result};
use crate::model::check_probability;

fn check_wr(p: f64, k: usize) -> Result<()> {
    check_probability(p)?;
    if k == 0 {
        return Err(Error::CutoffOutOfRange { k, len: 0 });
    }
    Ok(())
}

/// Expected AP@k (normalized by `k`) for i.i.d. Bernoulli(p) relevance:
/// `p (p + (1-p) H_k / k)`.
pub fn wr_expectation(p: f64, k: usize) -> Result<f64> {
    check_wr(p, k)?;
    let h = harmonic_numbers(k)?.h1;
    Ok(p * (p + (1.0 - p) * h / k as f64))
}

/// Variance of AP@k (normalized by `k`) for i.i.d. Bernoulli(p) relevance.
pub fn wr_variance(p: f64, k: usize) -> Result<f64> {
    check_wr(p, k)?;
    if p == 0.0 || p == 1.0 {
        return Ok(0.0);
    }
    let h = harmonic_numbers(k)?;
    let kf = k as f64;
    let q = 1.0 - p;
    let leading = 5.0 / kf * p.powi(3) * q;
    let inner = p * (1.0 - 2.0 * p) * (3.0 * h.h1 + h.h1 * h.h1) + q * (1.0 - 3.0 * p) * h.h2;
    Ok(leading + p * q * inner / (kf * kf))
}
