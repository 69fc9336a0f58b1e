use serde::{Deserialize, Serialize};

use super::harmonic::harmonic_numbers;
use crate::error::{Error, Result};
use crate::metric::Normalization;
use crate::oracle;

/// Coefficients of the WOR variance expression.
///
/// With `q1 = m/N`, `q2 = (m-1)/(N-1)`, `q3 = (m-2)/(N-2)`, `q4 = (m-3)/(N-3)`
/// the per-position covariance terms reduce to
/// `Var(P@i I_i) = q1 (a/i^2 + b/i + c)` and
/// `Cov(P@i I_i, P@l I_l) = q1 (d/(i l) + e/l + f/i + g)` for `i < l`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub e: f64,
    pub f: f64,
    pub g: f64,
    /// Normalization constant `min(m, k)`.
    pub norm: usize,
}

fn check_wor(items: usize, relevant: usize, k: usize) -> Result<()> {
    if items == 0 {
        return Err(Error::InvalidModel("WOR needs at least one item".into()));
    }
    if relevant > items {
        return Err(Error::InvalidModel(format!(
            "WOR relevant count {relevant} exceeds item count {items}"
        )));
    }
    if k == 0 || k > items {
        return Err(Error::CutoffOutOfRange { k, len: items });
    }
    Ok(())
}

/// Expected AP@k (normalized by `min(m,k)`) when `m` of `N` items are
/// placed uniformly at random.
pub fn wor_expectation(items: usize, relevant: usize, k: usize) -> Result<f64> {
    check_wor(items, relevant, k)?;
    if relevant == 0 {
        return Ok(0.0);
    }
    if relevant == items {
        return Ok(1.0);
    }
    // N > m >= 1 from here, so N >= 2.
    let (n, m, kf) = (items as f64, relevant as f64, k as f64);
    let h = harmonic_numbers(k)?.h1;
    let scale = m / (n * relevant.min(k) as f64);
    Ok(scale * ((m - 1.0) / (n - 1.0) * kf + (n - m) / (n - 1.0) * h))
}

/// Coefficients `a..g` and `min(m,k)`. Requires `N >= 4` and `m >= 1`; the
/// expressions divide by `N-1`, `N-2` and `N-3`.
pub fn wor_coefficients(items: usize, relevant: usize, k: usize) -> Result<WorCoefficients> {
    check_wor(items, relevant, k)?;
    if items < 4 {
        return Err(Error::InvalidModel(format!(
            "variance coefficients need N >= 4 (got N={items}); use exact enumeration"
        )));
    }
    if relevant == 0 {
        return Err(Error::InvalidModel("variance coefficients need m >= 1".into()));
    }
    let (n, m) = (items as f64, relevant as f64);
    let q1 = m / n;
    let q2 = (m - 1.0) / (n - 1.0);
    let q3 = (m - 2.0) / (n - 2.0);
    let q4 = (m - 3.0) / (n - 3.0);

    let a = 1.0 - q1 - q2 * (3.0 - 2.0 * q3 - q1 * (2.0 - q2));
    let b = q2 * (3.0 * (1.0 - q3) - 2.0 * q1 * (1.0 - q2));
    let c = q2 * (q3 - q1 * q2);
    let d = q2 * (2.0 - 5.0 * q3 + 3.0 * q3 * q4) - q1 * (1.0 - q2).powi(2);
    let e = q2 * (3.0 * q3 * (1.0 - q4) - q1 * (1.0 - q2));
    let f = q2 * (q3 * (1.0 - q4) - q1 * (1.0 - q2));
    let g = q2 * (q3 * q4 - q1 * q2);

    Ok(WorCoefficients {
        a,
        b,
        c,
        d,
        e,
        f,
        g,
        norm: relevant.min(k),
    })
}

/// Variance of AP@k (normalized by `min(m,k)`) under WOR placement.
///
/// For `N < 4` the coefficient form is undefined and the value comes from
/// exact enumeration instead.
pub fn wor_variance(items: usize, relevant: usize, k: usize) -> Result<f64> {
    check_wor(items, relevant, k)?;
    if relevant == 0 || relevant == items {
        return Ok(0.0);
    }
    if items < 4 {
        return Ok(oracle::exact_wor(items, relevant, k, Normalization::ByMinMK)?.variance);
    }
    let co = wor_coefficients(items, relevant, k)?;
    let h = harmonic_numbers(k)?;
    let kf = k as f64;
    let q1 = relevant as f64 / items as f64;
    let bracket = kf * (co.c + 2.0 * (co.e - co.f) + (kf - 1.0) * co.g)
        + h.h1 * (co.b - 2.0 * (co.e - kf * co.f))
        + h.h1 * h.h1 * co.d
        + h.h2 * (co.a - co.d);
    let norm = co.norm as f64;
    Ok(q1 * bracket / (norm * norm))
}
