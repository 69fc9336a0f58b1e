//! Harmonic numbers and the double-sum identities used by the variance forms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Euler–Mascheroni constant to double precision.
pub const EULER_MASCHERONI: f64 = 0.577_215_664_901_532_9;

/// `H_k = sum 1/i` and `H_k^(2) = sum 1/i^2` for `i = 1..=k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicPair {
    pub h1: f64,
    pub h2: f64,
}

/// Exact partial sums, accumulated from `1/k` upward so the small terms are
/// added first.
pub fn harmonic_numbers(k: usize) -> Result<HarmonicPair> {
    if k == 0 {
        return Err(Error::InvalidArgument("harmonic numbers need k >= 1".into()));
    }
    let (h1, h2) = (1..=k).rev().fold((0.0, 0.0), |(h1, h2), i| {
        let inv = 1.0 / i as f64;
        (h1 + inv, h2 + inv * inv)
    });
    Ok(HarmonicPair { h1, h2 })
}

/// `ln k + gamma + 1/(2k)` together with the bound `1/(8k^2)` on how far it
/// overshoots `H_k`.
pub fn harmonic_approx(k: usize) -> Result<(f64, f64)> {
    if k == 0 {
        return Err(Error::InvalidArgument("harmonic approximation needs k >= 1".into()));
    }
    let kf = k as f64;
    let approx = kf.ln() + EULER_MASCHERONI + 0.5 / kf;
    Ok((approx, 1.0 / (8.0 * kf * kf)))
}

/// The three double sums over `1 <= i < l <= k`, in closed form:
///
/// * `sum 1/i = k (H_k - 1)`
/// * `sum 1/l = k - H_k`
/// * `sum 1/(i l) = (H_k^2 - H_k^(2)) / 2`
pub fn pair_sums(k: usize) -> Result<(f64, f64, f64)> {
    let HarmonicPair { h1, h2 } = harmonic_numbers(k)?;
    let kf = k as f64;
    Ok((kf * (h1 - 1.0), kf - h1, 0.5 * (h1 * h1 - h2)))
}
