//! Brute-force distribution of AP@k for small instances.
//!
//! Two independent routes are provided for the WOR model:
//!
//! * [`exact_wor`] walks all `2^k` top-k relevance patterns and weights a
//!   pattern with `s` hits by `C(N-k, m-s) / C(N, m)`;
//! * [`exact_wor_placements`] walks every one of the `C(N, m)` placements of
//!   the relevant items over the full list with equal weight.
//!
//! [`exact_wr`] walks all `2^k` patterns with Bernoulli weights.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{ap_at_k, ap_with_total, Cutoff, Normalization, RelevanceVector};
use crate::model::check_probability;

/// Largest cutoff the pattern enumeration accepts.
pub const MAX_ENUMERATION_K: usize = 24;
/// Largest list length the placement enumeration accepts.
pub const MAX_PLACEMENT_N: usize = 24;

/// Support values closer than this are merged into one atom.
const MERGE_TOLERANCE: f64 = 1e-12;

/// Finite distribution of AP@k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    /// `(ap_value, probability)` pairs, ascending by value.
    pub support: Vec<(f64, f64)>,
    pub mean: f64,
    pub variance: f64,
}

impl ExactDistribution {
    fn from_atoms(atoms: HashMap<u64, f64>) -> Self {
        let mut raw: Vec<(f64, f64)> = atoms.into_iter().map(|(bits, w)| (f64::from_bits(bits), w)).collect();
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut support: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (v, w) in raw {
            match support.last_mut() {
                Some(last) if (v - last.0).abs() <= MERGE_TOLERANCE => last.1 += w,
                _ => support.push((v, w)),
            }
        }

        let mean = support.iter().map(|&(v, w)| v * w).sum::<f64>();
        let variance = support.iter().map(|&(v, w)| w * (v - mean) * (v - mean)).sum::<f64>();
        Self {
            support,
            mean,
            variance,
        }
    }

    pub fn total_probability(&self) -> f64 {
        self.support.iter().map(|&(_, w)| w).sum()
    }
}

/// `C(n, r)` exactly, or `None` on overflow.
pub fn binomial(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) is divisible by (i + 1) at every step
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `ln C(n, r)` as a sum of logarithms; `-inf` when `r > n`.
pub fn ln_binomial(n: u64, r: u64) -> f64 {
    if r > n {
        return f64::NEG_INFINITY;
    }
    let r = r.min(n - r);
    (0..r).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

/// `C(a, b) / C(c, d)`, exact integers when they fit, log space otherwise.
fn binomial_ratio(a: u64, b: u64, c: u64, d: u64) -> f64 {
    match (binomial(a, b), binomial(c, d)) {
        (Some(num), Some(den)) if den > 0 => num as f64 / den as f64,
        _ => (ln_binomial(a, b) - ln_binomial(c, d)).exp(),
    }
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::CutoffOutOfRange { k, len: 0 });
    }
    if k > MAX_ENUMERATION_K {
        return Err(Error::Capacity {
            k,
            max: MAX_ENUMERATION_K,
        });
    }
    Ok(())
}

/// Walks every `k`-bit pattern, calling `visit(indicators, hits)`.
fn for_each_pattern(k: usize, mut visit: impl FnMut(&[bool], usize)) {
    let mut buf = [false; MAX_ENUMERATION_K];
    for mask in 0u32..(1u32 << k) {
        for (i, slot) in buf[..k].iter_mut().enumerate() {
            *slot = mask >> i & 1 == 1;
        }
        visit(&buf[..k], mask.count_ones() as usize);
    }
}

/// Exact AP@k distribution when `m` of `N` items sit at uniformly random
/// positions. `ByMinMK` uses the true total `m`.
pub fn exact_wor(items: usize, relevant: usize, k: usize, norm: Normalization) -> Result<ExactDistribution> {
    check_k(k)?;
    if items == 0 || relevant > items {
        return Err(Error::InvalidModel(format!("WOR(N={items}, m={relevant})")));
    }
    if k > items {
        return Err(Error::CutoffOutOfRange { k, len: items });
    }
    let (n, m, ku) = (items as u64, relevant as u64, k as u64);
    let lo = relevant.saturating_sub(items - k);
    let hi = relevant.min(k);
    let weights: Vec<f64> = (0..=k)
        .map(|s| {
            if s < lo || s > hi {
                0.0
            } else {
                binomial_ratio(n - ku, m - s as u64, n, m)
            }
        })
        .collect();

    let mut atoms: HashMap<u64, f64> = HashMap::new();
    for_each_pattern(k, |indicators, hits| {
        let w = weights[hits];
        if w > 0.0 {
            let ap = ap_with_total(indicators, k, norm, relevant);
            *atoms.entry(ap.to_bits()).or_default() += w;
        }
    });
    Ok(ExactDistribution::from_atoms(atoms))
}

/// Exact AP@k distribution for `k` i.i.d. Bernoulli(p) indicators.
/// `ByMinMK` uses the number of hits within the `k` positions.
pub fn exact_wr(p: f64, k: usize, norm: Normalization) -> Result<ExactDistribution> {
    check_k(k)?;
    check_probability(p)?;
    let weights: Vec<f64> = (0..=k)
        .map(|s| p.powi(s as i32) * (1.0 - p).powi((k - s) as i32))
        .collect();

    let mut atoms: HashMap<u64, f64> = HashMap::new();
    for_each_pattern(k, |indicators, hits| {
        let w = weights[hits];
        if w > 0.0 {
            let ap = ap_with_total(indicators, k, norm, hits);
            *atoms.entry(ap.to_bits()).or_default() += w;
        }
    });
    Ok(ExactDistribution::from_atoms(atoms))
}

/// Exact WOR distribution by listing all `C(N, m)` placements over the full
/// list, each with weight `1 / C(N, m)`.
pub fn exact_wor_placements(items: usize, relevant: usize, k: usize, norm: Normalization) -> Result<ExactDistribution> {
    if items == 0 || relevant > items {
        return Err(Error::InvalidModel(format!("WOR(N={items}, m={relevant})")));
    }
    if items > MAX_PLACEMENT_N {
        return Err(Error::Capacity {
            k: items,
            max: MAX_PLACEMENT_N,
        });
    }
    let cutoff = Cutoff::new(k)?;
    let mut placements = Vec::new();
    collect_subsets(items, relevant, 0, 0, &mut placements);
    let w = 1.0 / placements.len() as f64;

    let mut atoms: HashMap<u64, f64> = HashMap::new();
    for mask in placements {
        let bits: Vec<bool> = (0..items).map(|i| mask >> i & 1 == 1).collect();
        let ap = ap_at_k(&RelevanceVector::new(bits)?, cutoff, norm)?;
        *atoms.entry(ap.to_bits()).or_default() += w;
    }
    Ok(ExactDistribution::from_atoms(atoms))
}

/// Every `len`-bit mask with exactly `ones` bits set, by recursion on the
/// next position.
fn collect_subsets(len: usize, ones: usize, pos: usize, mask: u32, out: &mut Vec<u32>) {
    if ones == 0 {
        out.push(mask);
        return;
    }
    if len - pos < ones {
        return;
    }
    collect_subsets(len, ones - 1, pos + 1, mask | 1 << pos, out);
    collect_subsets(len, ones, pos + 1, mask, out);
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn degenerate_point_masses() {
        let all = exact_wor(5, 5, 3, Normalization::ByMinMK).unwrap();
        assert_eq!(all.support, vec![(1.0, 1.0)]);
        assert_eq!(all.variance, 0.0);

        for norm in [Normalization::ByK, Normalization::ByMinMK] {
            let none = exact_wor(5, 0, 3, norm).unwrap();
            assert_eq!(none.support, vec![(0.0, 1.0)]);
        }

        let sure = exact_wr(1.0, 4, Normalization::ByK).unwrap();
        assert_eq!(sure.support, vec![(1.0, 1.0)]);
    }

    #[test]
    fn two_position_support() {
        let d = exact_wr(0.5, 2, Normalization::ByK).unwrap();
        let expected = [(0.0, 0.25), (0.25, 0.25), (0.5, 0.25), (1.0, 0.25)];
        assert_eq!(d.support.len(), 4);
        for ((v, w), (ev, ew)) in d.support.iter().zip(expected) {
            assert_abs_diff_eq!(*v, ev, epsilon = 1e-15);
            assert_abs_diff_eq!(*w, ew, epsilon = 1e-15);
        }
    }

    #[test]
    fn scenario_a1_moments() {
        let wor = exact_wor(50, 25, 5, Normalization::ByMinMK).unwrap();
        assert_abs_diff_eq!(wor.mean, 0.36139, epsilon = 1e-5);
        // exact rational enumeration gives 0.0546704245817592
        assert_abs_diff_eq!(wor.variance, 0.05467042458175918, epsilon = 1e-12);

        let wr = exact_wr(0.5, 5, Normalization::ByK).unwrap();
        assert_abs_diff_eq!(wr.mean, 0.36416, epsilon = 1e-5);
        assert_abs_diff_eq!(wr.variance, 0.05884, epsilon = 1e-5);
    }

    #[test]
    fn weights_sum_to_one() {
        for (n, m, k) in [(50, 25, 5), (12, 3, 12), (200, 100, 8), (7, 7, 7), (1000, 1, 10)] {
            let d = exact_wor(n, m, k, Normalization::ByMinMK).unwrap();
            assert_abs_diff_eq!(d.total_probability(), 1.0, epsilon = 1e-12);
        }
        for p in [0.0, 0.04, 0.5, 0.99] {
            let d = exact_wr(p, 10, Normalization::ByMinMK).unwrap();
            assert_abs_diff_eq!(d.total_probability(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn moments_recompute_from_support() {
        let d = exact_wor(11, 4, 6, Normalization::ByK).unwrap();
        let mean: f64 = d.support.iter().map(|(v, w)| v * w).sum();
        let second: f64 = d.support.iter().map(|(v, w)| v * v * w).sum();
        assert_abs_diff_eq!(d.mean, mean, epsilon = 1e-15);
        assert_abs_diff_eq!(d.variance, second - mean * mean, epsilon = 1e-13);
    }

    #[test]
    fn placement_route_agrees() {
        for norm in [Normalization::ByK, Normalization::ByMinMK] {
            let a = exact_wor(9, 4, 5, norm).unwrap();
            let b = exact_wor_placements(9, 4, 5, norm).unwrap();
            assert_abs_diff_eq!(a.mean, b.mean, epsilon = 1e-12);
            assert_abs_diff_eq!(a.variance, b.variance, epsilon = 1e-12);
            assert_eq!(a.support.len(), b.support.len());
        }
    }

    #[test]
    fn wr_approaches_wor_for_large_pool() {
        let wor = exact_wor(200, 100, 5, Normalization::ByK).unwrap();
        let wr = exact_wr(0.5, 5, Normalization::ByK).unwrap();
        assert!((wor.mean - wr.mean).abs() < 0.01);
    }

    #[test]
    fn capacity_and_preconditions() {
        assert!(matches!(
            exact_wr(0.5, 25, Normalization::ByK),
            Err(Error::Capacity { k: 25, max: 24 })
        ));
        assert!(matches!(
            exact_wor(100, 10, 30, Normalization::ByK),
            Err(Error::Capacity { .. })
        ));
        assert!(exact_wor(5, 2, 6, Normalization::ByK).is_err());
        assert!(exact_wor(5, 6, 2, Normalization::ByK).is_err());
        assert!(exact_wr(1.5, 3, Normalization::ByK).is_err());
        assert!(exact_wor_placements(30, 2, 3, Normalization::ByK).is_err());
    }

    #[test]
    fn binomials_agree_between_routes() {
        for n in 0..=60u64 {
            for r in 0..=n {
                let exact = binomial(n, r).unwrap() as f64;
                let via_log = ln_binomial(n, r).exp();
                assert!((exact - via_log).abs() <= 1e-10 * exact, "C({n},{r})");
            }
        }
        assert_eq!(binomial(50, 25), Some(126_410_606_437_752));
        assert_eq!(binomial(3, 5), Some(0));
    }

    #[test]
    fn support_values_are_attainable() {
        // every atom must be the AP@k of some concrete vector
        let d = exact_wor(6, 3, 4, Normalization::ByMinMK).unwrap();
        let mut attainable = Vec::new();
        for mask in 0u32..16 {
            let bits: Vec<bool> = (0..4).map(|i| mask >> i & 1 == 1).collect();
            attainable.push(ap_with_total(&bits, 4, Normalization::ByMinMK, 3));
        }
        for (v, _) in &d.support {
            assert!(attainable.iter().any(|a| (a - v).abs() < 1e-12), "{v}");
        }
    }
}
