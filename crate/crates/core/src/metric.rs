//! Precision at a rank, AP@k and MAP@k over binary relevance vectors.
//!
//! AP@k is `(1/D) * sum_{i<=k} P@i * rel(i)`, where the denominator `D` is
//! either `k` or `min(m, k)` with `m` the number of relevant entries in the
//! whole vector. A vector with no relevant entries scores 0.

use std::fmt;
use std::num::NonZeroUsize;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered binary relevance indicators for one ranked list.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RelevanceVector {
    indicators: Vec<bool>,
}

impl RelevanceVector {
    pub fn new(indicators: Vec<bool>) -> Result<Self> {
        if indicators.is_empty() {
            return Err(Error::Empty("relevance vector"));
        }
        Ok(Self { indicators })
    }

    /// Builds a vector from 0/1 bytes; any other byte is rejected.
    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        let indicators = bits
            .iter()
            .enumerate()
            .map(|(position, &value)| match value {
                0 => Ok(false),
                1 => Ok(true),
                _ => Err(Error::InvalidIndicator { position, value }),
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(indicators)
    }

    pub fn len(&self) -> usize {
        self.indicators.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.indicators.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.indicators
    }

    /// Total number of relevant entries over the full vector.
    pub fn relevant_count(&self) -> usize {
        self.indicators.iter().filter(|&&r| r).count()
    }

    pub fn into_inner(self) -> Vec<bool> {
        self.indicators
    }
}

impl From<RelevanceVector> for Vec<bool> {
    fn from(v: RelevanceVector) -> Self {
        v.indicators
    }
}

/// Denominator used when averaging precision values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Normalization {
    /// Divide by the cutoff `k`.
    #[serde(rename = "byk")]
    ByK,
    /// Divide by `min(m, k)`, `m` being the total relevant count.
    #[serde(rename = "bymin")]
    ByMinMK,
}

impl Normalization {
    /// Denominator for cutoff `k` and `total_relevant` relevant items, or
    /// `None` when it would be zero.
    pub fn denominator(self, k: usize, total_relevant: usize) -> Option<f64> {
        let d = match self {
            Normalization::ByK => k,
            Normalization::ByMinMK => total_relevant.min(k),
        };
        (d > 0).then_some(d as f64)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Normalization::ByK => "byk",
            Normalization::ByMinMK => "bymin",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "byk" | "k" => Ok(Normalization::ByK),
            "bymin" | "byminmk" | "min" => Ok(Normalization::ByMinMK),
            other => Err(Error::InvalidArgument(format!(
                "unknown normalization `{other}` (expected byk or bymin)"
            ))),
        }
    }
}

/// Rank cutoff, always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cutoff(NonZeroUsize);

impl Cutoff {
    pub fn new(k: usize) -> Result<Self> {
        NonZeroUsize::new(k)
            .map(Cutoff)
            .ok_or(Error::CutoffOutOfRange { k, len: 0 })
    }

    pub fn get(self) -> usize {
        self.0.get()
    }

    fn check(self, len: usize) -> Result<usize> {
        let k = self.get();
        if k > len {
            return Err(Error::CutoffOutOfRange { k, len });
        }
        Ok(k)
    }
}

impl From<NonZeroUsize> for Cutoff {
    fn from(k: NonZeroUsize) -> Self {
        Cutoff(k)
    }
}

/// Fraction of relevant entries among the first `i` (1-based).
pub fn precision_at(rel: &RelevanceVector, i: usize) -> Result<f64> {
    if i == 0 || i > rel.len() {
        return Err(Error::IndexOutOfRange {
            index: i,
            len: rel.len(),
        });
    }
    let hits = rel.indicators[..i].iter().filter(|&&r| r).count();
    Ok(hits as f64 / i as f64)
}

pub fn ap_at_k(rel: &RelevanceVector, k: Cutoff, norm: Normalization) -> Result<f64> {
    let k = k.check(rel.len())?;
    Ok(ap_with_total(&rel.indicators, k, norm, rel.relevant_count()))
}

/// `sum_{i<=k} P@i * rel(i)` in one pass over the prefix.
///
/// Panics if `k > indicators.len()`.
pub fn precision_sum(indicators: &[bool], k: usize) -> f64 {
    let mut hits = 0u32;
    let mut sum = 0.0;
    for (i, _) in indicators[..k].iter().enumerate().filter(|(_, &r)| r) {
        hits += 1;
        sum += f64::from(hits) / (i + 1) as f64;
    }
    sum
}

/// AP@k where the relevant total used by `ByMinMK` is supplied by the caller.
///
/// Used where the indicators are only a prefix of the ranking (the total
/// relevant count then lives outside the slice). Panics if `k` exceeds the
/// slice length.
pub fn ap_with_total(indicators: &[bool], k: usize, norm: Normalization, total_relevant: usize) -> f64 {
    match norm.denominator(k, total_relevant) {
        Some(d) => precision_sum(indicators, k) / d,
        None => 0.0,
    }
}

/// Mean AP@k over users.
pub fn map_at_k(users: &[RelevanceVector], k: Cutoff, norm: Normalization) -> Result<f64> {
    if users.is_empty() {
        return Err(Error::Empty("user set"));
    }
    let total = users.iter().map(|u| ap_at_k(u, k, norm)).sum::<Result<f64>>()?;
    Ok(total / users.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn rv(bits: &[u8]) -> RelevanceVector {
        RelevanceVector::from_bits(bits).unwrap()
    }

    fn k(k: usize) -> Cutoff {
        Cutoff::new(k).unwrap()
    }

    #[test]
    fn precision_examples() {
        assert_abs_diff_eq!(precision_at(&rv(&[1, 0, 1]), 3).unwrap(), 2.0 / 3.0);
        assert_eq!(precision_at(&rv(&[0, 0, 0, 0]), 4).unwrap(), 0.0);
        assert_eq!(precision_at(&rv(&[1, 1, 1]), 2).unwrap(), 1.0);
    }

    #[test]
    fn precision_rejects_bad_index() {
        let v = rv(&[1, 0]);
        assert!(matches!(precision_at(&v, 0), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(
            precision_at(&v, 3),
            Err(Error::IndexOutOfRange { index: 3, len: 2 })
        ));
    }

    #[test]
    fn ap_examples() {
        let v = rv(&[1, 0, 1]);
        assert_abs_diff_eq!(
            ap_at_k(&v, k(3), Normalization::ByMinMK).unwrap(),
            5.0 / 6.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            ap_at_k(&v, k(3), Normalization::ByK).unwrap(),
            5.0 / 9.0,
            epsilon = 1e-15
        );
        for norm in [Normalization::ByK, Normalization::ByMinMK] {
            assert_eq!(ap_at_k(&rv(&[0, 0, 0]), k(3), norm).unwrap(), 0.0);
        }
        let all = rv(&[1; 7]);
        for cut in 1..=7 {
            assert_eq!(ap_at_k(&all, k(cut), Normalization::ByMinMK).unwrap(), 1.0);
        }
    }

    #[test]
    fn bymin_counts_relevant_beyond_cutoff() {
        // m = 3 over the full vector, only one inside the top 2
        let v = rv(&[1, 0, 1, 1]);
        assert_abs_diff_eq!(ap_at_k(&v, k(2), Normalization::ByMinMK).unwrap(), 0.5);
    }

    #[test]
    fn ap_rejects_long_cutoff() {
        assert!(matches!(
            ap_at_k(&rv(&[1, 0]), k(3), Normalization::ByK),
            Err(Error::CutoffOutOfRange { k: 3, len: 2 })
        ));
        assert!(Cutoff::new(0).is_err());
    }

    #[test]
    fn map_examples() {
        let users = vec![rv(&[1, 0, 1]), rv(&[0, 0, 0])];
        assert_abs_diff_eq!(
            map_at_k(&users, k(3), Normalization::ByMinMK).unwrap(),
            5.0 / 12.0,
            epsilon = 1e-15
        );

        let one = vec![rv(&[0, 1, 1, 0])];
        assert_eq!(
            map_at_k(&one, k(4), Normalization::ByK).unwrap(),
            ap_at_k(&one[0], k(4), Normalization::ByK).unwrap()
        );
        let same = vec![rv(&[0, 1, 1, 0]); 5];
        assert_abs_diff_eq!(
            map_at_k(&same, k(4), Normalization::ByK).unwrap(),
            ap_at_k(&same[0], k(4), Normalization::ByK).unwrap(),
            epsilon = 1e-15
        );
        assert!(matches!(map_at_k(&[], k(1), Normalization::ByK), Err(Error::Empty(_))));
    }

    #[test]
    fn rejects_non_binary_and_empty() {
        assert!(matches!(
            RelevanceVector::from_bits(&[0, 2]),
            Err(Error::InvalidIndicator { position: 1, value: 2 })
        ));
        assert!(RelevanceVector::new(vec![]).is_err());
    }

    #[test]
    fn parses_normalization_names() {
        assert_eq!("byk".parse::<Normalization>().unwrap(), Normalization::ByK);
        assert_eq!("bymin".parse::<Normalization>().unwrap(), Normalization::ByMinMK);
        assert!("ndcg".parse::<Normalization>().is_err());
    }

    fn vec_and_cutoff() -> impl Strategy<Value = (Vec<bool>, usize)> {
        prop::collection::vec(any::<bool>(), 1..40).prop_flat_map(|v| {
            let len = v.len();
            (Just(v), 1..=len)
        })
    }

    proptest! {
        #[test]
        fn ap_is_bounded((bits, cut) in vec_and_cutoff()) {
            let v = RelevanceVector::new(bits).unwrap();
            for norm in [Normalization::ByK, Normalization::ByMinMK] {
                let ap = ap_at_k(&v, k(cut), norm).unwrap();
                prop_assert!((0.0..=1.0 + 1e-12).contains(&ap), "ap={}", ap);
            }
        }

        #[test]
        fn byk_is_rescaled_bymin((bits, cut) in vec_and_cutoff()) {
            let v = RelevanceVector::new(bits).unwrap();
            let m = v.relevant_count();
            let by_k = ap_at_k(&v, k(cut), Normalization::ByK).unwrap();
            let by_min = ap_at_k(&v, k(cut), Normalization::ByMinMK).unwrap();
            prop_assert!((by_k - by_min * m.min(cut) as f64 / cut as f64).abs() < 1e-12);
        }

        #[test]
        fn relevant_first_is_perfect(len in 1usize..40, m_frac in 0.0f64..1.0, cut_frac in 0.0f64..1.0) {
            let m = 1 + ((len - 1) as f64 * m_frac) as usize;
            let cut = 1 + ((len - 1) as f64 * cut_frac) as usize;
            let bits: Vec<bool> = (0..len).map(|i| i < m).collect();
            let v = RelevanceVector::new(bits).unwrap();
            prop_assert_eq!(ap_at_k(&v, k(cut), Normalization::ByMinMK).unwrap(), 1.0);
        }

        #[test]
        fn map_ignores_user_order(
            users in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..12),
            rotate in 0usize..12,
        ) {
            let users: Vec<_> = users.into_iter().map(|u| RelevanceVector::new(u).unwrap()).collect();
            let mut shuffled = users.clone();
            let r = rotate % shuffled.len();
            shuffled.rotate_left(r);
            shuffled.reverse();
            let a = map_at_k(&users, k(6), Normalization::ByMinMK).unwrap();
            let b = map_at_k(&shuffled, k(6), Normalization::ByMinMK).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
