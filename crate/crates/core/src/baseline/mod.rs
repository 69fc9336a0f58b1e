//! Exact expectation and variance of AP@k under random rankings.
//!
//! The WOR forms are normalized by `min(m, k)` and the WR forms by `k`;
//! [`baseline`] only offers those pairings.

pub mod harmonic;
mod wor;
mod wr;

use serde::{Deserialize, Serialize};

pub use harmonic::{harmonic_approx, harmonic_numbers, pair_sums, HarmonicPair, EULER_MASCHERONI};
pub use wor::{wor_coefficients, wor_expectation, wor_variance, WorCoefficients};
pub use wr::{wr_expectation, wr_variance};

use crate::error::Result;
use crate::model::ModelSpec;

/// Analytic mean and variance of AP@k under a randomization model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaselineMoments {
    pub mean: f64,
    pub variance: f64,
}

impl BaselineMoments {
    pub fn std_dev(&self) -> f64 {
        self.variance.max(0.0).sqrt()
    }
}

/// Closed-form moments for `model` at cutoff `k`, under the model's natural
/// normalization (see [`ModelSpec::natural_normalization`]).
pub fn baseline(model: &ModelSpec, k: usize) -> Result<BaselineMoments> {
    model.validate_cutoff(k)?;
    match *model {
        ModelSpec::Wor { items, relevant } => Ok(BaselineMoments {
            mean: wor_expectation(items, relevant, k)?,
            variance: wor_variance(items, relevant, k)?,
        }),
        ModelSpec::Wr { p } => Ok(BaselineMoments {
            mean: wr_expectation(p, k)?,
            variance: wr_variance(p, k)?,
        }),
    }
}
