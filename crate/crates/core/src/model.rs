//! Randomization models for a ranked list.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::Normalization;

/// How relevance is distributed over a random ranking.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    /// Exactly `relevant` of `items` are relevant; their positions form a
    /// uniformly random subset (offline evaluation).
    Wor { items: usize, relevant: usize },
    /// Each ranked position is independently relevant with probability `p`
    /// (online evaluation).
    Wr { p: f64 },
}

impl ModelSpec {
    pub fn wor(items: usize, relevant: usize) -> Result<Self> {
        let model = ModelSpec::Wor { items, relevant };
        model.validate()?;
        Ok(model)
    }

    pub fn wr(p: f64) -> Result<Self> {
        let model = ModelSpec::Wr { p };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Wor { items, relevant } => {
                if items == 0 {
                    return Err(Error::InvalidModel("WOR needs at least one item".into()));
                }
                if relevant > items {
                    return Err(Error::InvalidModel(format!(
                        "WOR relevant count {relevant} exceeds item count {items}"
                    )));
                }
                Ok(())
            }
            ModelSpec::Wr { p } => check_probability(p),
        }
    }

    /// Checks that cutoff `k` is usable with this model.
    pub fn validate_cutoff(&self, k: usize) -> Result<()> {
        self.validate()?;
        match *self {
            ModelSpec::Wor { items, .. } if k == 0 || k > items => Err(Error::CutoffOutOfRange { k, len: items }),
            ModelSpec::Wr { .. } if k == 0 => Err(Error::CutoffOutOfRange { k, len: 0 }),
            _ => Ok(()),
        }
    }

    /// The normalization the closed forms are derived under: `min(m,k)`
    /// for WOR, `k` for WR.
    pub fn natural_normalization(&self) -> Normalization {
        match self {
            ModelSpec::Wor { .. } => Normalization::ByMinMK,
            ModelSpec::Wr { .. } => Normalization::ByK,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            ModelSpec::Wor { .. } => "WOR",
            ModelSpec::Wr { .. } => "WR",
        }
    }
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Wor { items, relevant } => write!(f, "WOR(N={items}, m={relevant})"),
            ModelSpec::Wr { p } => write!(f, "WR(p={p})"),
        }
    }
}

pub(crate) fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}
