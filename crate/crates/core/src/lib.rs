//! Average precision at a cutoff (AP@k), MAP@k, and the exact chance
//! baseline of AP@k under two random-ranking models:
//!
//! * **WOR**: `m` of `N` items are relevant and sit at uniformly random
//!   positions (offline evaluation);
//! * **WR**: every ranked position is relevant independently with
//!   probability `p` (online evaluation).
//!
//! Closed-form moments live in [`baseline`], brute-force ground truth in
//! [`oracle`], seeded simulation in [`stochastic`], and scoring of real
//! run/qrels files in [`evaluation`].

pub mod baseline;
pub mod cli;
pub mod error;
pub mod evaluation;
pub mod format;
pub mod metric;
pub mod model;
pub mod oracle;
pub mod scenarios;
pub mod stochastic;

pub use baseline::{baseline, BaselineMoments, HarmonicPair, WorCoefficients};
pub use error::{Error, Result};
pub use evaluation::{evaluate, BaselineChoice, EvaluationReport, JudgmentSet, RankedRun};
pub use metric::{ap_at_k, map_at_k, precision_at, Cutoff, Normalization, RelevanceVector};
pub use model::ModelSpec;
pub use oracle::{exact_wor, exact_wr, ExactDistribution};
pub use stochastic::{histogram, monte_carlo, HistogramData, SampleMoments};
