//! Agreement and hypothesis-testing primitives.

mod agreement;
mod kruskal;
mod summary;

pub use agreement::{
    cohen_kappa, cohen_kappa_excluding, held_out_majority, majority_vote, HeldOutAgreement,
    TieRule, TIE,
};
pub use kruskal::{kruskal_wallis, kruskal_wallis_exact, GroupedSamples, KruskalWallis};
pub use summary::{mean_ci, mse, MeanCi};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    Empty,
    #[error("expected agreement is 1 but the series disagree")]
    DegenerateMarginals,
    #[error("at least two groups are required, got {0}")]
    TooFewGroups(usize),
    #[error("group {0:?} is empty")]
    EmptyGroup(String),
    #[error("too few samples: {got} (need at least {need})")]
    TooFewSamples { got: usize, need: usize },
    #[error("non-finite value in input")]
    NonFinite,
    #[error("confidence level {0} outside (0, 1)")]
    InvalidLevel(f64),
    #[error("exact permutation test limited to n <= {max}, got {n}")]
    ExactTooLarge { n: usize, max: usize },
}
