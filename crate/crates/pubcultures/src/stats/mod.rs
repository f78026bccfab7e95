//! Nonparametric group comparison and correlation utilities.

mod correlation;
mod mann_whitney;
mod permutation;
mod rank_bins;

pub use correlation::{
    normalize_indicator, pearson, transitivity_lower_bound, CorrelationReport,
};
pub use mann_whitney::{mann_whitney_u, MwMethod, MwTestResult};
pub use permutation::{
    permutation_robustness, permutation_robustness_with, write_permutation_csv, PermutationSummary,
    SwitchMode,
};
pub use rank_bins::{rank_binned_means, write_rank_bins_csv, LinearFit, RankBin, RankBinSeries};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("both groups must be non-empty")]
    EmptyGroup,
    /// Switching k countries would empty a group.
    #[error("k={k} would empty a group (sizes {n_high} and {n_low})")]
    InvalidK { k: usize, n_high: usize, n_low: usize },
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    /// All indicator values are equal, so min-max normalization is undefined.
    #[error("degenerate range: all values equal")]
    DegenerateRange,
    /// Zero variance on one side makes the correlation undefined.
    #[error("degenerate variance in {0}")]
    DegenerateVariance(&'static str),
    #[error("input lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("no records to bin")]
    NoRecords,
    /// A partition member has no ρ record to draw a value from.
    #[error("no rho record for partition member {0}")]
    MissingEntity(String),
    #[error("values must be finite")]
    NonFinite,
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
