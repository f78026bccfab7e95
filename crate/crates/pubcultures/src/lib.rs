//! Analytics for scholarly publishing cultures.
//!
//! The crate measures how strongly an institution or a country leans on new
//! open-access publishing venues relative to the legacy commercial publishers,
//! and provides the statistical machinery to study that measure:
//!
//! * [`ingest`] — OpenAlex tally fetching with a local JSON cache, plus CSV
//!   loaders for ranking and indicator inputs.
//! * [`metrics`] — the publication ratio ρ = N_MDPI / (N_BigFive + N_MDPI),
//!   country aggregation, and threshold partitioning.
//! * [`mixture`] — two-component Gaussian mixture fits via EM, the inter-peak
//!   minimum used as a group threshold, and per-year peak-gap series.
//! * [`stats`] — Mann-Whitney U tests (exact and normal approximation),
//!   permutation robustness of a partition, indicator normalization, Pearson
//!   correlation, the correlation transitivity bound, and rank-binned means.
//! * [`replicator`] — a one-dimensional replicator-dynamics model of the
//!   publishing choice: equilibria, stability, trajectories, bifurcation
//!   scans, and synthesis of bimodal ratio samples.
//!
//! A rendered guide with worked examples lives in the `book/` directory of
//! the repository; every code snippet there is compiled and run as a doctest.
//!
//! ```
//! use pubcultures::stats::transitivity_lower_bound;
//!
//! // Two strong correlations with a shared variable force the third one up.
//! let bound = transitivity_lower_bound(-0.93, -0.86).unwrap();
//! assert!((bound - 0.61).abs() < 0.005);
//! ```

pub mod ingest;
pub mod metrics;
pub mod mixture;
pub mod replicator;
pub mod stats;

pub use ingest::{
    CountryIndicators, FetchConfig, IngestError, InstitutionRef, PublicationTally, Publisher,
};
pub use metrics::{GroupPartition, Level, MetricsError, RhoRecord};
pub use mixture::{MixtureError, MixtureFit, PeakGapSeries};
pub use replicator::{Equilibrium, ReplicatorError, ReplicatorSystem, Stability, Trajectory};
pub use stats::{
    CorrelationReport, MwMethod, MwTestResult, PermutationSummary, RankBinSeries, StatsError,
};
