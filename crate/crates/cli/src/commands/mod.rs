pub mod analyze;
pub mod correlate;
pub mod fetch;
pub mod rank_bins;
pub mod replicator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}
