//! Robustness of a country partition under random membership switches.
//!
//! Each trial picks k distinct countries uniformly from the union of both
//! groups, moves each to the opposite group, and re-runs the Mann-Whitney
//! test. The summary reports the mean and standard deviation of the p-values
//! over all trials. Trial randomness derives from `(seed, trial_index)`, so
//! results are reproducible and independent of evaluation order.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{mann_whitney_u, StatsError};
use crate::metrics::{GroupPartition, RhoRecord};

/// How a trial perturbs group membership.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SwitchMode {
    /// Relabel k countries drawn from the union of both groups (group sizes
    /// may change by up to k).
    #[default]
    Relabel,
    /// Swap k countries of one group against k of the other (sizes
    /// preserved); offered for sensitivity analysis.
    PairwiseSwap,
}

/// Mean and spread of Mann-Whitney p-values over perturbation trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermutationSummary {
    pub k_switched: usize,
    pub trials: usize,
    pub mean_p: f64,
    /// Population standard deviation of the per-trial p-values.
    pub std_p: f64,
    pub seed: u64,
}

/// [`permutation_robustness_with`] in the default relabeling mode.
pub fn permutation_robustness(
    records: &[RhoRecord],
    partition: &GroupPartition,
    k: usize,
    trials: usize,
    seed: u64,
) -> Result<PermutationSummary, StatsError> {
    permutation_robustness_with(records, partition, k, trials, seed, SwitchMode::Relabel)
}

/// Perturb the partition `trials` times and summarize the p-values.
///
/// `k` must be smaller than either group so no trial can empty one. The mean
/// uses Welford's update, so the k=0 degenerate case reproduces the
/// unperturbed p-value exactly with zero spread.
pub fn permutation_robustness_with(
    records: &[RhoRecord],
    partition: &GroupPartition,
    k: usize,
    trials: usize,
    seed: u64,
    mode: SwitchMode,
) -> Result<PermutationSummary, StatsError> {
    let n_high = partition.high.len();
    let n_low = partition.low.len();
    if k >= n_high.min(n_low) && k > 0 {
        return Err(StatsError::InvalidK { k, n_high, n_low });
    }
    if trials == 0 {
        return Err(StatsError::InsufficientData("trials must be >= 1".into()));
    }

    let rho_of = |entity: &str| -> Result<f64, StatsError> {
        records
            .iter()
            .find(|r| r.entity_id == entity)
            .map(|r| r.rho)
            .ok_or_else(|| StatsError::MissingEntity(entity.to_string()))
    };
    // union holds (rho, initially_high); BTreeSet iteration keeps it stable
    let mut union: Vec<(f64, bool)> = Vec::with_capacity(n_high + n_low);
    for entity in &partition.high {
        union.push((rho_of(entity)?, true));
    }
    for entity in &partition.low {
        union.push((rho_of(entity)?, false));
    }

    let mut mean = 0.0;
    let mut m2 = 0.0;
    for trial in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let mut flipped = vec![false; union.len()];
        match mode {
            SwitchMode::Relabel => {
                for idx in rand::seq::index::sample(&mut rng, union.len(), k) {
                    flipped[idx] = true;
                }
            }
            SwitchMode::PairwiseSwap => {
                let highs: Vec<usize> =
                    (0..union.len()).filter(|&i| union[i].1).collect();
                let lows: Vec<usize> =
                    (0..union.len()).filter(|&i| !union[i].1).collect();
                for idx in rand::seq::index::sample(&mut rng, highs.len(), k) {
                    flipped[highs[idx]] = true;
                }
                for idx in rand::seq::index::sample(&mut rng, lows.len(), k) {
                    flipped[lows[idx]] = true;
                }
            }
        }
        let mut group_high = Vec::with_capacity(n_high + k);
        let mut group_low = Vec::with_capacity(n_low + k);
        for (i, &(rho, is_high)) in union.iter().enumerate() {
            if is_high != flipped[i] {
                group_high.push(rho);
            } else {
                group_low.push(rho);
            }
        }
        let p = mann_whitney_u(&group_high, &group_low)?.p_value;
        // Welford: exact for constant sequences
        let count = (trial + 1) as f64;
        let delta = p - mean;
        mean += delta / count;
        m2 += delta * (p - mean);
    }

    Ok(PermutationSummary {
        k_switched: k,
        trials,
        mean_p: mean,
        std_p: (m2 / trials as f64).sqrt(),
        seed,
    })
}

/// Write permutation summaries as CSV with header
/// `k,trials,mean_p,std_p,seed`.
pub fn write_permutation_csv<W: Write>(
    summaries: &[PermutationSummary],
    mut w: W,
) -> Result<(), StatsError> {
    writeln!(w, "k,trials,mean_p,std_p,seed")?;
    for s in summaries {
        writeln!(
            w,
            "{},{},{},{},{}",
            s.k_switched, s.trials, s.mean_p, s.std_p, s.seed
        )?;
    }
    Ok(())
}
