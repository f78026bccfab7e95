//! Rank-binned ρ means with an ordinary least-squares trend line.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBin {
    /// First rank covered by the bin; the bin spans `bin_width` consecutive
    /// ranks.
    pub bin_start_rank: u32,
    pub mean_rho: f64,
    pub count: usize,
}

/// OLS fit of bin means against bin midpoint ranks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankBinSeries {
    pub bin_width: u32,
    pub bins: Vec<RankBin>,
    pub linear_fit: LinearFit,
}

/// Average ρ over bins of `bin_width` consecutive ranks.
///
/// Bins cover ranks [1..w], [w+1..2w], ...; rank ranges without any entry
/// are omitted and the line is fitted through the remaining bin means at
/// their midpoint ranks.
pub fn rank_binned_means(
    entries: &[(u32, f64)],
    bin_width: u32,
) -> Result<RankBinSeries, StatsError> {
    if bin_width == 0 {
        return Err(StatsError::DomainError("bin_width must be >= 1".into()));
    }
    if entries.is_empty() {
        return Err(StatsError::NoRecords);
    }
    if entries.iter().any(|&(rank, rho)| rank == 0 || !rho.is_finite()) {
        return Err(StatsError::DomainError(
            "ranks must be >= 1 and rho finite".into(),
        ));
    }

    let mut sums: std::collections::BTreeMap<u32, (f64, usize)> = std::collections::BTreeMap::new();
    for &(rank, rho) in entries {
        let bin_index = (rank - 1) / bin_width;
        let entry = sums.entry(bin_index).or_insert((0.0, 0));
        entry.0 += rho;
        entry.1 += 1;
    }
    let bins: Vec<RankBin> = sums
        .into_iter()
        .map(|(index, (sum, count))| RankBin {
            bin_start_rank: index * bin_width + 1,
            mean_rho: sum / count as f64,
            count,
        })
        .collect();

    let xs: Vec<f64> = bins
        .iter()
        .map(|b| b.bin_start_rank as f64 + (bin_width - 1) as f64 / 2.0)
        .collect();
    let ys: Vec<f64> = bins.iter().map(|b| b.mean_rho).collect();
    let linear_fit = ols(&xs, &ys);

    Ok(RankBinSeries {
        bin_width,
        bins,
        linear_fit,
    })
}

fn ols(x: &[f64], y: &[f64]) -> LinearFit {
    let n = x.len() as f64;
    let mean_x = x.iter().sum::<f64>() / n;
    let mean_y = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mean_x) * (xi - mean_x);
        sxy += (xi - mean_x) * (yi - mean_y);
    }
    // a single bin (or identical midpoints) pins the line flat through the mean
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = mean_y - slope * mean_x;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let predicted = intercept + slope * xi;
        ss_res += (yi - predicted) * (yi - predicted);
        ss_tot += (yi - mean_y) * (yi - mean_y);
    }
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        1.0 - ss_res / ss_tot
    };
    LinearFit {
        slope,
        intercept,
        r_squared,
    }
}

/// Write rank bins as CSV with header `bin_start_rank,mean_rho,count`.
pub fn write_rank_bins_csv<W: Write>(
    series: &RankBinSeries,
    mut w: W,
) -> Result<(), StatsError> {
    writeln!(w, "bin_start_rank,mean_rho,count")?;
    for bin in &series.bins {
        writeln!(w, "{},{},{}", bin.bin_start_rank, bin.mean_rho, bin.count)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_rho_gives_flat_line() {
        let entries: Vec<(u32, f64)> = (1..=100).map(|rank| (rank, 0.2)).collect();
        let series = rank_binned_means(&entries, 50).unwrap();
        assert_eq!(series.bins.len(), 2);
        assert_eq!(series.bins[0].bin_start_rank, 1);
        assert_eq!(series.bins[1].bin_start_rank, 51);
        assert!(series.bins.iter().all(|b| (b.mean_rho - 0.2).abs() < 1e-15));
        assert_eq!(series.linear_fit.slope, 0.0);
    }

    #[test]
    fn exact_linear_rho_is_recovered() {
        let entries: Vec<(u32, f64)> = (1..=100).map(|rank| (rank, rank as f64 / 1000.0)).collect();
        let series = rank_binned_means(&entries, 50).unwrap();
        assert!((series.linear_fit.slope - 1e-3).abs() < 1e-12);
        assert!((series.linear_fit.r_squared - 1.0).abs() < 1e-12);
        // bin means sit exactly at midpoint/1000
        assert!((series.bins[0].mean_rho - 0.0255).abs() < 1e-12);
    }

    #[test]
    fn empty_rank_ranges_are_omitted() {
        let mut entries: Vec<(u32, f64)> = (1..=50).map(|rank| (rank, 0.1)).collect();
        entries.extend((101..=150).map(|rank| (rank, 0.3)));
        let series = rank_binned_means(&entries, 50).unwrap();
        assert_eq!(series.bins.len(), 2);
        assert_eq!(series.bins[1].bin_start_rank, 101);
        assert!(series.linear_fit.slope > 0.0);
    }

    #[test]
    fn empty_input_is_an_error() {
        assert!(matches!(
            rank_binned_means(&[], 50),
            Err(StatsError::NoRecords)
        ));
    }

    #[test]
    fn csv_schema() {
        let entries: Vec<(u32, f64)> = (1..=10).map(|rank| (rank, 0.5)).collect();
        let series = rank_binned_means(&entries, 5).unwrap();
        let mut buf = Vec::new();
        write_rank_bins_csv(&series, &mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("bin_start_rank,mean_rho,count\n1,0.5,5\n"));
    }
}
