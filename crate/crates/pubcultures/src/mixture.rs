//! Two-component univariate Gaussian mixtures.
//!
//! [`fit_gmm2`] fits `P(x) = w·N(x|μ1,σ1) + (1−w)·N(x|μ2,σ2)` to a sample by
//! expectation-maximization, with a deterministic median-split start plus
//! seeded random restarts, a variance floor against component collapse, and
//! canonical labeling μ1 ≤ μ2. [`mixture_minimum`] locates the interior
//! minimum of the fitted density between the two means, which serves as the
//! group-separation threshold, and [`peak_gap_series`] collects μ2−μ1 across
//! yearly fits.

use std::collections::BTreeMap;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::Level;

/// Lower bound on component standard deviations, preventing collapse onto a
/// single point. Small relative to the unit interval the ratio lives on.
pub const SIGMA_FLOOR: f64 = 1e-4;

/// Number of seeded random restarts tried in addition to the median split.
pub const RESTARTS: usize = 8;

#[derive(Debug, Error)]
pub enum MixtureError {
    #[error("need at least 4 samples, got {0}")]
    TooFewSamples(usize),
    /// All samples are identical; a two-component fit is meaningless.
    #[error("degenerate data: all {0} samples are identical")]
    DegenerateData(usize),
    #[error("samples must be finite")]
    NonFinite,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The mixture has no interior local minimum between the means; the
    /// density is unimodal there and no separating threshold exists.
    #[error("mixture has no interior minimum between mu1={mu1} and mu2={mu2}")]
    NoInteriorMinimum { mu1: f64, mu2: f64 },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

/// A fitted two-component mixture, labeled so that `mu1 <= mu2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    /// Weight of component 1 (the lower-mean component).
    pub weight: f64,
    pub mu1: f64,
    pub mu2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub log_likelihood: f64,
    pub iterations: u32,
    /// False when the iteration budget ran out before the log-likelihood
    /// change fell below tolerance; the best parameters found are still
    /// returned.
    pub converged: bool,
}

/// Yearly peak gaps μ2 − μ1 at one aggregation level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakGapSeries {
    pub level: Level,
    /// `(year, gap)` in ascending year order.
    pub entries: Vec<(i32, f64)>,
}

fn log_normal_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    const LN_SQRT_TAU: f64 = 0.918_938_533_204_672_8; // ln sqrt(2π)
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_TAU
}

#[derive(Debug, Clone, Copy)]
struct Params {
    weight: f64,
    mu: [f64; 2],
    sigma: [f64; 2],
}

struct EmRun {
    params: Params,
    trace: Vec<f64>,
    converged: bool,
}

fn em_run(samples: &[f64], start: Params, tolerance: f64, max_iterations: u32) -> EmRun {
    let n = samples.len() as f64;
    let mut params = start;
    let mut trace = Vec::new();
    let mut converged = false;
    let mut responsibilities = vec![0.0f64; samples.len()];

    for _ in 0..max_iterations {
        // E step, accumulating the log-likelihood with log-sum-exp.
        let lw1 = params.weight.ln();
        let lw2 = (1.0 - params.weight).ln();
        let mut log_likelihood = 0.0;
        for (i, &x) in samples.iter().enumerate() {
            let l1 = lw1 + log_normal_pdf(x, params.mu[0], params.sigma[0]);
            let l2 = lw2 + log_normal_pdf(x, params.mu[1], params.sigma[1]);
            let m = l1.max(l2);
            let e1 = (l1 - m).exp();
            let e2 = (l2 - m).exp();
            responsibilities[i] = e1 / (e1 + e2);
            log_likelihood += m + (e1 + e2).ln();
        }
        trace.push(log_likelihood);
        if trace.len() > 1 {
            let delta = log_likelihood - trace[trace.len() - 2];
            if delta.abs() < tolerance {
                converged = true;
                break;
            }
        }

        // M step with the variance floor.
        let r1: f64 = responsibilities.iter().sum();
        let r2 = n - r1;
        params.weight = (r1 / n).clamp(1e-10, 1.0 - 1e-10);
        if r1 > 0.0 {
            let mu1 = samples
                .iter()
                .zip(&responsibilities)
                .map(|(&x, &r)| r * x)
                .sum::<f64>()
                / r1;
            let var1 = samples
                .iter()
                .zip(&responsibilities)
                .map(|(&x, &r)| r * (x - mu1) * (x - mu1))
                .sum::<f64>()
                / r1;
            params.mu[0] = mu1;
            params.sigma[0] = var1.sqrt().max(SIGMA_FLOOR);
        }
        if r2 > 0.0 {
            let mu2 = samples
                .iter()
                .zip(&responsibilities)
                .map(|(&x, &r)| (1.0 - r) * x)
                .sum::<f64>()
                / r2;
            let var2 = samples
                .iter()
                .zip(&responsibilities)
                .map(|(&x, &r)| (1.0 - r) * (x - mu2) * (x - mu2))
                .sum::<f64>()
                / r2;
            params.mu[1] = mu2;
            params.sigma[1] = var2.sqrt().max(SIGMA_FLOOR);
        }
    }

    EmRun {
        params,
        trace,
        converged,
    }
}

fn validate_samples(samples: &[f64]) -> Result<Vec<f64>, MixtureError> {
    if samples.len() < 4 {
        return Err(MixtureError::TooFewSamples(samples.len()));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(MixtureError::NonFinite);
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    if sorted.first() == sorted.last() {
        return Err(MixtureError::DegenerateData(samples.len()));
    }
    Ok(sorted)
}

fn starts(sorted: &[f64], seed: u64) -> Vec<Params> {
    let n = sorted.len();
    let mean = sorted.iter().sum::<f64>() / n as f64;
    let sd = (sorted.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64)
        .sqrt()
        .max(SIGMA_FLOOR);

    let half_stats = |half: &[f64]| -> (f64, f64) {
        let m = half.iter().sum::<f64>() / half.len() as f64;
        let v = half.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / half.len() as f64;
        (m, v.sqrt().max(SIGMA_FLOOR))
    };

    // Deterministic start: split at the sample median.
    let mid = n / 2;
    let (m_low, s_low) = half_stats(&sorted[..mid]);
    let (m_high, s_high) = half_stats(&sorted[mid..]);
    let mut all = vec![Params {
        weight: mid as f64 / n as f64,
        mu: [m_low, m_high],
        sigma: [s_low, s_high],
    }];

    // Seeded restarts: means picked from the sample, shared spread.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RESTARTS {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        all.push(Params {
            weight: rng.random_range(0.25..0.75),
            mu: [sorted[i], sorted[j]],
            sigma: [sd, sd],
        });
    }
    all
}

/// Fit a two-component Gaussian mixture by EM.
///
/// The sample is sorted internally, so the result does not depend on input
/// order. Each candidate start (one median split plus [`RESTARTS`] seeded
/// random restarts) is iterated until the log-likelihood improvement drops
/// below `tolerance` or `max_iterations` is reached, and the best final
/// log-likelihood wins. A fit that hit the iteration budget is returned with
/// `converged = false` rather than as an error.
pub fn fit_gmm2(
    samples: &[f64],
    tolerance: f64,
    max_iterations: u32,
    seed: u64,
) -> Result<MixtureFit, MixtureError> {
    fit_gmm2_with_trace(samples, tolerance, max_iterations, seed).map(|(fit, _)| fit)
}

/// [`fit_gmm2`] returning the winning run's per-iteration log-likelihoods
/// alongside the fit. The trace is non-decreasing up to floating-point noise,
/// which is the EM monotonicity guarantee tests assert against.
pub fn fit_gmm2_with_trace(
    samples: &[f64],
    tolerance: f64,
    max_iterations: u32,
    seed: u64,
) -> Result<(MixtureFit, Vec<f64>), MixtureError> {
    if !(tolerance.is_finite() && tolerance > 0.0) {
        return Err(MixtureError::InvalidParameter(format!(
            "tolerance must be > 0, got {tolerance}"
        )));
    }
    if max_iterations == 0 {
        return Err(MixtureError::InvalidParameter(
            "max_iterations must be >= 1".into(),
        ));
    }
    let sorted = validate_samples(samples)?;

    let mut best: Option<EmRun> = None;
    for start in starts(&sorted, seed) {
        let run = em_run(&sorted, start, tolerance, max_iterations);
        let score = *run.trace.last().expect("at least one iteration");
        let better = match &best {
            Some(current) => score > *current.trace.last().expect("non-empty"),
            None => true,
        };
        if better {
            best = Some(run);
        }
    }
    let run = best.expect("at least one start");

    let p = run.params;
    let (weight, mu1, mu2, sigma1, sigma2) = if p.mu[0] <= p.mu[1] {
        (p.weight, p.mu[0], p.mu[1], p.sigma[0], p.sigma[1])
    } else {
        (1.0 - p.weight, p.mu[1], p.mu[0], p.sigma[1], p.sigma[0])
    };
    let fit = MixtureFit {
        weight,
        mu1,
        mu2,
        sigma1,
        sigma2,
        log_likelihood: *run.trace.last().expect("non-empty"),
        iterations: run.trace.len() as u32,
        converged: run.converged,
    };
    Ok((fit, run.trace))
}

/// Mixture density at `x`.
pub fn mixture_pdf(fit: &MixtureFit, x: f64) -> f64 {
    fit.weight * log_normal_pdf(x, fit.mu1, fit.sigma1).exp()
        + (1.0 - fit.weight) * log_normal_pdf(x, fit.mu2, fit.sigma2).exp()
}

fn mixture_pdf_derivative(fit: &MixtureFit, x: f64) -> f64 {
    let d1 = log_normal_pdf(x, fit.mu1, fit.sigma1).exp() * (-(x - fit.mu1))
        / (fit.sigma1 * fit.sigma1);
    let d2 = log_normal_pdf(x, fit.mu2, fit.sigma2).exp() * (-(x - fit.mu2))
        / (fit.sigma2 * fit.sigma2);
    fit.weight * d1 + (1.0 - fit.weight) * d2
}

/// Interior minimum of the mixture density between the two means.
///
/// A 10⁴-point scan over (μ1, μ2) brackets the dip; bisection on the analytic
/// density derivative then refines the location well below 1e−8. Errors with
/// [`MixtureError::NoInteriorMinimum`] when the density is unimodal between
/// the means.
pub fn mixture_minimum(fit: &MixtureFit) -> Result<f64, MixtureError> {
    const GRID: usize = 10_000;
    let (a, b) = (fit.mu1, fit.mu2);
    let no_minimum = Err(MixtureError::NoInteriorMinimum { mu1: a, mu2: b });
    if !(b > a) {
        return no_minimum;
    }

    let spacing = (b - a) / (GRID + 1) as f64;
    // values[i] = pdf at a + i*spacing, endpoints included
    let values: Vec<f64> = (0..=GRID + 1)
        .map(|i| mixture_pdf(fit, a + i as f64 * spacing))
        .collect();
    let interior_argmin = (1..=GRID)
        .min_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite"))
        .expect("non-empty grid");
    // Adjacent grid points can tie exactly (symmetric mixtures straddle the
    // dip), so expand the minimal plateau before testing for a strict dip.
    let mut left = interior_argmin;
    while left > 1 && values[left - 1] == values[interior_argmin] {
        left -= 1;
    }
    let mut right = interior_argmin;
    while right < GRID && values[right + 1] == values[interior_argmin] {
        right += 1;
    }
    let is_dip = values[left - 1] > values[interior_argmin]
        && values[right + 1] > values[interior_argmin];
    if !is_dip {
        return no_minimum;
    }

    let mut lo = a + (left - 1) as f64 * spacing;
    let mut hi = a + (right + 1) as f64 * spacing;
    if !(mixture_pdf_derivative(fit, lo) < 0.0 && mixture_pdf_derivative(fit, hi) > 0.0) {
        // The dip failed the derivative sign check, so it was grid noise.
        return no_minimum;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo < 1e-13 {
            break;
        }
        if mixture_pdf_derivative(fit, mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Collect μ2 − μ1 from yearly fits, in year order.
pub fn peak_gap_series(fits_by_year: &BTreeMap<i32, MixtureFit>, level: Level) -> PeakGapSeries {
    PeakGapSeries {
        level,
        entries: fits_by_year
            .iter()
            .map(|(&year, fit)| (year, fit.mu2 - fit.mu1))
            .collect(),
    }
}

/// Write a peak-gap series as CSV with header `level,year,gap`.
pub fn write_peak_gap_csv<W: Write>(series: &PeakGapSeries, mut w: W) -> Result<(), MixtureError> {
    writeln!(w, "level,year,gap")?;
    for (year, gap) in &series.entries {
        writeln!(w, "{},{},{}", series.level, year, gap)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replicator::synthesize_rho_samples;
    use approx::assert_relative_eq;

    fn well_separated_sample() -> Vec<f64> {
        // 40% low peak: synthesize puts 1-omega_coop of the mass there.
        synthesize_rho_samples(0.6, (0.10, 0.03), (0.30, 0.05), 5000, 31).unwrap()
    }

    #[test]
    fn recovers_known_mixture() {
        let samples = well_separated_sample();
        let fit = fit_gmm2(&samples, 1e-8, 500, 1).unwrap();
        assert!(fit.converged);
        assert!((fit.weight - 0.4).abs() < 0.02, "weight {}", fit.weight);
        assert!((fit.mu1 - 0.10).abs() < 0.02);
        assert!((fit.mu2 - 0.30).abs() < 0.02);
        assert!((fit.sigma1 - 0.03).abs() < 0.01);
        assert!((fit.sigma2 - 0.05).abs() < 0.01);
    }

    #[test]
    fn log_likelihood_trace_is_monotone() {
        let samples = well_separated_sample();
        let (_, trace) = fit_gmm2_with_trace(&samples, 1e-8, 500, 1).unwrap();
        for pair in trace.windows(2) {
            assert!(pair[1] >= pair[0] - 1e-9 * pair[0].abs().max(1.0));
        }
    }

    #[test]
    fn degenerate_and_tiny_inputs_error() {
        assert!(matches!(
            fit_gmm2(&[0.2; 50], 1e-8, 100, 0),
            Err(MixtureError::DegenerateData(50))
        ));
        assert!(matches!(
            fit_gmm2(&[0.1, 0.2, 0.3], 1e-8, 100, 0),
            Err(MixtureError::TooFewSamples(3))
        ));
    }

    #[test]
    fn point_masses_hit_sigma_floor() {
        // Two jittered point masses: responsibilities snap to 0/1 and the
        // component spread collapses to the floor.
        let mut samples = Vec::new();
        for i in 0..100 {
            let jitter = (i as f64 - 49.5) / 49.5 * 1e-6;
            samples.push(0.1 + jitter);
            samples.push(0.9 + jitter);
        }
        let fit = fit_gmm2(&samples, 1e-8, 500, 3).unwrap();
        assert!((fit.weight - 0.5).abs() < 1e-6);
        assert!((fit.mu1 - 0.1).abs() < 1e-5);
        assert!((fit.mu2 - 0.9).abs() < 1e-5);
        assert_eq!(fit.sigma1, SIGMA_FLOOR);
        assert_eq!(fit.sigma2, SIGMA_FLOOR);
    }

    #[test]
    fn fit_is_independent_of_sample_order() {
        let samples = well_separated_sample();
        let mut reversed = samples.clone();
        reversed.reverse();
        let a = fit_gmm2(&samples, 1e-8, 500, 9).unwrap();
        let b = fit_gmm2(&reversed, 1e-8, 500, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn unconverged_fit_is_flagged_not_rejected() {
        let samples = well_separated_sample();
        let fit = fit_gmm2(&samples, 1e-12, 2, 1).unwrap();
        assert!(!fit.converged);
        assert_eq!(fit.iterations, 2);
    }

    #[test]
    fn pdf_matches_standard_normal_peak() {
        let fit = MixtureFit {
            weight: 1.0,
            mu1: 0.0,
            mu2: 5.0,
            sigma1: 1.0,
            sigma2: 1.0,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        assert_relative_eq!(
            mixture_pdf(&fit, 0.0),
            0.3989422804014327,
            epsilon = 1e-12
        );
    }

    #[test]
    fn pdf_symmetry_of_equal_weights() {
        let fit = MixtureFit {
            weight: 0.5,
            mu1: -1.0,
            mu2: 1.0,
            sigma1: 1.0,
            sigma2: 1.0,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        let single = log_normal_pdf(0.0, -1.0, 1.0).exp();
        assert_relative_eq!(mixture_pdf(&fit, 0.0), single, epsilon = 1e-12);
    }

    #[test]
    fn pdf_integrates_to_one() {
        let fit = MixtureFit {
            weight: 0.37,
            mu1: 0.1,
            mu2: 0.4,
            sigma1: 0.02,
            sigma2: 0.07,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        // Simpson's rule over a wide bracket.
        let (a, b, n) = (-1.0f64, 2.0f64, 20_000usize);
        let h = (b - a) / n as f64;
        let mut integral = mixture_pdf(&fit, a) + mixture_pdf(&fit, b);
        for i in 1..n {
            let weight = if i % 2 == 0 { 2.0 } else { 4.0 };
            integral += weight * mixture_pdf(&fit, a + i as f64 * h);
        }
        integral *= h / 3.0;
        assert!((integral - 1.0).abs() < 1e-6);
    }

    #[test]
    fn symmetric_minimum_sits_halfway() {
        let fit = MixtureFit {
            weight: 0.5,
            mu1: 0.0,
            mu2: 1.0,
            sigma1: 0.1,
            sigma2: 0.1,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        assert!((mixture_minimum(&fit).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_minimum_matches_dense_grid() {
        let fit = MixtureFit {
            weight: 0.5,
            mu1: 0.0,
            mu2: 1.0,
            sigma1: 0.1,
            sigma2: 0.2,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        let x_star = mixture_minimum(&fit).unwrap();
        let n = 1_000_000;
        let grid_argmin = (1..n)
            .map(|i| i as f64 / n as f64)
            .min_by(|&x, &y| {
                mixture_pdf(&fit, x)
                    .partial_cmp(&mixture_pdf(&fit, y))
                    .unwrap()
            })
            .unwrap();
        assert!(
            (x_star - grid_argmin).abs() < 1e-4,
            "refined {x_star} vs grid {grid_argmin}"
        );
    }

    #[test]
    fn overlapping_components_have_no_interior_minimum() {
        let fit = MixtureFit {
            weight: 0.5,
            mu1: 0.0,
            mu2: 0.1,
            sigma1: 1.0,
            sigma2: 1.0,
            log_likelihood: 0.0,
            iterations: 0,
            converged: true,
        };
        assert!(matches!(
            mixture_minimum(&fit),
            Err(MixtureError::NoInteriorMinimum { .. })
        ));
    }

    #[test]
    fn gap_series_in_year_order() {
        let fit = |mu1: f64, mu2: f64| MixtureFit {
            weight: 0.5,
            mu1,
            mu2,
            sigma1: 0.05,
            sigma2: 0.05,
            log_likelihood: 0.0,
            iterations: 1,
            converged: true,
        };
        let fits = BTreeMap::from([
            (2020, fit(0.1, 0.3)),
            (2019, fit(0.1, 0.2)),
            (2021, fit(0.1, 0.3)),
        ]);
        let series = peak_gap_series(&fits, Level::University);
        assert_eq!(series.entries.len(), 3);
        assert_eq!(series.entries[0].0, 2019);
        assert_relative_eq!(series.entries[0].1, 0.1, epsilon = 1e-12);
        assert_relative_eq!(series.entries[1].1, 0.2, epsilon = 1e-12);
        // identical fits give equal gaps
        assert_eq!(series.entries[1].1, series.entries[2].1);

        let mut buf = Vec::new();
        write_peak_gap_csv(&series, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("level,year,gap\nuniversity,2019,"));
    }
}
