//! Property tests for invariants that should hold across the whole input
//! space, not just at the worked examples.

use std::collections::BTreeMap;

use proptest::prelude::*;

use pubcultures::ingest::{InstitutionRef, PublicationTally, Publisher};
use pubcultures::metrics::{
    aggregate_country, compute_rho, partition_countries, Level, RhoRecord,
};
use pubcultures::mixture::{fit_gmm2, mixture_pdf, MixtureFit};
use pubcultures::replicator::{integrate, ReplicatorSystem};
use pubcultures::stats::{mann_whitney_u, pearson};

fn tally(ror: &str, country: &str, year: i32, mdpi: u64, big_five: [u64; 5]) -> PublicationTally {
    let total: u64 = mdpi + big_five.iter().sum::<u64>();
    PublicationTally {
        institution: InstitutionRef::new(ror, "U", country, 1).unwrap(),
        year,
        counts_by_publisher: BTreeMap::from([
            (Publisher::Mdpi, mdpi),
            (Publisher::Elsevier, big_five[0]),
            (Publisher::SpringerNature, big_five[1]),
            (Publisher::Wiley, big_five[2]),
            (Publisher::TaylorFrancis, big_five[3]),
            (Publisher::Sage, big_five[4]),
        ]),
        total,
        retracted: 0,
        open_access: 0,
        gold_open_access: 0,
    }
}

proptest! {
    #[test]
    fn rho_is_scale_invariant(
        mdpi in 0u64..5_000,
        b5 in 0u64..5_000,
        scale in 1u64..50,
    ) {
        prop_assume!(mdpi + b5 > 0);
        let base = compute_rho(&tally("0aaaaaaaa", "SI", 2022, mdpi, [b5, 0, 0, 0, 0])).unwrap();
        let scaled = compute_rho(&tally(
            "0aaaaaaaa",
            "SI",
            2022,
            mdpi * scale,
            [b5 * scale, 0, 0, 0, 0],
        ))
        .unwrap();
        prop_assert!((base.rho - scaled.rho).abs() < 1e-12);
    }

    #[test]
    fn rho_is_monotone_in_mdpi(
        mdpi in 0u64..5_000,
        b5 in 1u64..5_000,
        bump in 1u64..100,
    ) {
        let lower = compute_rho(&tally("0aaaaaaaa", "SI", 2022, mdpi, [b5, 0, 0, 0, 0])).unwrap();
        let higher =
            compute_rho(&tally("0aaaaaaaa", "SI", 2022, mdpi + bump, [b5, 0, 0, 0, 0])).unwrap();
        prop_assert!(higher.rho > lower.rho);
    }

    #[test]
    fn country_aggregation_commutes_with_merging(
        counts in proptest::collection::vec((0u64..2_000, 0u64..2_000), 2..8),
    ) {
        prop_assume!(counts.iter().any(|&(m, b)| m + b > 0));
        // per-university tallies
        let tallies: Vec<PublicationTally> = counts
            .iter()
            .enumerate()
            .map(|(i, &(mdpi, b5))| {
                tally(&format!("0aaaaaa{i:02}"), "SI", 2022, mdpi, [b5, 0, 0, 0, 0])
            })
            .collect();
        let per_university = aggregate_country(&tallies, 2022);
        // one pre-merged tally with the summed counts
        let total_mdpi: u64 = counts.iter().map(|&(m, _)| m).sum();
        let total_b5: u64 = counts.iter().map(|&(_, b)| b).sum();
        let merged = vec![tally("0aaaaaaaa", "SI", 2022, total_mdpi, [total_b5, 0, 0, 0, 0])];
        let pre_merged = aggregate_country(&merged, 2022);
        prop_assert_eq!(per_university[0].n_mdpi, pre_merged[0].n_mdpi);
        prop_assert_eq!(per_university[0].n_big_five, pre_merged[0].n_big_five);
        prop_assert!((per_university[0].rho - pre_merged[0].rho).abs() < 1e-15);
    }

    #[test]
    fn partition_is_exhaustive(
        rhos in proptest::collection::vec(1u64..1000, 4..30),
        threshold_millis in 1u64..999,
    ) {
        let threshold = threshold_millis as f64 / 1000.0 + 0.0005;
        let records: Vec<RhoRecord> = rhos
            .iter()
            .enumerate()
            .map(|(i, &m)| {
                RhoRecord::from_counts(format!("C{i}"), Level::Country, 2022, m, 1000 - m)
                    .unwrap()
            })
            .collect();
        match partition_countries(&records, threshold) {
            Ok(partition) => {
                prop_assert_eq!(partition.high.len() + partition.low.len(), records.len());
                prop_assert!(partition.high.is_disjoint(&partition.low));
                for record in &records {
                    if record.rho > threshold {
                        prop_assert!(partition.high.contains(&record.entity_id));
                    } else {
                        prop_assert!(partition.low.contains(&record.entity_id));
                    }
                }
            }
            Err(_) => {
                // legitimate only when one side is empty
                let highs = records.iter().filter(|r| r.rho > threshold).count();
                prop_assert!(highs == 0 || highs == records.len());
            }
        }
    }

    #[test]
    fn mixture_labels_are_canonical_and_pdf_normalized(
        seed in 0u64..1000,
        raw in proptest::collection::vec(0.0f64..1.0, 8..40),
    ) {
        let spread = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            - raw.iter().cloned().fold(f64::INFINITY, f64::min);
        prop_assume!(spread > 1e-3);
        let fit = fit_gmm2(&raw, 1e-8, 200, seed).unwrap();
        prop_assert!(fit.mu1 <= fit.mu2);
        prop_assert!(fit.sigma1 >= pubcultures::mixture::SIGMA_FLOOR);
        prop_assert!(fit.sigma2 >= pubcultures::mixture::SIGMA_FLOOR);
        prop_assert!((0.0..=1.0).contains(&fit.weight));
        prop_assert!(fit.log_likelihood.is_finite());
        let integral = integrate_pdf(&fit);
        prop_assert!((integral - 1.0).abs() < 1e-6, "integral {}", integral);
    }

    #[test]
    fn u_statistics_of_both_groups_sum_to_product(
        a in proptest::collection::vec(0u32..100_000, 1..12),
        b in proptest::collection::vec(0u32..100_000, 1..12),
    ) {
        // map to distinct floats: tie-free by construction
        let mut seen = std::collections::HashSet::new();
        let a: Vec<f64> = a.iter().filter(|v| seen.insert(**v)).map(|&v| v as f64).collect();
        let b: Vec<f64> = b.iter().filter(|v| seen.insert(**v)).map(|&v| v as f64).collect();
        prop_assume!(!a.is_empty() && !b.is_empty());
        let ua = mann_whitney_u(&a, &b).unwrap().u_statistic;
        let ub = mann_whitney_u(&b, &a).unwrap().u_statistic;
        prop_assert_eq!(ua + ub, (a.len() * b.len()) as f64);
    }

    #[test]
    fn p_value_is_invariant_under_monotone_maps(
        a in proptest::collection::vec(0.0f64..1.0, 2..10),
        b in proptest::collection::vec(0.0f64..1.0, 2..10),
        scale in 0.1f64..5.0,
    ) {
        let base = mann_whitney_u(&a, &b).unwrap();
        let transform = |x: f64| (scale * x).exp() + 1.0;
        let ta: Vec<f64> = a.iter().map(|&x| transform(x)).collect();
        let tb: Vec<f64> = b.iter().map(|&x| transform(x)).collect();
        let mapped = mann_whitney_u(&ta, &tb).unwrap();
        prop_assert_eq!(base.p_value, mapped.p_value);
    }

    #[test]
    fn pearson_is_symmetric_and_bounded(
        pairs in proptest::collection::vec((-1000.0f64..1000.0, -1000.0f64..1000.0), 3..40),
    ) {
        let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        match pearson(&x, &y) {
            Ok(r) => {
                prop_assert!(r.abs() <= 1.0 + 1e-12);
                prop_assert_eq!(r, pearson(&y, &x).unwrap());
            }
            Err(_) => {
                let var = |v: &[f64]| {
                    let m = v.iter().sum::<f64>() / v.len() as f64;
                    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
                };
                prop_assert!(var(&x) == 0.0 || var(&y) == 0.0);
            }
        }
    }

    #[test]
    fn trajectories_stay_in_the_unit_interval(
        omega0 in 0.0f64..=1.0,
        lambda in -2.0f64..3.0,
        k in 0.05f64..3.0,
        step in 0.005f64..0.3,
    ) {
        let system = ReplicatorSystem::new(lambda, k).unwrap();
        let trajectory = integrate(omega0, &system, 25.0, step).unwrap();
        for point in &trajectory.samples {
            prop_assert!((0.0..=1.0).contains(&point.omega));
        }
    }

    #[test]
    fn cache_round_trips_arbitrary_tallies(
        mdpi in 0u64..10_000,
        b5 in proptest::array::uniform5(0u64..10_000),
        extra in 0u64..10_000,
        retracted_frac in 0.0f64..1.0,
        oa_frac in 0.0f64..1.0,
        gold_frac in 0.0f64..1.0,
        year in 2000i32..2026,
    ) {
        let mut t = tally("0zzzzzzzz", "AT", year, mdpi, b5);
        t.counts_by_publisher.insert(Publisher::Other, extra);
        t.total += extra;
        t.retracted = (t.total as f64 * retracted_frac) as u64;
        t.open_access = (t.total as f64 * oa_frac) as u64;
        t.gold_open_access = (t.open_access as f64 * gold_frac) as u64;
        t.validate().unwrap();

        let json = serde_json::to_string(&t).unwrap();
        let back: PublicationTally = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(back, t);
    }
}

/// Trapezoid quadrature with the step tied to the narrowest component, so
/// floor-width spikes are still resolved.
fn integrate_pdf(fit: &MixtureFit) -> f64 {
    let sigma_max = fit.sigma1.max(fit.sigma2);
    let a = fit.mu1 - 12.0 * sigma_max;
    let b = fit.mu2 + 12.0 * sigma_max;
    let h_target = fit.sigma1.min(fit.sigma2) / 8.0;
    let n = (((b - a) / h_target).ceil() as usize).clamp(1_000, 2_000_000);
    let h = (b - a) / n as f64;
    let mut sum = 0.5 * (mixture_pdf(fit, a) + mixture_pdf(fit, b));
    for i in 1..n {
        sum += mixture_pdf(fit, a + i as f64 * h);
    }
    sum * h
}
