mod common;

use std::collections::BTreeMap;

use common::{dist, real_record, sim_record};
use proptest::prelude::*;
use sim2real::curation::{
    align_record, balance_report, read_jsonl, stratified_sample, write_jsonl, Dimension,
    Provenance, StratumLabels, StratumQuota,
};
use sim2real::geometry::{FrameConvention, RoofOffset};
use sim2real::simworld::{list_categories, Maneuver, ScenarioCategory, TimeOfDay, Weather};

fn points(r: &sim2real::curation::EpisodeRecord) -> Vec<[f64; 2]> {
    let mut p: Vec<[f64; 2]> = r.gt_waypoints.clone();
    for h in &r.history {
        p.push(h.ego.pose.xy());
        p.extend(h.agents.iter().map(|a| a.pose.xy()));
    }
    p
}

fn labels(i: usize) -> StratumLabels {
    StratumLabels {
        time: if i & 1 == 0 { TimeOfDay::Day } else { TimeOfDay::Night },
        weather: if i & 2 == 0 { Weather::Sunny } else { Weather::Rainy },
        maneuver: if i & 4 == 0 { Maneuver::Straight } else { Maneuver::Turn },
        provenance: Provenance::Sim,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn alignment_is_an_isometry(cat in prop::sample::select(list_categories()), seed in 0..5_000u64) {
        let (r, _) = real_record(cat, seed);
        let lh = align_record(&r, FrameConvention::LH_FRU_WHEEL, RoofOffset::default()).unwrap();
        let (a, b) = (points(&r), points(&lh));
        prop_assert_eq!(a.len(), b.len());
        for i in 0..a.len() {
            for j in i + 1..a.len() {
                prop_assert!((dist(a[i], a[j]) - dist(b[i], b[j])).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn stratum_shares_within_one_over_n(
        sizes in prop::collection::vec(0..400usize, 8),
        n in 1..600usize,
        seed in any::<u64>(),
        preset in prop::sample::select(vec!["HASS", "nuScenes-like"]),
    ) {
        // Every stratum gets at least n items so the quota is always met.
        let pool: Vec<StratumLabels> = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(labels(i), k + n))
            .collect();
        let quota = StratumQuota::preset(preset).unwrap();
        let s = stratified_sample(&pool, &quota, n, seed).unwrap();
        prop_assert!(s.is_complete());
        prop_assert_eq!(s.records.len(), n);
        let mut counts: BTreeMap<Vec<&str>, usize> = BTreeMap::new();
        for r in &s.records {
            *counts.entry(quota.key_of(r)).or_default() += 1;
        }
        for (key, target) in quota.joint_strata() {
            let got = counts.get(&key).copied().unwrap_or(0) as f64 / n as f64;
            prop_assert!((got - target).abs() < 1.0 / n as f64, "{:?}: {} vs {}", key, got, target);
        }
    }

    #[test]
    fn balance_shares_sum_to_100(sizes in prop::collection::vec(0..300usize, 8)) {
        let pool: Vec<StratumLabels> = sizes
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat_n(labels(i), k))
            .collect();
        prop_assume!(!pool.is_empty());
        let report = balance_report(&pool);
        for dim in Dimension::REPORTED {
            let total: f64 = report
                .rows
                .iter()
                .filter(|r| r.dimension == dim)
                .map(|r| {
                    let open = r.cell.find('(').unwrap();
                    r.cell[open + 1..r.cell.len() - 2].parse::<f64>().unwrap()
                })
                .sum();
            prop_assert!((total - 100.0).abs() <= 0.01 + 1e-9, "{:?} sums to {}", dim, total);
        }
    }

    #[test]
    fn jsonl_round_trip_is_exact(seed in 0..2_000u64, scale in -30i32..30, sim in any::<bool>()) {
        let cat = ScenarioCategory::H2dEnvironmental;
        let (mut r, _) = if sim { sim_record(cat, seed) } else { real_record(cat, seed) };
        for w in &mut r.gt_waypoints {
            w[0] *= 10f64.powi(scale) / 3.0;
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.jsonl");
        write_jsonl(&path, std::slice::from_ref(&r)).unwrap();
        prop_assert_eq!(read_jsonl(&path).unwrap(), vec![r]);
    }
}
