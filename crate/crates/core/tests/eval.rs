mod common;

use common::real_record;
use proptest::prelude::*;
use sim2real::eval::{boundary_rate, collision_rate, context_grid, l2_metric, EvalSettings};
use sim2real::planners::{kinematic_baseline, KinematicMode, Prediction, Trajectory};
use sim2real::simworld::{list_categories, ScenarioCategory};

fn traj() -> impl Strategy<Value = Trajectory> {
    (
        prop::array::uniform6(prop::array::uniform2(-50.0..50.0f64)),
        prop::array::uniform6(0.0..20.0f64),
    )
        .prop_map(|(waypoints, speeds)| Trajectory { waypoints, speeds })
}

fn shifted(t: &Trajectory, d: [f64; 2]) -> Trajectory {
    let mut out = *t;
    for w in &mut out.waypoints {
        w[0] += d[0];
        w[1] += d[1];
    }
    out
}

proptest! {
    #[test]
    fn l2_is_translation_invariant_and_symmetric(p in traj(), g in traj(), d in prop::array::uniform2(-1e3..1e3f64)) {
        let base = l2_metric(&p, &g);
        let moved = l2_metric(&shifted(&p, d), &shifted(&g, d));
        for (a, b) in base.as_array().iter().zip(moved.as_array()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
        prop_assert_eq!(base, l2_metric(&g, &p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn rates_are_monotone_and_count_based(
        seeds in prop::collection::vec((prop::sample::select(list_categories()), 0..3_000u64), 1..12),
        jitter in prop::collection::vec(prop::array::uniform2(-3.0..3.0f64), 12),
    ) {
        let s = EvalSettings::default();
        let (mut preds, mut ctxs, mut grids) = (vec![], vec![], vec![]);
        for (i, &(cat, seed)) in seeds.iter().enumerate() {
            let (r, c) = real_record(cat, seed);
            let mut t = kinematic_baseline(&r, KinematicMode::ConstantTurnRate);
            for (k, w) in t.waypoints.iter_mut().enumerate() {
                w[0] += jitter[i][0] * k as f64;
                w[1] += jitter[i][1] * k as f64;
            }
            preds.push(Prediction { id: r.id.clone(), trajectory: t });
            grids.push(context_grid(&c, s.grid_resolution).unwrap());
            ctxs.push(c);
        }
        for rate in [collision_rate(&preds, &ctxs, &s).unwrap(), boundary_rate(&preds, &grids, &s).unwrap()] {
            let steps = rate.counters.step_pct();
            for t in 0..6 {
                prop_assert_eq!(rate.counters.total[t], preds.len());
                prop_assert_eq!(steps[t], 100.0 * rate.counters.events[t] as f64 / preds.len() as f64);
                if t > 0 {
                    prop_assert!(steps[t] >= steps[t - 1]);
                }
            }
            prop_assert!(rate.pct.h1 <= rate.pct.h2 && rate.pct.h2 <= rate.pct.h3);
        }
    }
}

#[test]
fn ground_truth_scores_zero_l2() {
    let (r, _) = real_record(ScenarioCategory::H2dEnvironmental, 5);
    let gt = Trajectory::ground_truth(&r);
    assert_eq!(l2_metric(&gt, &gt).as_array(), [0.0; 4]);
}
