mod common;

use common::real_record;
use sim2real::curation::EpisodeRecord;
use sim2real::eval::l2_metric;
use sim2real::planners::{kinematic_baseline, FeatureSpec, KinematicMode, LinearPlanner, Trajectory};
use sim2real::simworld::ScenarioCategory;

fn train_set() -> Vec<EpisodeRecord> {
    let mut out = Vec::new();
    for seed in 0..150 {
        for cat in [ScenarioCategory::E2dCommon, ScenarioCategory::H2dEnvironmental] {
            let (mut r, _) = real_record(cat, seed);
            r.id = format!("{cat}-{seed}");
            out.push(r);
        }
    }
    out
}

fn sq_err(p: &Trajectory, g: &Trajectory) -> f64 {
    p.waypoints
        .iter()
        .zip(&g.waypoints)
        .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
        .sum()
}

#[test]
fn fit_ignores_training_order() {
    let train = train_set();
    let spec = FeatureSpec::default();
    let a = LinearPlanner::fit(&train, 1e-6, spec).unwrap();
    let mut shuffled = train.clone();
    shuffled.rotate_left(57);
    shuffled.swap(3, 200);
    let b = LinearPlanner::fit(&shuffled, 1e-6, spec).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let other_seed = FeatureSpec { i2e_seed: 9, ..spec };
    assert_ne!(LinearPlanner::fit(&train, 1e-6, other_seed).unwrap().encoder, a.encoder);
}

#[test]
fn fit_beats_constant_velocity_on_training_set() {
    let train = train_set();
    let p = LinearPlanner::fit(&train, 1e-9, FeatureSpec::default()).unwrap();
    let (mut sse_fit, mut sse_cv, mut l2_fit, mut l2_cv) = (0.0, 0.0, 0.0, 0.0);
    for r in &train {
        let gt = Trajectory::ground_truth(r);
        let fit = p.predict(r).unwrap();
        let cv = kinematic_baseline(r, KinematicMode::ConstantVelocity);
        sse_fit += sq_err(&fit, &gt);
        sse_cv += sq_err(&cv, &gt);
        l2_fit += l2_metric(&fit, &gt).avg;
        l2_cv += l2_metric(&cv, &gt).avg;
    }
    // Constant velocity is linear in the current speed, which is a feature.
    assert!(sse_fit <= sse_cv, "{sse_fit} > {sse_cv}");
    assert!(l2_fit <= l2_cv, "{l2_fit} > {l2_cv}");
}
