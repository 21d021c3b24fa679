#![allow(dead_code)]

use sim2real::curation::{record_from_episode, EpisodeRecord, RecordOptions, SceneContext};
use sim2real::simworld::{instantiate_scenario, simulate_episode, ScenarioCategory};

pub fn sim_record(cat: ScenarioCategory, seed: u64) -> (EpisodeRecord, SceneContext) {
    let ep = simulate_episode(&instantiate_scenario(cat, seed), 5.5, 0.5).unwrap();
    record_from_episode(&ep, &RecordOptions::sim(format!("s{seed}"), "Town13", seed)).unwrap()
}

pub fn real_record(cat: ScenarioCategory, seed: u64) -> (EpisodeRecord, SceneContext) {
    let ep = simulate_episode(&instantiate_scenario(cat, seed), 5.5, 0.5).unwrap();
    record_from_episode(&ep, &RecordOptions::real(format!("r{seed}"), "Boston", seed)).unwrap()
}

/// Euclidean distance between two planar points.
pub fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}
