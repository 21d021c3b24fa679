//! Writes an SVG overlay of ground truth, the constant-velocity baseline
//! and the turn-rate baseline for one turning record.

use sim2real::curation::{record_from_episode, RecordOptions};
use sim2real::eval::svg_overlay;
use sim2real::planners::{kinematic_baseline, KinematicMode};
use sim2real::simworld::{instantiate_scenario, simulate_episode, ScenarioCategory};

fn main() {
    let out = std::env::args().nth(1).unwrap_or_else(|| "overlay.svg".into());
    let ep = simulate_episode(&instantiate_scenario(ScenarioCategory::AbruptPedestrianOnTurn, 4), 5.5, 0.5).unwrap();
    let (r, ctx) = record_from_episode(&ep, &RecordOptions::real("turn-4", "Boston", 4)).unwrap();
    let cv = kinematic_baseline(&r, KinematicMode::ConstantVelocity);
    let ctrv = kinematic_baseline(&r, KinematicMode::ConstantTurnRate);
    std::fs::write(&out, svg_overlay(&r, &ctx, &cv, &ctrv)).unwrap();
    println!("wrote {out}");
}
