//! Runs the teacher on every long-tail category and prints per-category
//! collision and hazard-trigger counts. Pass `--all` to include the routine
//! categories and `-v` to list failing seeds.

use sim2real::simworld::{instantiate_scenario, list_categories, long_tail_categories, simulate_episode};

fn main() {
    let seeds: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let verbose = std::env::args().any(|a| a == "-v");
    let mut collisions = 0;
    let mut total = 0;
    let all = std::env::args().any(|a| a == "--all");
    let cats = if all { list_categories() } else { long_tail_categories() };
    for cat in cats {
        let (mut col, mut trig, mut invalid) = (0, 0, 0);
        for seed in 0..seeds {
            let spec = instantiate_scenario(cat, seed);
            let ep = simulate_episode(&spec, 5.5, 0.5).expect("rollout");
            let d = &ep.diagnostics;
            if d.collision.is_some() {
                col += 1;
            }
            if d.hazard_triggered() {
                trig += 1;
            }
            if !ep.is_valid() {
                invalid += 1;
            }
            if verbose && (d.collision.is_some() || (cat.is_long_tail() && !d.hazard_triggered()) || !ep.is_valid()) {
                println!(
                    "  {cat} seed {seed}: collision={:?} hazard={:?} min_v={:.2} status={:?} params={:?}",
                    d.collision, d.hazard_time, d.min_ego_speed, ep.status, spec.params
                );
            }
        }
        collisions += col;
        total += seeds;
        println!("{cat:<26} collisions {col:>2}  hazard {trig:>2}/{seeds}  invalid {invalid}");
    }
    println!(
        "collision fraction {:.2}%",
        100.0 * collisions as f64 / total as f64
    );
}
