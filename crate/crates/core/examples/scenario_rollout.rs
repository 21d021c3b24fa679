//! Rolls out one episode per scenario category and prints its labels and
//! teacher diagnostics. The first argument picks the seed.

use sim2real::simworld::{classify_episode, instantiate_scenario, list_categories, simulate_episode};

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for cat in list_categories() {
        let spec = instantiate_scenario(cat, seed);
        let ep = simulate_episode(&spec, 5.5, 0.5).expect("rollout");
        let l = classify_episode(&ep);
        let last = ep.frames.last().unwrap();
        println!(
            "{cat:<26} {:?} {:?} {:?}/{:?}  end ({:.1}, {:.1}) v {:.1}  hazard {:?}  collision {}",
            l.time,
            l.weather,
            l.maneuver,
            l.difficulty,
            last.ego.pose.x,
            last.ego.pose.y,
            last.ego.v,
            ep.diagnostics.hazard_time,
            ep.diagnostics.collision.is_some()
        );
    }
}
