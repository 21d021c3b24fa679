//! Real-only versus real-plus-sim training, evaluated on held-out
//! pseudo-real records. The first argument picks the seed.

use sim2real::pipeline::{run_sim2real_experiment, ExperimentConfig};

fn main() {
    let cfg = ExperimentConfig {
        seed: std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0),
        ..ExperimentConfig::default()
    };
    let r = run_sim2real_experiment(&cfg).unwrap();
    print!("{}", r.to_text());
    println!(
        "H2D change {:+.1}%, E2D change {:+.1}%",
        r.h2d_change(&r.with_sim),
        r.e2d_change(&r.with_sim)
    );
}
