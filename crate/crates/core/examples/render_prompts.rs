//! Prints the question and answer for a sim record and a pseudo-real one,
//! then parses the answer back.

use sim2real::curation::{record_from_episode, RecordOptions};
use sim2real::prompt::{parse_answer, prompt_pair};
use sim2real::simworld::{instantiate_scenario, simulate_episode, ScenarioCategory};

fn main() {
    let ep = simulate_episode(&instantiate_scenario(ScenarioCategory::UnprotectedLeftTurn, 2), 5.5, 0.5).unwrap();
    for opts in [RecordOptions::sim("sim-0", "Town13", 2), RecordOptions::real("real-0", "Boston", 2)] {
        let (r, _) = record_from_episode(&ep, &opts).unwrap();
        let pair = prompt_pair(&r).unwrap();
        println!("Q: {}\nA: {}", pair.question, pair.answer);
        let (wp, speeds) = parse_answer(&pair.answer).unwrap();
        println!("parsed {} waypoints, speeds {:?}\n", wp.len(), speeds.map(|s| s.len()));
    }
}
