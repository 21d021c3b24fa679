//! Fits the linear planner on pseudo-real records and compares it with the
//! kinematic baselines on a held-out split.

use sim2real::curation::Provenance;
use sim2real::eval::{evaluate, format_table, EvalSettings};
use sim2real::pipeline::{generate_dataset, split_indices, to_planner_frame, DomainConfig, FamilyCounts};
use sim2real::planners::{predict_all, FeatureSpec, LinearPlanner, PlannerKind};

fn main() {
    let counts = FamilyCounts { e2d_common: 250, h2d_environmental: 250, long_tail: 0 };
    let real = DomainConfig::real();
    let data = generate_dataset(&real, Provenance::Real, &counts, 1, 5.5, 0.5).unwrap();
    let data = to_planner_frame(&data, false, real.roof_offset).unwrap();
    let (train, test) = split_indices(data.records.len(), 0.6, 1);
    let pick = |idx: &[usize]| -> Vec<_> { idx.iter().map(|&i| data.records[i].clone()).collect() };
    let (train, test_records) = (pick(&train), pick(&test));
    let test_contexts: Vec<_> = test.iter().map(|&i| data.contexts[i].clone()).collect();

    let planner = LinearPlanner::fit(&train, 1e-6, FeatureSpec::default()).unwrap();
    let s = EvalSettings::default();
    let mut reports = Vec::new();
    for kind in [PlannerKind::Cv, PlannerKind::Ctrv, PlannerKind::Linear] {
        let preds = predict_all(kind, &test_records, Some(&planner)).unwrap();
        reports.push(evaluate(kind.as_str(), &preds, &test_records, &test_contexts, &s).unwrap());
    }
    let refs: Vec<_> = reports.iter().collect();
    for slice in ["all", "E2D", "H2D"] {
        println!("{}", format_table(&refs, slice));
    }
}
