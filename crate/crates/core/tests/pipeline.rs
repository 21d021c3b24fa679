use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use sim2real::curation::read_jsonl;
use sim2real::eval::MetricsReport;
use sim2real::pipeline::{run_pipeline, ExperimentConfig, FamilyCounts, PipelineError, Stage};
use sim2real::planners::PlannerKind;

const STAGES: [Stage; 5] = [Stage::Generate, Stage::Curate, Stage::RenderPrompts, Stage::Evaluate, Stage::Report];

fn config(dir: &Path) -> ExperimentConfig {
    ExperimentConfig {
        seed: 11,
        out_dir: dir.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            for (k, v) in snapshot(&p) {
                out.insert(format!("{}/{k}", p.file_name().unwrap().to_string_lossy()), v);
            }
        } else {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

#[test]
fn generate_writes_requested_count() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.counts = FamilyCounts { e2d_common: 10, h2d_environmental: 0, long_tail: 0 };
    run_pipeline(&cfg, Stage::Generate).unwrap();
    assert_eq!(read_jsonl(&dir.path().join("dataset.jsonl")).unwrap().len(), 10);
    let manifest = fs::read_to_string(dir.path().join("dataset.manifest.json")).unwrap();
    assert!(manifest.contains("\"total\": 10") || manifest.contains("\"total\":10"));
}

#[test]
fn curated_balance_follows_quota() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    // Heavily skewed towards easy daytime driving.
    cfg.counts = FamilyCounts { e2d_common: 600, h2d_environmental: 300, long_tail: 2 };
    run_pipeline(&cfg, Stage::Generate).unwrap();
    run_pipeline(&cfg, Stage::Curate).unwrap();
    let balance = fs::read_to_string(dir.path().join("balance.txt")).unwrap();
    // Day, sunny and straight shares of the preset.
    for (label, target) in [("day", 58.65), ("sunny", 48.39), ("straight", 46.42)] {
        let line = balance.lines().find(|l| l.split_whitespace().nth(1) == Some(label)).unwrap();
        let cell = line.split_whitespace().last().unwrap();
        let pct: f64 = cell.trim_start_matches('(').trim_end_matches("%)").parse().unwrap();
        assert!((pct - target).abs() <= 1.5, "{label}: {pct} vs {target}");
    }
}

#[test]
fn ground_truth_planner_scores_zero() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.planner.kind = PlannerKind::Gt;
    for s in [Stage::Generate, Stage::Curate, Stage::Evaluate] {
        run_pipeline(&cfg, s).unwrap();
    }
    let reports: Vec<MetricsReport> =
        serde_json::from_str(&fs::read_to_string(dir.path().join("metrics.json")).unwrap()).unwrap();
    assert_eq!(reports[0].method, "gt");
    for slice in reports[0].slices.values() {
        assert_eq!(slice.l2.as_array(), [0.0; 4]);
        assert_eq!(slice.collision_pct.as_array(), [0.0; 4]);
    }
}

#[test]
fn stages_are_reproducible_from_files() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [a.path(), b.path()] {
        let cfg = config(d);
        for s in STAGES {
            run_pipeline(&cfg, s).unwrap();
        }
    }
    let first = snapshot(a.path());
    assert!(first.len() >= 12);
    assert_eq!(first, snapshot(b.path()));

    // Deleting downstream artifacts and re-running restores them.
    for f in ["curated.jsonl", "prompts.jsonl", "metrics.json", "predictions.jsonl"] {
        fs::remove_file(a.path().join(f)).unwrap();
    }
    let cfg = config(a.path());
    for s in &STAGES[1..] {
        run_pipeline(&cfg, *s).unwrap();
    }
    assert_eq!(first, snapshot(a.path()));
}

#[test]
fn failures_map_to_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    let err = run_pipeline(&cfg, Stage::Curate).unwrap_err();
    assert!(matches!(err, PipelineError::MissingInput(_)));
    assert_eq!(err.exit_code(), 2);

    cfg.counts = FamilyCounts { e2d_common: 30, h2d_environmental: 0, long_tail: 0 };
    run_pipeline(&cfg, Stage::Generate).unwrap();
    cfg.curate_size = Some(10);
    let err = run_pipeline(&cfg, Stage::Curate).unwrap_err();
    assert_eq!(err.exit_code(), 4, "{err}");

    let path = dir.path().join("dataset.jsonl");
    let mut text = fs::read_to_string(&path).unwrap();
    text.push_str("{\"id\": 3}\n");
    fs::write(&path, text).unwrap();
    cfg.curate_size = None;
    let err = run_pipeline(&cfg, Stage::Curate).unwrap_err();
    assert_eq!(err.exit_code(), 3, "{err}");

    assert_eq!(ExperimentConfig::from_json("{\"sed\": 1}").unwrap_err().exit_code(), 3);
    assert_eq!(ExperimentConfig::from_json("{\"quota\": \"nope\"}").unwrap_err().exit_code(), 3);
}

#[test]
fn cli_flags_and_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_sim2real");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let run = |args: &[&str]| Command::new(bin).args(args).status().unwrap().code();

    assert_eq!(run(&["curate", "--out", out]), Some(2));
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"counts": {"e2d_common": 60, "h2d_environmental": 120, "long_tail": 2}}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    for cmd in ["generate", "curate", "render-prompts"] {
        assert_eq!(run(&[cmd, "--config", cfg, "--out", out, "--seed", "4", "--quota", "HASS"]), Some(0));
    }
    assert_eq!(run(&["evaluate", "--config", cfg, "--out", out, "--planner", "ctrv", "--no-align"]), Some(0));
    assert_eq!(run(&["report", "--config", cfg, "--out", out, "--planner", "ctrv"]), Some(0));
    assert!(dir.path().join("report.txt").exists());
    assert_eq!(run(&["curate", "--out", out, "--quota", "bogus"]), Some(3));
    assert_ne!(run(&["evaluate", "--out", out, "--planner", "gt"]), Some(0));
}
