//! Acceptance suite. Runs every criterion in order, prints one PASS/FAIL
//! line each and exits non-zero if any fails.

use std::collections::BTreeMap;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sim2real::curation::{
    balance_report, record_from_episode, stratified_sample, Dimension, Provenance, RecordOptions,
    StratumLabels, StratumQuota,
};
use sim2real::eval::{context_grid, footprint_on_road, l2_metric, obb_overlap, CellCheck, EvalSettings, ObbFootprint};
use sim2real::geometry::{
    compose, convert_pose, image_to_ego_matrix, optical_extrinsic, CameraCalibration, CameraView,
    FrameConvention, Pose, RoofOffset,
};
use sim2real::i2e::{MlpParams, DEFAULT_EMBED, DEFAULT_HIDDEN, INPUT_DIM};
use sim2real::pipeline::{run_pipeline, run_sim2real_experiment, ExperimentConfig, Stage};
use sim2real::planners::{kinematic_baseline, KinematicMode, Trajectory};
use sim2real::prompt::{parse_answer, render_answer, spe_descriptor};
use sim2real::simworld::{
    instantiate_scenario, list_categories, long_tail_categories, simulate_episode, Maneuver,
    TimeOfDay, Weather,
};

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took <= limit, format!("took {took:.2?}, limit {limit:?}"))
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (lh, rh) = (FrameConvention::LH_FRU_WHEEL, FrameConvention::RH_FLU_ROOF);
    let off = RoofOffset::default();
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let p = Pose::new(
            rng.random_range(-1e3..1e3),
            rng.random_range(-1e3..1e3),
            rng.random_range(-5.0..5.0),
            rng.random_range(-3.14..3.14),
        )
        .unwrap();
        let back = convert_pose(convert_pose(p, lh, rh, off).unwrap(), rh, lh, off).unwrap();
        let e = [back.x - p.x, back.y - p.y, back.z - p.z, (back.yaw - p.yaw).sin()];
        worst = e.iter().fold(worst, |w, v| w.max(v.abs()));
    }
    let mut worst_k: f64 = 0.0;
    for _ in 0..10_000 {
        let f = rng.random_range(200.0..2000.0);
        let c = CameraCalibration {
            name: CameraView::Front,
            fx: f,
            fy: f * rng.random_range(0.8..1.2),
            cx: rng.random_range(300.0..1000.0),
            cy: rng.random_range(200.0..600.0),
            t_cam_to_ego: optical_extrinsic(
                rng.random_range(-3.1..3.1),
                [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)],
            ),
            width: 1600,
            height: 900,
        };
        let m = compose(&image_to_ego_matrix(&c).unwrap(), &c.intrinsic_hom());
        worst_k = worst_k.max(m.max_abs_diff(&c.t_cam_to_ego));
    }
    check(worst < 1e-12, format!("pose round trip error {worst:e}"))?;
    check(worst_k < 1e-10, format!("extrinsic recovery error {worst_k:e}"))?;
    within(start, Duration::from_secs(1))?;
    Ok(format!("pose error {worst:.1e}, extrinsic error {worst_k:.1e}"))
}

/// Inside test in the box frame, written independently of the library.
fn in_box(c: [f64; 2], yaw: f64, l: f64, w: f64, p: [f64; 2]) -> bool {
    let (s, co) = yaw.sin_cos();
    let (dx, dy) = (p[0] - c[0], p[1] - c[1]);
    (co * dx + s * dy).abs() <= l / 2.0 && (-s * dx + co * dy).abs() <= w / 2.0
}

/// Points of a box on a 0.05 m lattice, edges included.
fn box_samples(c: [f64; 2], yaw: f64, l: f64, w: f64) -> Vec<[f64; 2]> {
    let step = 0.05;
    let (nl, nw) = ((l / step).ceil() as usize, (w / step).ceil() as usize);
    let (s, co) = yaw.sin_cos();
    let mut out = Vec::with_capacity((nl + 1) * (nw + 1));
    for i in 0..=nl {
        let u = -l / 2.0 + l * i as f64 / nl as f64;
        for j in 0..=nw {
            let v = -w / 2.0 + w * j as f64 / nw as f64;
            out.push([c[0] + co * u - s * v, c[1] + s * u + co * v]);
        }
    }
    out
}

fn seg_dist(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let u = if len2 == 0.0 { 0.0 } else { (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) };
    (p[0] - a[0] - u * dx).hypot(p[1] - a[1] - u * dy)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut agree, mut off_band) = (0usize, 0usize);
    let n = 10_000;
    for _ in 0..n {
        let a = ([0.0, 0.0], rng.random_range(-3.2..3.2), rng.random_range(0.5..5.0), rng.random_range(0.5..2.5));
        let b = (
            [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)],
            rng.random_range(-3.2..3.2),
            rng.random_range(0.5..5.0),
            rng.random_range(0.5..2.5),
        );
        let fa = ObbFootprint::new(a.0, a.1, a.2, a.3);
        let fb = ObbFootprint::new(b.0, b.1, b.2, b.3);
        let got = obb_overlap(&fa, &fb);
        let reach = (a.2.hypot(a.3) + b.2.hypot(b.3)) / 2.0;
        let oracle = b.0[0].hypot(b.0[1]) <= reach
            && (box_samples(a.0, a.1, a.2, a.3).iter().any(|&p| in_box(b.0, b.1, b.2, b.3, p))
                || box_samples(b.0, b.1, b.2, b.3).iter().any(|&p| in_box(a.0, a.1, a.2, a.3, p)));
        if got == oracle {
            agree += 1;
        } else {
            // A genuine disagreement must vanish once B is grown or shrunk by one sampling cell.
            let d = 0.05 * 2f64.sqrt();
            let grown = obb_overlap(&fa, &ObbFootprint::new(b.0, b.1, b.2 + 2.0 * d, b.3 + 2.0 * d));
            let shrunk = obb_overlap(&fa, &ObbFootprint::new(b.0, b.1, (b.2 - 2.0 * d).max(0.01), (b.3 - 2.0 * d).max(0.01)));
            if grown == shrunk {
                off_band += 1;
            }
        }
    }
    let share = agree as f64 / n as f64;
    check(share >= 0.995, format!("obb agreement {:.2}%", 100.0 * share))?;
    check(off_band == 0, format!("{off_band} obb disagreements away from tangency"))?;

    // Boundary check against point sampling of the continuous lane corridors.
    let s = EvalSettings::default();
    let band = s.grid_resolution * 2f64.sqrt() + 0.05;
    let (mut ep_agree, mut ep_band, mut ep_off, mut violations) = (0, 0, 0, 0);
    let cats = list_categories();
    for k in 0..200u64 {
        let cat = cats[rng.random_range(0..cats.len())];
        let ep = simulate_episode(&instantiate_scenario(cat, 10_000 + k), 5.5, 0.5).unwrap();
        let (r, ctx) = record_from_episode(&ep, &RecordOptions::real(format!("b{k}"), "Boston", k)).unwrap();
        let mut t = kinematic_baseline(&r, KinematicMode::ConstantTurnRate);
        let drift = rng.random_range(-0.6..0.6);
        for (i, w) in t.waypoints.iter_mut().enumerate() {
            w[1] += drift * (i + 1) as f64;
        }
        let grid = context_grid(&ctx, s.grid_resolution).unwrap();
        let half = ctx.lane_width / 2.0;
        let segs: Vec<([f64; 2], [f64; 2])> = ctx
            .lanes
            .iter()
            .flat_map(|l| l.points().windows(2).map(|w| (w[0], w[1])).collect::<Vec<_>>())
            .collect();
        let heads = t.headings();
        let (mut first_grid, mut first_oracle, mut near) = (None, None, false);
        for i in 0..6 {
            let fp = ObbFootprint::new(t.waypoints[i], heads[i], s.ego_length, s.ego_width);
            let grid_off = footprint_on_road(&fp, &grid) != CellCheck::Inside;
            let depth = box_samples(t.waypoints[i], heads[i], s.ego_length, s.ego_width)
                .iter()
                .map(|&p| segs.iter().map(|&(a, b)| seg_dist(p, a, b)).fold(f64::INFINITY, f64::min) - half)
                .fold(f64::NEG_INFINITY, f64::max);
            if grid_off && first_grid.is_none() {
                first_grid = Some(i);
            }
            if depth > 0.0 && first_oracle.is_none() {
                first_oracle = Some(i);
            }
            if grid_off != (depth > 0.0) && depth > -band && depth <= 0.05 {
                near = true;
            }
        }
        if first_grid.is_some() {
            violations += 1;
        }
        if first_grid == first_oracle {
            ep_agree += 1;
        } else if near {
            ep_band += 1;
        } else {
            ep_off += 1;
        }
    }
    check(ep_off == 0, format!("{ep_off} boundary disagreements away from the road edge"))?;
    within(start, Duration::from_secs(10))?;
    Ok(format!(
        "obb {:.2}% of {n}; boundary {ep_agree}/200 episodes identical, {ep_band} differ only at the edge band, {violations} with violations",
        100.0 * share
    ))
}

fn criterion_3() -> Outcome {
    let mut gt = Trajectory::zeros();
    for (k, w) in gt.waypoints.iter_mut().enumerate() {
        *w = [3.0 * (k + 1) as f64, 0.2 * k as f64];
    }
    let mut pred = gt;
    for w in &mut pred.waypoints {
        w[1] += 0.5;
    }
    let l2 = l2_metric(&pred, &gt);
    check(l2.as_array() == [0.5; 4], format!("offset gives {:?}", l2.as_array()))?;
    let mut diag = gt;
    for w in &mut diag.waypoints {
        w[0] += 0.3;
        w[1] += 0.4;
    }
    let l2d = l2_metric(&diag, &gt);
    check(l2d.as_array().iter().all(|v| (v - 0.5).abs() < 1e-15), format!("3-4-5 offset gives {:?}", l2d.as_array()))?;
    check(l2_metric(&gt, &gt).as_array() == [0.0; 4], "identity is not zero")?;
    Ok("offset 0.5 at 1s/2s/3s/avg, identity 0".into())
}

fn criterion_4() -> Outcome {
    // Skewed pool: mostly day, sunny and straight, five times the sample size.
    let mut pool = Vec::new();
    for (time, wt) in [(TimeOfDay::Day, 7), (TimeOfDay::Night, 2)] {
        for (weather, ww) in [(Weather::Sunny, 3), (Weather::Rainy, 2)] {
            for (maneuver, wm) in [(Maneuver::Straight, 4), (Maneuver::Turn, 2)] {
                let k = 47_553 * 5 * wt * ww * wm / (9 * 5 * 6);
                pool.extend(std::iter::repeat_n(
                    StratumLabels { time, weather, maneuver, provenance: Provenance::Sim },
                    k,
                ));
            }
        }
    }
    let quota = StratumQuota::preset("HASS").unwrap();
    let sample = stratified_sample(&pool, &quota, 47_553, 4).map_err(|e| e.to_string())?;
    check(sample.is_complete(), "shortfall on the skewed pool")?;
    let report = balance_report(&sample.records);
    let targets = [
        ("day", 27891),
        ("night", 19662),
        ("sunny", 23010),
        ("rainy", 24543),
        ("straight", 22076),
        ("turn", 25477),
    ];
    let mut cells = Vec::new();
    for (label, count) in targets {
        let got = report.count(label).unwrap_or(0);
        let diff = 100.0 * (got as f64 - count as f64) / 47_553.0;
        check(diff.abs() <= 1.5, format!("{label}: {got} vs {count}"))?;
        let cell = report.cell(label).unwrap().to_string();
        let (num, pct) = cell.split_once(" (").ok_or(format!("bad cell {cell}"))?;
        let pct = pct.strip_suffix("%)").ok_or(format!("bad cell {cell}"))?;
        let (whole, frac) = pct.split_once('.').ok_or(format!("bad cell {cell}"))?;
        check(
            num.chars().all(|c| c.is_ascii_digit())
                && whole.chars().all(|c| c.is_ascii_digit())
                && !whole.is_empty()
                && frac.len() == 2
                && frac.chars().all(|c| c.is_ascii_digit()),
            format!("cell {cell} is not count (pp.pp%)"),
        )?;
        cells.push(cell);
    }
    for exact in ["27891 (58.65%)", "19662 (41.35%)", "22076 (46.42%)", "25477 (53.58%)"] {
        check(cells.iter().any(|c| c == exact), format!("missing {exact}"))?;
    }
    check(
        Dimension::REPORTED.len() == 3 && report.rows.len() == 6,
        "report should have six rows",
    )?;
    Ok(cells.join(", "))
}

fn criterion_5() -> Outcome {
    let wp = [[4.96, 0.12], [8.93, 0.48], [12.62, 1.03], [16.27, 1.78], [19.67, 2.68], [22.94, 3.70]];
    let text = render_answer(&wp, None).map_err(|e| e.to_string())?;
    let expected = "(+4.96, +0.12), (+8.93, +0.48), (+12.62, +1.03), (+16.27, +1.78), (+19.67, +2.68), (+22.94, +3.70)";
    check(text.contains(expected), format!("rendered {text:?}"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..1000 {
        let w: Vec<[f64; 2]> = (0..6).map(|_| [rng.random_range(-60.0..60.0), rng.random_range(-60.0..60.0)]).collect();
        let (back, _) = parse_answer(&render_answer(&w, None).unwrap()).map_err(|e| e.to_string())?;
        for (a, b) in back.iter().zip(&w) {
            check(
                (a[0] - b[0]).abs() <= 0.005 + 1e-9 && (a[1] - b[1]).abs() <= 0.005 + 1e-9,
                format!("{a:?} vs {b:?}"),
            )?;
        }
    }
    let spe = spe_descriptor("Town13", Provenance::Sim);
    check(spe == "You are driving in Town13 under Simulation scenario.", format!("spe {spe:?}"))?;
    Ok("reference answer reproduced, 1000 round trips, SPE line matches".into())
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst: f64 = 0.0;
    for seed in 0..50 {
        let p = MlpParams::init(seed, DEFAULT_HIDDEN, DEFAULT_EMBED).unwrap();
        let m: [f64; INPUT_DIM] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
        worst = worst.max(p.grad_check(&m));
    }
    check(worst < 1e-4, format!("max relative error {worst:e}"))?;
    within(start, Duration::from_secs(5))?;
    Ok(format!("max relative error {worst:.2e} over 50 seeds"))
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let cats = long_tail_categories();
    let (mut collisions, mut total, mut missed) = (0, 0, Vec::new());
    for &cat in &cats {
        for seed in 0..20 {
            let ep = simulate_episode(&instantiate_scenario(cat, seed), 5.5, 0.5).map_err(|e| e.to_string())?;
            total += 1;
            if ep.diagnostics.collision.is_some() {
                collisions += 1;
            }
            if !ep.diagnostics.hazard_triggered() {
                missed.push(format!("{cat}/{seed}"));
            }
        }
    }
    let frac = collisions as f64 / total as f64;
    check(cats.len() == 13, format!("{} long-tail categories", cats.len()))?;
    check(frac <= 0.02, format!("collision fraction {:.2}%", 100.0 * frac))?;
    check(missed.is_empty(), format!("hazard not triggered: {}", missed.join(", ")))?;
    within(start, Duration::from_secs(60))?;
    Ok(format!("{collisions}/{total} collisions, all hazards triggered"))
}

fn criterion_8() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::default();
    let r = run_sim2real_experiment(&cfg).map_err(|e| e.to_string())?;
    let ablation = r.ablation.as_ref().ok_or("no ablation run")?;
    let (h2d, e2d, naive) = (r.h2d_change(&r.with_sim), r.e2d_change(&r.with_sim), r.h2d_change(ablation));
    check(h2d <= -10.0, format!("H2D L2 change {h2d:.1}%"))?;
    check(e2d.abs() <= 10.0, format!("E2D L2 change {e2d:.1}%"))?;
    check(naive > h2d, format!("unaligned H2D change {naive:.1}% vs aligned {h2d:.1}%"))?;
    within(start, Duration::from_secs(120))?;
    Ok(format!(
        "H2D L2 {:.3} -> {:.3} ({h2d:+.1}%), E2D {e2d:+.1}%, unaligned H2D {naive:+.1}%",
        r.real_only.h2d.l2.avg, r.with_sim.h2d.l2.avg
    ))
}

fn files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for e in fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            for (k, v) in files(&p) {
                out.insert(format!("{}/{k}", p.file_name().unwrap().to_string_lossy()), v);
            }
        } else {
            out.insert(p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap());
        }
    }
    out
}

fn criterion_9() -> Outcome {
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let cfg = ExperimentConfig {
            seed: 9,
            out_dir: dir.path().to_path_buf(),
            ..ExperimentConfig::default()
        };
        for s in [Stage::Generate, Stage::Curate, Stage::RenderPrompts, Stage::Evaluate, Stage::Report] {
            run_pipeline(&cfg, s).map_err(|e| e.to_string())?;
        }
        runs.push(files(dir.path()));
    }
    for key in ["dataset.jsonl", "curated.jsonl", "metrics.json", "predictions.jsonl"] {
        check(runs[0].contains_key(key), format!("{key} missing"))?;
    }
    let differing: Vec<&String> = runs[0].keys().filter(|k| runs[0].get(*k) != runs[1].get(*k)).collect();
    check(runs[0].len() == runs[1].len() && differing.is_empty(), format!("differing files: {differing:?}"))?;
    Ok(format!("{} artifacts byte-identical", runs[0].len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("geometry involution", criterion_1),
        ("metric oracle equivalence", criterion_2),
        ("L2 formula", criterion_3),
        ("curation balance", criterion_4),
        ("prompt fidelity", criterion_5),
        ("I2E gradient check", criterion_6),
        ("teacher safety", criterion_7),
        ("sim2real direction", criterion_8),
        ("determinism", criterion_9),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|s| name.contains(s.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e.downcast_ref::<String>().cloned().or(e.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
        });
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("criterion {} {name}: PASS ({took:.2?}) {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} {name}: FAIL ({took:.2?}) {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
