//! End-to-end stages (generate, curate, render-prompts, evaluate, report)
//! and the sim-to-real comparison. Stages talk only through files in the
//! output directory.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::{
    align_record, align_scene_context, balance_report, max_feasible_size, naive_relabel,
    read_contexts, read_jsonl, record_from_episode, stratified_sample, write_contexts,
    write_jsonl, CameraRig, CurationError, DatasetManifest, EpisodeRecord, NoiseModel, Provenance,
    RecordOptions, RigJitter, SceneContext, Shortfall, StratumQuota,
};
use crate::eval::{
    evaluate, format_report, svg_overlay, EvalError, EvalSettings, MetricsReport, SliceMetrics,
};
use crate::geometry::{FrameConvention, RoofOffset};
use crate::planners::{
    kinematic_baseline, predict_all, FeatureSpec, KinematicMode, LinearPlanner, PlannerError,
    PlannerKind, Prediction,
};
use crate::prompt::{prompt_pair, PromptError};
use crate::simworld::{
    instantiate_scenario, list_categories, simulate_episode, ScenarioCategory, SimError,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("missing input {}", .0.display())]
    MissingInput(PathBuf),
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("quota shortfall: {}", .0.iter().map(|s| s.to_string()).collect::<Vec<_>>().join("; "))]
    Shortfall(Vec<Shortfall>),
    #[error("{0}")]
    Other(String),
}

impl PipelineError {
    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::MissingInput(_) => 2,
            PipelineError::Schema(_) => 3,
            PipelineError::Shortfall(_) => 4,
            PipelineError::Other(_) => 1,
        }
    }
}

impl From<CurationError> for PipelineError {
    fn from(e: CurationError) -> Self {
        match e {
            CurationError::Parse { .. } | CurationError::Validation { .. } => {
                PipelineError::Schema(e.to_string())
            }
            other => PipelineError::Other(other.to_string()),
        }
    }
}

macro_rules! other_from {
    ($($t:ty),*) => {$(
        impl From<$t> for PipelineError {
            fn from(e: $t) -> Self {
                PipelineError::Other(e.to_string())
            }
        }
    )*};
}
other_from!(SimError, EvalError, PlannerError, PromptError, std::io::Error);

pub type Result<T> = std::result::Result<T, PipelineError>;

/// How one data domain is recorded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    pub city: String,
    pub convention: FrameConvention,
    pub roof_offset: RoofOffset,
    pub rig: CameraRig,
    pub jitter: Option<RigJitter>,
    pub noise: Option<NoiseModel>,
}

impl DomainConfig {
    pub fn sim() -> Self {
        let o = RecordOptions::sim("", "Town13", 0);
        DomainConfig {
            city: o.city,
            convention: o.convention,
            roof_offset: o.roof_offset,
            rig: o.rig,
            jitter: o.jitter,
            noise: o.noise,
        }
    }

    pub fn real() -> Self {
        let o = RecordOptions::real("", "Boston", 0);
        DomainConfig {
            city: o.city,
            convention: o.convention,
            roof_offset: o.roof_offset,
            rig: o.rig,
            jitter: o.jitter,
            noise: o.noise,
        }
    }

    fn options(&self, provenance: Provenance, id: String, seed: u64) -> RecordOptions {
        RecordOptions {
            id,
            provenance,
            city: self.city.clone(),
            convention: self.convention,
            roof_offset: self.roof_offset,
            rig: self.rig,
            jitter: self.jitter,
            noise: self.noise,
            seed,
        }
    }
}

/// Episodes per scenario family. `long_tail` is per long-tail category.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyCounts {
    pub e2d_common: usize,
    pub h2d_environmental: usize,
    pub long_tail: usize,
}

impl FamilyCounts {
    fn count(&self, c: ScenarioCategory) -> usize {
        match c {
            ScenarioCategory::E2dCommon => self.e2d_common,
            ScenarioCategory::H2dEnvironmental => self.h2d_environmental,
            _ => self.long_tail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerConfig {
    pub kind: PlannerKind,
    pub lambda: f64,
    pub features: FeatureSpec,
    /// Share of curated records used to fit the linear planner; the rest
    /// is evaluated.
    pub train_fraction: f64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            kind: PlannerKind::Linear,
            lambda: 1e-6,
            features: FeatureSpec::default(),
            train_fraction: 0.7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Sim2RealConfig {
    /// Pseudo-real episodes generated before curation.
    pub real_counts: FamilyCounts,
    pub real_train: usize,
    pub real_test: usize,
    /// Long-tail counts are usually zero here: the planner does not see
    /// other agents, so hazard reactions look like noise to it.
    pub sim_counts: FamilyCounts,
    /// Upper bound on sim records added to training.
    pub sim_train: usize,
    /// History noise applied to sim records before mixing. `None` keeps
    /// sim histories exact.
    pub sim_noise: Option<NoiseModel>,
}

impl Default for Sim2RealConfig {
    fn default() -> Self {
        Sim2RealConfig {
            real_counts: FamilyCounts {
                e2d_common: 1000,
                h2d_environmental: 1000,
                long_tail: 0,
            },
            real_train: 300,
            real_test: 400,
            sim_counts: FamilyCounts {
                e2d_common: 300,
                h2d_environmental: 900,
                long_tail: 0,
            },
            sim_train: 800,
            sim_noise: Some(NoiseModel::default()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Domain produced by `generate`.
    pub domain: Provenance,
    pub counts: FamilyCounts,
    pub horizon_s: f64,
    pub dt: f64,
    /// Quota preset used by `curate`.
    pub quota: String,
    /// Curated size; the largest shortfall-free size when absent.
    pub curate_size: Option<usize>,
    pub sim: DomainConfig,
    pub real: DomainConfig,
    pub planner: PlannerConfig,
    pub eval: EvalSettings,
    /// SVG overlays written by `report`.
    pub overlays: usize,
    /// Mix sim data without frame alignment (ablation).
    pub no_align: bool,
    pub sim2real: Sim2RealConfig,
    pub out_dir: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seed: 0,
            domain: Provenance::Sim,
            counts: FamilyCounts {
                e2d_common: 200,
                h2d_environmental: 400,
                long_tail: 10,
            },
            horizon_s: 5.5,
            dt: 0.5,
            quota: "HASS".into(),
            curate_size: None,
            sim: DomainConfig::sim(),
            real: DomainConfig::real(),
            planner: PlannerConfig::default(),
            eval: EvalSettings::default(),
            overlays: 3,
            no_align: false,
            sim2real: Sim2RealConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| PipelineError::Schema(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read_input(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        StratumQuota::preset(&self.quota).map_err(|e| PipelineError::Schema(e.to_string()))?;
        let p = &self.planner;
        if !(p.lambda > 0.0 && p.lambda.is_finite()) {
            return Err(PipelineError::Schema(format!("planner.lambda must be positive, got {}", p.lambda)));
        }
        if !(p.train_fraction > 0.0 && p.train_fraction < 1.0) {
            return Err(PipelineError::Schema("planner.train_fraction must be in (0, 1)".into()));
        }
        if p.features.i2e && (p.features.i2e_hidden == 0 || p.features.i2e_embed == 0) {
            return Err(PipelineError::Schema("planner.features: encoder dims must be positive".into()));
        }
        let e = &self.eval;
        if !(e.ego_length > 0.0 && e.ego_width > 0.0) {
            return Err(PipelineError::Schema("eval: ego dimensions must be positive".into()));
        }
        if !(0.1..=1.0).contains(&e.grid_resolution) {
            return Err(PipelineError::Schema("eval.grid_resolution must be in [0.1, 1.0]".into()));
        }
        Ok(())
    }

    fn domain_config(&self, p: Provenance) -> &DomainConfig {
        match p {
            Provenance::Sim => &self.sim,
            Provenance::Real => &self.real,
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingInput(path.to_path_buf()),
        _ => PipelineError::Other(format!("{}: {e}", path.display())),
    })
}

fn require(path: &Path) -> Result<&Path> {
    if path.exists() {
        Ok(path)
    } else {
        Err(PipelineError::MissingInput(path.to_path_buf()))
    }
}

/// SplitMix64 finalizer used to derive independent seeds.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of episode `index` of `category` in `domain`.
pub fn episode_seed(base: u64, domain: Provenance, category: ScenarioCategory, index: usize) -> u64 {
    let tag = match domain {
        Provenance::Sim => 0x51u64,
        Provenance::Real => 0x7e,
    };
    let cat = list_categories().iter().position(|c| *c == category).unwrap_or(0) as u64;
    mix(mix(mix(base ^ tag) ^ cat) ^ index as u64)
}

/// Records and contexts of one generated domain.
#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub records: Vec<EpisodeRecord>,
    pub contexts: Vec<SceneContext>,
    /// Episodes discarded because the teacher collided or left its route.
    pub dropped: usize,
}

impl Dataset {
    fn push(&mut self, r: EpisodeRecord, c: SceneContext) {
        self.records.push(r);
        self.contexts.push(c);
    }

    fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            records: idx.iter().map(|&i| self.records[i].clone()).collect(),
            contexts: idx.iter().map(|&i| self.contexts[i].clone()).collect(),
            dropped: 0,
        }
    }
}

/// Simulates every requested episode and cuts records from the usable ones.
pub fn generate_dataset(
    domain: &DomainConfig,
    provenance: Provenance,
    counts: &FamilyCounts,
    seed: u64,
    horizon_s: f64,
    dt: f64,
) -> Result<Dataset> {
    let mut out = Dataset::default();
    for cat in list_categories() {
        for i in 0..counts.count(cat) {
            let s = episode_seed(seed, provenance, cat, i);
            let ep = simulate_episode(&instantiate_scenario(cat, s), horizon_s, dt)?;
            if !ep.is_valid() || ep.diagnostics.collision.is_some() {
                out.dropped += 1;
                continue;
            }
            let id = format!("{}-{}-{i:05}", provenance.as_str(), cat);
            let (r, c) = record_from_episode(&ep, &domain.options(provenance, id, s))?;
            out.push(r, c);
        }
    }
    Ok(out)
}

/// Brings records and contexts into the planner frame, or only relabels
/// them when `naive` is set.
pub fn to_planner_frame(data: &Dataset, naive: bool, off: RoofOffset) -> Result<Dataset> {
    let rh = FrameConvention::RH_FLU_ROOF;
    let mut out = Dataset::default();
    for (r, c) in data.records.iter().zip(&data.contexts) {
        if naive {
            let mut c = c.clone();
            c.frame_convention = rh;
            out.push(naive_relabel(r, rh), c);
        } else {
            out.push(align_record(r, rh, off)?, align_scene_context(c, rh, off)?);
        }
    }
    Ok(out)
}

/// File names inside the output directory.
pub struct Layout {
    pub dir: PathBuf,
}

impl Layout {
    pub fn new(dir: &Path) -> Self {
        Layout { dir: dir.to_path_buf() }
    }
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
    pub fn dataset(&self) -> PathBuf {
        self.path("dataset.jsonl")
    }
    pub fn dataset_contexts(&self) -> PathBuf {
        self.path("dataset.contexts.jsonl")
    }
    pub fn curated(&self) -> PathBuf {
        self.path("curated.jsonl")
    }
    pub fn curated_contexts(&self) -> PathBuf {
        self.path("curated.contexts.jsonl")
    }
    pub fn prompts(&self) -> PathBuf {
        self.path("prompts.jsonl")
    }
    pub fn predictions(&self) -> PathBuf {
        self.path("predictions.jsonl")
    }
    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.json")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Generate,
    Curate,
    RenderPrompts,
    Evaluate,
    Report,
}

/// Runs one stage and returns the files it wrote.
pub fn run_pipeline(cfg: &ExperimentConfig, stage: Stage) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out_dir)?;
    let l = Layout::new(&cfg.out_dir);
    match stage {
        Stage::Generate => stage_generate(cfg, &l),
        Stage::Curate => stage_curate(cfg, &l),
        Stage::RenderPrompts => stage_prompts(&l),
        Stage::Evaluate => stage_evaluate(cfg, &l),
        Stage::Report => stage_report(cfg, &l),
    }
}

fn write_dataset(data: &Dataset, records: &Path, contexts: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    write_jsonl(records, &data.records)?;
    write_contexts(contexts, &data.contexts)?;
    let manifest = DatasetManifest::sibling_path(records);
    DatasetManifest::from_records(&data.records, vec![seed]).write(&manifest)?;
    Ok(vec![records.to_path_buf(), contexts.to_path_buf(), manifest])
}

fn read_dataset(records: &Path, contexts: &Path) -> Result<Dataset> {
    let r = read_jsonl(require(records)?)?;
    let c = read_contexts(require(contexts)?)?;
    if r.len() != c.len() || r.iter().zip(&c).any(|(a, b)| a.id != b.id) {
        return Err(PipelineError::Schema(format!(
            "{} does not pair with {}",
            contexts.display(),
            records.display()
        )));
    }
    Ok(Dataset { records: r, contexts: c, dropped: 0 })
}

fn stage_generate(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let data = generate_dataset(
        cfg.domain_config(cfg.domain),
        cfg.domain,
        &cfg.counts,
        cfg.seed,
        cfg.horizon_s,
        cfg.dt,
    )?;
    write_dataset(&data, &l.dataset(), &l.dataset_contexts(), cfg.seed)
}

fn stage_curate(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let data = read_dataset(&l.dataset(), &l.dataset_contexts())?;
    let quota = StratumQuota::preset(&cfg.quota)?;
    let n = cfg
        .curate_size
        .unwrap_or_else(|| max_feasible_size(&data.records, &quota));
    let sample = stratified_sample(&data.records, &quota, n, cfg.seed)?;
    if !sample.is_complete() {
        return Err(PipelineError::Shortfall(sample.shortfall));
    }
    let curated = data.subset(&sample.indices);
    let mut out = write_dataset(&curated, &l.curated(), &l.curated_contexts(), cfg.seed)?;
    let balance = l.path("balance.txt");
    fs::write(&balance, balance_report(&curated.records).to_string())?;
    out.push(balance);
    Ok(out)
}

fn stage_prompts(l: &Layout) -> Result<Vec<PathBuf>> {
    let records = read_jsonl(require(&l.curated())?)?;
    let mut text = String::new();
    for r in &records {
        text.push_str(&serde_json::to_string(&prompt_pair(r)?).expect("prompt serializes"));
        text.push('\n');
    }
    fs::write(l.prompts(), text)?;
    Ok(vec![l.prompts()])
}

/// Deterministic train/test split of `n` items.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(mix(seed ^ 0x5917)));
    let k = ((n as f64) * train_fraction).round() as usize;
    let (mut a, mut b) = (idx[..k].to_vec(), idx[k..].to_vec());
    a.sort_unstable();
    b.sort_unstable();
    (a, b)
}

fn stage_evaluate(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let data = read_dataset(&l.curated(), &l.curated_contexts())?;
    let data = to_planner_frame(&data, cfg.no_align, cfg.sim.roof_offset)?;
    let (train_idx, test_idx) = split_indices(data.records.len(), cfg.planner.train_fraction, cfg.seed);
    let test = data.subset(&test_idx);
    if test.records.is_empty() {
        return Err(PipelineError::Other("no records left for evaluation".into()));
    }
    let mut out = Vec::new();
    let linear = if cfg.planner.kind == PlannerKind::Linear {
        let train = data.subset(&train_idx);
        let p = LinearPlanner::fit(&train.records, cfg.planner.lambda, cfg.planner.features)?;
        let path = l.path("planner.json");
        p.save(&path)?;
        out.push(path);
        Some(p)
    } else {
        None
    };
    let preds = predict_all(cfg.planner.kind, &test.records, linear.as_ref())?;
    let mut text = String::new();
    for p in &preds {
        text.push_str(&serde_json::to_string(p).expect("prediction serializes"));
        text.push('\n');
    }
    fs::write(l.predictions(), text)?;
    out.push(l.predictions());

    let mut reports = vec![evaluate(cfg.planner.kind.as_str(), &preds, &test.records, &test.contexts, &cfg.eval)?];
    if cfg.planner.kind != PlannerKind::Cv {
        let base = predict_all(PlannerKind::Cv, &test.records, None)?;
        reports.push(evaluate("cv", &base, &test.records, &test.contexts, &cfg.eval)?);
    }
    fs::write(l.metrics(), serde_json::to_string_pretty(&reports).expect("metrics serialize") + "\n")?;
    out.push(l.metrics());
    let txt = l.path("metrics.txt");
    fs::write(&txt, format_report(&reports.iter().collect::<Vec<_>>()))?;
    out.push(txt);
    Ok(out)
}

fn stage_report(cfg: &ExperimentConfig, l: &Layout) -> Result<Vec<PathBuf>> {
    let reports: Vec<MetricsReport> = serde_json::from_str(&read_input(&l.metrics())?)
        .map_err(|e| PipelineError::Schema(format!("metrics.json: {e}")))?;
    let mut preds = Vec::new();
    for (i, line) in read_input(&l.predictions())?.lines().enumerate() {
        let p: Prediction = serde_json::from_str(line)
            .map_err(|e| PipelineError::Schema(format!("predictions line {}: {e}", i + 1)))?;
        preds.push(p);
    }
    let data = read_dataset(&l.curated(), &l.curated_contexts())?;
    let data = to_planner_frame(&data, cfg.no_align, cfg.sim.roof_offset)?;

    let mut out = Vec::new();
    let path = l.path("report.txt");
    fs::write(&path, format_report(&reports.iter().collect::<Vec<_>>()))?;
    out.push(path);

    let dir = l.path("overlays");
    fs::create_dir_all(&dir)?;
    for p in preds.iter().take(cfg.overlays) {
        let Some(i) = data.records.iter().position(|r| r.id == p.id) else {
            return Err(PipelineError::Schema(format!("prediction {} has no record", p.id)));
        };
        let r = &data.records[i];
        let base = kinematic_baseline(r, KinematicMode::ConstantVelocity);
        let svg = svg_overlay(r, &data.contexts[i], &base, &p.trajectory);
        let f = dir.join(format!("{}.svg", p.id));
        fs::write(&f, svg)?;
        out.push(f);
    }
    Ok(out)
}

/// E2D/H2D results of one training condition on the held-out records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResult {
    pub name: String,
    pub train_records: usize,
    pub sim_records: usize,
    pub e2d: SliceMetrics,
    pub h2d: SliceMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sim2RealReport {
    pub real_train: usize,
    pub real_test: usize,
    pub aligned: bool,
    pub real_only: ConditionResult,
    pub with_sim: ConditionResult,
    /// Unaligned mixing, reported next to an aligned run.
    pub ablation: Option<ConditionResult>,
}

fn rel_change(new: f64, old: f64) -> f64 {
    if old == 0.0 {
        0.0
    } else {
        100.0 * (new - old) / old
    }
}

fn with_delta(new: f64, old: f64) -> String {
    let d = rel_change(new, old);
    let arrow = if d < 0.0 { '↓' } else { '↑' };
    format!("{new:.2} ({arrow}{:.1}%)", d.abs())
}

impl Sim2RealReport {
    /// Relative H2D L2 change (percent, negative is better) of `c` versus
    /// the real-only condition.
    pub fn h2d_change(&self, c: &ConditionResult) -> f64 {
        rel_change(c.h2d.l2.avg, self.real_only.h2d.l2.avg)
    }

    pub fn e2d_change(&self, c: &ConditionResult) -> f64 {
        rel_change(c.e2d.l2.avg, self.real_only.e2d.l2.avg)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "held-out pseudo-real records: {} (train {})",
            self.real_test, self.real_train
        );
        let _ = writeln!(
            s,
            "{:<24} {:>6} {:>18} {:>18} {:>18} {:>18}",
            "condition", "train", "E2D L2 avg", "H2D L2 avg", "E2D coll avg", "H2D coll avg"
        );
        let base = &self.real_only;
        let mut rows = vec![&self.real_only, &self.with_sim];
        rows.extend(self.ablation.as_ref());
        for c in rows {
            let cells = if std::ptr::eq(c, base) {
                [
                    format!("{:.2}", c.e2d.l2.avg),
                    format!("{:.2}", c.h2d.l2.avg),
                    format!("{:.2}", c.e2d.collision_pct.avg),
                    format!("{:.2}", c.h2d.collision_pct.avg),
                ]
            } else {
                [
                    with_delta(c.e2d.l2.avg, base.e2d.l2.avg),
                    with_delta(c.h2d.l2.avg, base.h2d.l2.avg),
                    with_delta(c.e2d.collision_pct.avg, base.e2d.collision_pct.avg),
                    with_delta(c.h2d.collision_pct.avg, base.h2d.collision_pct.avg),
                ]
            };
            let _ = writeln!(
                s,
                "{:<24} {:>6} {:>18} {:>18} {:>18} {:>18}",
                c.name, c.train_records, cells[0], cells[1], cells[2], cells[3]
            );
        }
        s
    }
}

/// Fewest held-out records per difficulty slice.
pub const MIN_SLICE_RECORDS: usize = 10;

fn condition(
    name: &str,
    real: &Dataset,
    sim: Option<&Dataset>,
    test: &Dataset,
    cfg: &ExperimentConfig,
) -> Result<ConditionResult> {
    let mut train = real.records.clone();
    if let Some(s) = sim {
        train.extend(s.records.iter().cloned());
    }
    let planner = LinearPlanner::fit(&train, cfg.planner.lambda, cfg.planner.features)?;
    let preds = predict_all(PlannerKind::Linear, &test.records, Some(&planner))?;
    let report = evaluate(name, &preds, &test.records, &test.contexts, &cfg.eval)?;
    let slice = |k: &str| report.slice(k).cloned().expect("slice present");
    Ok(ConditionResult {
        name: name.to_string(),
        train_records: train.len(),
        sim_records: sim.map_or(0, |s| s.records.len()),
        e2d: slice("E2D"),
        h2d: slice("H2D"),
    })
}

/// Fits the linear planner on pseudo-real data alone and with sim hard
/// cases added, then scores both on held-out pseudo-real records. With
/// alignment on, the unaligned mix is scored as well.
pub fn run_sim2real_experiment(cfg: &ExperimentConfig) -> Result<Sim2RealReport> {
    cfg.validate()?;
    let s2r = &cfg.sim2real;
    let real_pool = generate_dataset(&cfg.real, Provenance::Real, &s2r.real_counts, cfg.seed, cfg.horizon_s, cfg.dt)?;
    let real_quota = StratumQuota::preset("nuScenes-like")?;
    let want = s2r.real_train + s2r.real_test;
    if want > real_pool.records.len() {
        return Err(PipelineError::Other(format!(
            "pseudo-real pool has {} records, {want} requested",
            real_pool.records.len()
        )));
    }
    let sample = stratified_sample(&real_pool.records, &real_quota, want, cfg.seed)?;
    if !sample.is_complete() {
        return Err(PipelineError::Shortfall(sample.shortfall));
    }
    let real = to_planner_frame(&real_pool.subset(&sample.indices), false, cfg.real.roof_offset)?;
    let (train_idx, test_idx) = split_indices(real.records.len(), s2r.real_train as f64 / want as f64, cfg.seed);
    let real_train = real.subset(&train_idx);
    let test = real.subset(&test_idx);
    for slice in ["E2D", "H2D"] {
        let n = test
            .records
            .iter()
            .filter(|r| crate::eval::slice_labels(*r).contains(&slice))
            .count();
        if n < MIN_SLICE_RECORDS {
            return Err(PipelineError::Other(format!(
                "only {n} held-out {slice} records, need {MIN_SLICE_RECORDS}"
            )));
        }
    }

    let sim_domain = DomainConfig {
        noise: s2r.sim_noise,
        ..cfg.sim.clone()
    };
    let sim_pool = generate_dataset(&sim_domain, Provenance::Sim, &s2r.sim_counts, cfg.seed, cfg.horizon_s, cfg.dt)?;
    let hass = StratumQuota::preset("HASS")?;
    let n_sim = s2r.sim_train.min(max_feasible_size(&sim_pool.records, &hass));
    let sim_sample = stratified_sample(&sim_pool.records, &hass, n_sim, cfg.seed)?;
    let sim = sim_pool.subset(&sim_sample.indices);

    let real_only = condition("real only", &real_train, None, &test, cfg)?;
    let naive = to_planner_frame(&sim, true, cfg.sim.roof_offset)?;
    let (with_sim, ablation) = if cfg.no_align {
        (condition("real + sim (unaligned)", &real_train, Some(&naive), &test, cfg)?, None)
    } else {
        let aligned = to_planner_frame(&sim, false, cfg.sim.roof_offset)?;
        (
            condition("real + sim (aligned)", &real_train, Some(&aligned), &test, cfg)?,
            Some(condition("real + sim (unaligned)", &real_train, Some(&naive), &test, cfg)?),
        )
    };
    Ok(Sim2RealReport {
        real_train: real_train.records.len(),
        real_test: test.records.len(),
        aligned: !cfg.no_align,
        real_only,
        with_sim,
        ablation,
    })
}

/// Runs the experiment and writes `sim2real.json` and `sim2real.txt`.
pub fn write_sim2real(cfg: &ExperimentConfig) -> Result<(Sim2RealReport, Vec<PathBuf>)> {
    let report = run_sim2real_experiment(cfg)?;
    fs::create_dir_all(&cfg.out_dir)?;
    let l = Layout::new(&cfg.out_dir);
    let json = l.path("sim2real.json");
    fs::write(&json, serde_json::to_string_pretty(&report).expect("report serializes") + "\n")?;
    let txt = l.path("sim2real.txt");
    fs::write(&txt, report.to_text())?;
    Ok((report, vec![json, txt]))
}
