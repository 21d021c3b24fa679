//! L2, collision and boundary metrics with per-timestep counters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::footprint::{obb_overlap, ObbFootprint};
use super::EvalError;
use crate::curation::{Dimension, EpisodeRecord, SceneContext, Stratify};
use crate::planners::{Prediction, Trajectory, WAYPOINTS};
use crate::simworld::{drivable_grid, DrivableGrid, RoadMap};

/// Waypoints covered by the 1 s, 2 s and 3 s horizons.
pub const HORIZON_POINTS: [usize; 3] = [2, 4, 6];
pub const HORIZON_NAMES: [&str; 3] = ["1s", "2s", "3s"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub ego_length: f64,
    pub ego_width: f64,
    pub grid_resolution: f64,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            ego_length: 4.0,
            ego_width: 1.8,
            grid_resolution: 0.25,
        }
    }
}

/// One value per horizon plus their mean.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HorizonValues {
    #[serde(rename = "1s")]
    pub h1: f64,
    #[serde(rename = "2s")]
    pub h2: f64,
    #[serde(rename = "3s")]
    pub h3: f64,
    pub avg: f64,
}

impl HorizonValues {
    pub fn from_horizons(h: [f64; 3]) -> Self {
        HorizonValues {
            h1: h[0],
            h2: h[1],
            h3: h[2],
            avg: (h[0] + h[1] + h[2]) / 3.0,
        }
    }

    /// Horizon values as prefix means of a per-timestep series.
    pub fn from_steps(steps: &[f64; WAYPOINTS]) -> Self {
        let h = HORIZON_POINTS.map(|k| steps[..k].iter().sum::<f64>() / k as f64);
        Self::from_horizons(h)
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.h1, self.h2, self.h3, self.avg]
    }
}

pub fn l2_metric(pred: &Trajectory, gt: &Trajectory) -> HorizonValues {
    let mut d = [0.0; WAYPOINTS];
    for (i, di) in d.iter_mut().enumerate() {
        let p = pred.waypoints[i];
        let g = gt.waypoints[i];
        *di = (p[0] - g[0]).hypot(p[1] - g[1]);
    }
    HorizonValues::from_steps(&d)
}

/// Per-timestep event counters. Merging is plain addition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepCounters {
    pub events: [usize; WAYPOINTS],
    pub total: [usize; WAYPOINTS],
}

impl StepCounters {
    /// Adds one trajectory whose first event (if any) is at `first`. Later
    /// timesteps count as events too.
    pub fn push(&mut self, first: Option<usize>) {
        for t in 0..WAYPOINTS {
            self.total[t] += 1;
            if first.is_some_and(|f| t >= f) {
                self.events[t] += 1;
            }
        }
    }

    pub fn merge(&mut self, other: &StepCounters) {
        for t in 0..WAYPOINTS {
            self.events[t] += other.events[t];
            self.total[t] += other.total[t];
        }
    }

    pub fn step_pct(&self) -> [f64; WAYPOINTS] {
        let mut out = [0.0; WAYPOINTS];
        for t in 0..WAYPOINTS {
            if self.total[t] > 0 {
                out[t] = 100.0 * self.events[t] as f64 / self.total[t] as f64;
            }
        }
        out
    }

    pub fn horizon_pct(&self) -> HorizonValues {
        HorizonValues::from_steps(&self.step_pct())
    }
}

fn ego_footprints(pred: &Trajectory, s: &EvalSettings) -> [ObbFootprint; WAYPOINTS] {
    let yaw = pred.headings();
    std::array::from_fn(|t| ObbFootprint::new(pred.waypoints[t], yaw[t], s.ego_length, s.ego_width))
}

/// First timestep at which the ego footprint overlaps an agent.
pub fn first_collision(pred: &Trajectory, ctx: &SceneContext, s: &EvalSettings) -> Option<usize> {
    let ego = ego_footprints(pred, s);
    (0..WAYPOINTS).find(|&t| {
        ctx.agent_futures.get(t).is_some_and(|agents| {
            agents.iter().any(|a| {
                let fp = ObbFootprint::new(a.pose.xy(), a.pose.yaw, a.length, a.width);
                obb_overlap(&ego[t], &fp)
            })
        })
    })
}

/// Drivable raster of a scene context's lanes.
pub fn context_grid(ctx: &SceneContext, resolution: f64) -> Result<DrivableGrid, EvalError> {
    let map = RoadMap {
        centerlines: ctx.lanes.clone(),
        lane_width: ctx.lane_width,
        intersections: vec![],
        signals: vec![],
    };
    Ok(drivable_grid(&map, resolution)?)
}

/// Result of rasterizing one footprint against a grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellCheck {
    Inside,
    OffRoad,
    OutsideGrid,
}

/// Every cell sharing positive area with `fp` must be drivable.
pub fn footprint_on_road(fp: &ObbFootprint, grid: &DrivableGrid) -> CellCheck {
    let corners = fp.corners();
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for c in corners {
        for k in 0..2 {
            lo[k] = lo[k].min(c[k]);
            hi[k] = hi[k].max(c[k]);
        }
    }
    let r = grid.resolution;
    let c0 = ((lo[0] - grid.origin[0]) / r).floor();
    let c1 = ((hi[0] - grid.origin[0]) / r).ceil();
    let r0 = ((lo[1] - grid.origin[1]) / r).floor();
    let r1 = ((hi[1] - grid.origin[1]) / r).ceil();
    if c0 < 0.0 || r0 < 0.0 || c1 > grid.cols as f64 || r1 > grid.rows as f64 {
        return CellCheck::OutsideGrid;
    }
    for row in r0 as usize..r1 as usize {
        for col in c0 as usize..c1 as usize {
            if grid.is_drivable_cell(col, row) {
                continue;
            }
            let cell = ObbFootprint::new(grid.cell_center(col, row), 0.0, r, r);
            if obb_overlap(fp, &cell) {
                return CellCheck::OffRoad;
            }
        }
    }
    CellCheck::Inside
}

/// First violating timestep and whether any footprint left the raster.
pub fn first_violation(
    pred: &Trajectory,
    grid: &DrivableGrid,
    s: &EvalSettings,
) -> (Option<usize>, bool) {
    let mut outside = false;
    for (t, fp) in ego_footprints(pred, s).iter().enumerate() {
        match footprint_on_road(fp, grid) {
            CellCheck::Inside => {}
            CellCheck::OffRoad => return (Some(t), outside),
            CellCheck::OutsideGrid => {
                outside = true;
                return (Some(t), outside);
            }
        }
    }
    (None, outside)
}

fn match_ids<'a, T>(
    preds: &'a [Prediction],
    items: &'a [T],
    id: impl Fn(&T) -> &str,
) -> Result<(), EvalError> {
    if preds.len() != items.len() {
        return Err(EvalError::Mismatch(format!(
            "{} predictions for {} records",
            preds.len(),
            items.len()
        )));
    }
    for (i, (p, it)) in preds.iter().zip(items).enumerate() {
        if p.id != id(it) {
            return Err(EvalError::Mismatch(format!(
                "position {i}: prediction {:?} vs record {:?}",
                p.id,
                id(it)
            )));
        }
    }
    Ok(())
}

/// Counters and percentages for one event type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventRate {
    pub counters: StepCounters,
    pub pct: HorizonValues,
}

impl EventRate {
    fn from_counters(counters: StepCounters) -> Self {
        EventRate {
            pct: counters.horizon_pct(),
            counters,
        }
    }
}

pub fn collision_rate(
    preds: &[Prediction],
    contexts: &[SceneContext],
    s: &EvalSettings,
) -> Result<EventRate, EvalError> {
    match_ids(preds, contexts, |c| &c.id)?;
    let mut c = StepCounters::default();
    for (p, ctx) in preds.iter().zip(contexts) {
        c.push(first_collision(&p.trajectory, ctx, s));
    }
    Ok(EventRate::from_counters(c))
}

/// Boundary violations. Grids pair with predictions by position.
pub fn boundary_rate(
    preds: &[Prediction],
    grids: &[DrivableGrid],
    s: &EvalSettings,
) -> Result<EventRate, EvalError> {
    if preds.len() != grids.len() {
        return Err(EvalError::Mismatch(format!(
            "{} predictions for {} grids",
            preds.len(),
            grids.len()
        )));
    }
    let mut c = StepCounters::default();
    for (p, g) in preds.iter().zip(grids) {
        c.push(first_violation(&p.trajectory, g, s).0);
    }
    Ok(EventRate::from_counters(c))
}

/// Per-record evaluation outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecordOutcome {
    pub id: String,
    pub labels: Vec<&'static str>,
    pub l2: HorizonValues,
    pub first_collision: Option<usize>,
    pub first_violation: Option<usize>,
    pub outside_grid: bool,
}

pub fn evaluate_record(
    pred: &Prediction,
    record: &EpisodeRecord,
    ctx: &SceneContext,
    s: &EvalSettings,
) -> Result<RecordOutcome, EvalError> {
    if pred.id != record.id || record.id != ctx.id {
        return Err(EvalError::Mismatch(format!(
            "prediction {:?}, record {:?}, context {:?}",
            pred.id, record.id, ctx.id
        )));
    }
    if record.frame_convention != ctx.frame_convention {
        return Err(EvalError::Mismatch(format!(
            "record {} is {} but its context is {}",
            record.id,
            record.frame_convention.name(),
            ctx.frame_convention.name()
        )));
    }
    let grid = context_grid(ctx, s.grid_resolution)?;
    let (first_violation, outside_grid) = first_violation(&pred.trajectory, &grid, s);
    Ok(RecordOutcome {
        id: record.id.clone(),
        labels: slice_labels(record),
        l2: l2_metric(&pred.trajectory, &Trajectory::ground_truth(record)),
        first_collision: first_collision(&pred.trajectory, ctx, s),
        first_violation,
        outside_grid,
    })
}

/// Slice keys a record belongs to, besides `all`.
pub fn slice_labels<T: Stratify>(r: &T) -> Vec<&'static str> {
    [
        Dimension::Time,
        Dimension::Weather,
        Dimension::Maneuver,
        Dimension::Difficulty,
    ]
    .iter()
    .map(|d| r.label(*d))
    .collect()
}

/// Slices reported, in display order.
pub const SLICES: [&str; 9] = [
    "all", "day", "night", "straight", "turn", "sunny", "rainy", "E2D", "H2D",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMetrics {
    pub n: usize,
    pub l2: HorizonValues,
    pub collision_pct: HorizonValues,
    pub boundary_pct: HorizonValues,
    pub collision: StepCounters,
    pub violation: StepCounters,
    /// Predictions that left the drivable raster (counted as violations).
    pub outside_grid: usize,
}

impl SliceMetrics {
    pub fn from_outcomes<'a>(outcomes: impl IntoIterator<Item = &'a RecordOutcome>) -> Self {
        let mut n = 0;
        let mut l2 = [0.0; 3];
        let mut collision = StepCounters::default();
        let mut violation = StepCounters::default();
        let mut outside_grid = 0;
        for o in outcomes {
            n += 1;
            l2[0] += o.l2.h1;
            l2[1] += o.l2.h2;
            l2[2] += o.l2.h3;
            collision.push(o.first_collision);
            violation.push(o.first_violation);
            outside_grid += o.outside_grid as usize;
        }
        let l2 = if n > 0 {
            HorizonValues::from_horizons(l2.map(|v| v / n as f64))
        } else {
            HorizonValues::default()
        };
        SliceMetrics {
            n,
            l2,
            collision_pct: collision.horizon_pct(),
            boundary_pct: violation.horizon_pct(),
            collision,
            violation,
            outside_grid,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub method: String,
    pub settings: EvalSettings,
    pub slices: BTreeMap<String, SliceMetrics>,
}

impl MetricsReport {
    pub fn from_outcomes(method: &str, settings: EvalSettings, outcomes: &[RecordOutcome]) -> Self {
        let slices = SLICES
            .iter()
            .map(|&key| {
                let m = SliceMetrics::from_outcomes(
                    outcomes.iter().filter(|o| key == "all" || o.labels.contains(&key)),
                );
                (key.to_string(), m)
            })
            .collect();
        MetricsReport {
            method: method.to_string(),
            settings,
            slices,
        }
    }

    pub fn slice(&self, key: &str) -> Option<&SliceMetrics> {
        self.slices.get(key)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Scores `preds` against records and their contexts, all matched by
/// position and id.
pub fn evaluate(
    method: &str,
    preds: &[Prediction],
    records: &[EpisodeRecord],
    contexts: &[SceneContext],
    s: &EvalSettings,
) -> Result<MetricsReport, EvalError> {
    match_ids(preds, records, |r| &r.id)?;
    match_ids(preds, contexts, |c| &c.id)?;
    let outcomes = preds
        .iter()
        .zip(records)
        .zip(contexts)
        .map(|((p, r), c)| evaluate_record(p, r, c, s))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_outcomes(method, *s, &outcomes))
}
