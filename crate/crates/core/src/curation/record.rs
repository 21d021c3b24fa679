//! The dataset record, its scene-context sidecar and frame alignment.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::rig::{CameraRig, RigJitter};
use super::CurationError;
use crate::geometry::{
    convert_extrinsic, convert_pose, convert_xy, CameraCalibration, CameraView, FrameConvention,
    Pose, RoofOffset,
};
use crate::simworld::{
    classify_episode, future_yaw_change, AgentState, Difficulty, EgoState, EnvCondition, Episode,
    Maneuver, Polyline, ScenarioCategory, CURRENT_FRAME, FUTURE_FRAMES, HISTORY_FRAMES,
    TURN_THRESHOLD_DEG,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Sim,
    Real,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::Sim => "sim",
            Provenance::Real => "real",
        }
    }
}

/// Navigation command. Serialized as the prompt phrase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Command {
    MoveForward,
    TurnLeft,
    TurnRight,
}

impl Command {
    pub const ALL: [Command; 3] = [Command::MoveForward, Command::TurnLeft, Command::TurnRight];

    pub fn text(&self) -> &'static str {
        match self {
            Command::MoveForward => "move forward",
            Command::TurnLeft => "make a left turn at the upcoming intersection",
            Command::TurnRight => "make a right turn at the upcoming intersection",
        }
    }

    pub fn index(&self) -> usize {
        match self {
            Command::MoveForward => 0,
            Command::TurnLeft => 1,
            Command::TurnRight => 2,
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.text())
    }
}

impl TryFrom<String> for Command {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        Command::ALL
            .into_iter()
            .find(|c| c.text() == s)
            .ok_or_else(|| format!("unknown command {s:?}"))
    }
}

impl From<Command> for String {
    fn from(c: Command) -> String {
        c.text().to_string()
    }
}

/// Command from the physical (right-handed) future yaw change.
pub fn command_for_yaw_change(dyaw: f64) -> Command {
    let deg = dyaw.to_degrees();
    if deg > TURN_THRESHOLD_DEG {
        Command::TurnLeft
    } else if deg < -TURN_THRESHOLD_DEG {
        Command::TurnRight
    } else {
        Command::MoveForward
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryFrame {
    /// Seconds relative to the current frame (0 for the last entry).
    pub t: f64,
    pub ego: EgoState,
    pub agents: Vec<AgentState>,
}

/// One training/evaluation sample. Every pose is in the current-ego frame of
/// `frame_convention`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub id: String,
    pub provenance: Provenance,
    pub city: String,
    pub env: EnvCondition,
    pub maneuver: Maneuver,
    pub scenario: ScenarioCategory,
    pub frame_convention: FrameConvention,
    pub cameras: Vec<CameraCalibration>,
    pub history: Vec<HistoryFrame>,
    pub command: Command,
    pub gt_waypoints: Vec<[f64; 2]>,
    pub gt_speeds: Vec<f64>,
}

fn finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

impl EpisodeRecord {
    pub fn difficulty(&self) -> Difficulty {
        if self.env.is_hard() || self.maneuver == Maneuver::Turn {
            Difficulty::H2D
        } else {
            Difficulty::E2D
        }
    }

    /// Last history frame.
    pub fn current(&self) -> &HistoryFrame {
        self.history.last().expect("validated record has history")
    }

    pub fn validate(&self) -> Result<(), CurationError> {
        if self.id.is_empty() {
            return Err(CurationError::field("id", "must not be empty"));
        }
        if self.history.len() != HISTORY_FRAMES {
            return Err(CurationError::field(
                "history",
                format!("expected {HISTORY_FRAMES}, found {}", self.history.len()),
            ));
        }
        if self.cameras.len() != CameraView::ALL.len() {
            return Err(CurationError::field(
                "cameras",
                format!("expected 6, found {}", self.cameras.len()),
            ));
        }
        for (c, view) in self.cameras.iter().zip(CameraView::ALL) {
            if c.name != view {
                return Err(CurationError::field(
                    "cameras",
                    format!("expected {view:?} in slot {}, found {:?}", view as usize, c.name),
                ));
            }
            c.validate()
                .map_err(|e| CurationError::field("cameras", e.to_string()))?;
        }
        if self.gt_waypoints.len() != FUTURE_FRAMES {
            return Err(CurationError::field(
                "gt_waypoints",
                format!("expected 6, found {}", self.gt_waypoints.len()),
            ));
        }
        if self.gt_speeds.len() != FUTURE_FRAMES {
            return Err(CurationError::field(
                "gt_speeds",
                format!("expected 6, found {}", self.gt_speeds.len()),
            ));
        }
        if !self.gt_waypoints.iter().all(|p| finite(p)) {
            return Err(CurationError::field("gt_waypoints", "non-finite coordinate"));
        }
        if !finite(&self.gt_speeds) {
            return Err(CurationError::field("gt_speeds", "non-finite value"));
        }
        for h in &self.history {
            let mut vals = vec![h.t, h.ego.v];
            vals.extend([h.ego.pose.x, h.ego.pose.y, h.ego.pose.z, h.ego.pose.yaw]);
            for a in &h.agents {
                vals.extend([a.pose.x, a.pose.y, a.pose.z, a.pose.yaw, a.v, a.length, a.width]);
            }
            if !finite(&vals) {
                return Err(CurationError::field("history", "non-finite value"));
            }
        }
        Ok(())
    }
}

/// Everything evaluation needs beyond the record: agent futures at the six
/// waypoint times and the lane geometry, in the record's frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SceneContext {
    pub id: String,
    pub frame_convention: FrameConvention,
    pub agent_futures: Vec<Vec<AgentState>>,
    pub lanes: Vec<Polyline>,
    pub lane_width: f64,
}

/// Ego-frame window `(x_min, x_max, y_min, y_max)` kept in records and
/// contexts.
pub const CONTEXT_WINDOW: (f64, f64, f64, f64) = (-20.0, 60.0, -40.0, 40.0);

fn in_window(p: [f64; 2], margin: f64) -> bool {
    let (x0, x1, y0, y1) = CONTEXT_WINDOW;
    p[0] >= x0 - margin && p[0] <= x1 + margin && p[1] >= y0 - margin && p[1] <= y1 + margin
}

/// Liang-Barsky clip of one segment against the context window.
fn clip_segment(a: [f64; 2], b: [f64; 2]) -> Option<([f64; 2], [f64; 2])> {
    let (x0, x1, y0, y1) = CONTEXT_WINDOW;
    let d = [b[0] - a[0], b[1] - a[1]];
    let mut t0: f64 = 0.0;
    let mut t1: f64 = 1.0;
    for (p, q) in [
        (-d[0], a[0] - x0),
        (d[0], x1 - a[0]),
        (-d[1], a[1] - y0),
        (d[1], y1 - a[1]),
    ] {
        if p == 0.0 {
            if q < 0.0 {
                return None;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
        }
    }
    (t0 < t1).then(|| {
        (
            [a[0] + t0 * d[0], a[1] + t0 * d[1]],
            [a[0] + t1 * d[0], a[1] + t1 * d[1]],
        )
    })
}

fn clip_polyline(points: &[[f64; 2]]) -> Vec<Polyline> {
    let mut out = Vec::new();
    let mut cur: Vec<[f64; 2]> = Vec::new();
    for w in points.windows(2) {
        match clip_segment(w[0], w[1]) {
            Some((a, b)) => {
                let joins = cur
                    .last()
                    .is_some_and(|l| (l[0] - a[0]).abs() < 1e-9 && (l[1] - a[1]).abs() < 1e-9);
                if !joins {
                    if let Ok(p) = Polyline::new(std::mem::take(&mut cur)) {
                        out.push(p);
                    }
                    cur.push(a);
                }
                cur.push(b);
            }
            None => {
                if let Ok(p) = Polyline::new(std::mem::take(&mut cur)) {
                    out.push(p);
                }
            }
        }
    }
    if let Ok(p) = Polyline::new(cur) {
        out.push(p);
    }
    out
}

/// Additive history noise (standard deviations).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub position: f64,
    pub yaw: f64,
    pub speed: f64,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel {
            position: 0.05,
            yaw: 0.005,
            speed: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordOptions {
    pub id: String,
    pub provenance: Provenance,
    pub city: String,
    pub convention: FrameConvention,
    pub roof_offset: RoofOffset,
    pub rig: CameraRig,
    pub jitter: Option<RigJitter>,
    pub noise: Option<NoiseModel>,
    /// Seeds calibration jitter and history noise.
    pub seed: u64,
}

impl RecordOptions {
    /// Simulator-side defaults: CARLA-like rig stored left-handed, no noise.
    pub fn sim(id: impl Into<String>, city: impl Into<String>, seed: u64) -> Self {
        RecordOptions {
            id: id.into(),
            provenance: Provenance::Sim,
            city: city.into(),
            convention: FrameConvention::LH_FRU_WHEEL,
            roof_offset: RoofOffset::default(),
            rig: CameraRig::CarlaLike,
            jitter: None,
            noise: None,
            seed,
        }
    }

    /// Pseudo-real defaults: survey rig with calibration jitter and state
    /// noise, stored right-handed.
    pub fn real(id: impl Into<String>, city: impl Into<String>, seed: u64) -> Self {
        RecordOptions {
            id: id.into(),
            provenance: Provenance::Real,
            city: city.into(),
            convention: FrameConvention::RH_FLU_ROOF,
            roof_offset: RoofOffset::default(),
            rig: CameraRig::NuScenesLike,
            jitter: Some(RigJitter::default()),
            noise: Some(NoiseModel::default()),
            seed,
        }
    }
}

fn relative_agents(agents: &[AgentState], origin: &Pose) -> Vec<AgentState> {
    agents
        .iter()
        .filter_map(|a| {
            let pose = a.pose.relative_to(origin);
            in_window(pose.xy(), 5.0).then(|| AgentState { pose, ..a.clone() })
        })
        .collect()
}

/// Cuts a record and its scene context out of a simulated episode.
pub fn record_from_episode(
    ep: &Episode,
    opts: &RecordOptions,
) -> Result<(EpisodeRecord, SceneContext), CurationError> {
    if !ep.is_valid() {
        return Err(CurationError::Episode(format!("{:?}", ep.status)));
    }
    if ep.frames.len() < CURRENT_FRAME + FUTURE_FRAMES + 1 {
        return Err(CurationError::Episode(format!("only {} frames", ep.frames.len())));
    }
    let ep_rh;
    let ep = if ep.convention == FrameConvention::RH_FLU_ROOF {
        ep
    } else {
        ep_rh = ep.converted(FrameConvention::RH_FLU_ROOF)?;
        &ep_rh
    };
    let labels = classify_episode(ep);
    let now = &ep.frames[CURRENT_FRAME];
    let origin = now.ego.pose;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let cameras = opts.rig.calibrations(opts.jitter.as_ref(), &mut rng);

    let std = Normal::new(0.0, 1.0).expect("unit normal");
    let mut history = Vec::with_capacity(HISTORY_FRAMES);
    for (k, f) in ep.frames[..=CURRENT_FRAME].iter().enumerate() {
        let mut ego = EgoState {
            pose: f.ego.pose.relative_to(&origin),
            v: f.ego.v,
        };
        if let Some(n) = &opts.noise {
            if k < CURRENT_FRAME {
                ego.pose.x += n.position * std.sample(&mut rng);
                ego.pose.y += n.position * std.sample(&mut rng);
                ego.pose.yaw += n.yaw * std.sample(&mut rng);
            }
            ego.v = (ego.v + n.speed * std.sample(&mut rng)).max(0.0);
        }
        history.push(HistoryFrame {
            t: f.t - now.t,
            ego,
            agents: relative_agents(&f.agents, &origin),
        });
    }

    let future = &ep.frames[CURRENT_FRAME + 1..=CURRENT_FRAME + FUTURE_FRAMES];
    let gt_waypoints = future.iter().map(|f| f.ego.pose.relative_to(&origin).xy()).collect();
    let gt_speeds = future.iter().map(|f| f.ego.v).collect();

    let record = EpisodeRecord {
        id: opts.id.clone(),
        provenance: opts.provenance,
        city: opts.city.clone(),
        env: ep.spec.env,
        maneuver: labels.maneuver,
        scenario: ep.spec.category,
        frame_convention: FrameConvention::RH_FLU_ROOF,
        cameras,
        history,
        command: command_for_yaw_change(future_yaw_change(&ep.frames)),
        gt_waypoints,
        gt_speeds,
    };

    let to_ego = |p: [f64; 2]| Pose::planar(p[0], p[1], 0.0).relative_to(&origin).xy();
    let lanes = ep
        .spec
        .map
        .centerlines
        .iter()
        .flat_map(|l| {
            let pts: Vec<[f64; 2]> = l.points().iter().map(|&p| to_ego(p)).collect();
            clip_polyline(&pts)
        })
        .collect();
    let context = SceneContext {
        id: opts.id.clone(),
        frame_convention: FrameConvention::RH_FLU_ROOF,
        agent_futures: future.iter().map(|f| relative_agents(&f.agents, &origin)).collect(),
        lanes,
        lane_width: ep.spec.map.lane_width,
    };

    record.validate()?;
    if opts.convention == FrameConvention::RH_FLU_ROOF {
        Ok((record, context))
    } else {
        Ok((
            align_record(&record, opts.convention, opts.roof_offset)?,
            align_scene_context(&context, opts.convention, opts.roof_offset)?,
        ))
    }
}

fn convert_agent(a: &AgentState, from: FrameConvention, to: FrameConvention, off: RoofOffset) -> Result<AgentState, CurationError> {
    Ok(AgentState {
        pose: convert_pose(a.pose, from, to, off)?,
        ..a.clone()
    })
}

/// Re-expresses every pose, waypoint and camera extrinsic of `r` in `target`.
/// Returns an unchanged copy when `r` is already in `target`.
pub fn align_record(
    r: &EpisodeRecord,
    target: FrameConvention,
    off: RoofOffset,
) -> Result<EpisodeRecord, CurationError> {
    let from = r.frame_convention;
    if from == target {
        return Ok(r.clone());
    }
    // Re-validate the source label so records built by hand cannot smuggle
    // in a non-preset convention.
    FrameConvention::from_name(from.name())?;
    let mut out = r.clone();
    for h in &mut out.history {
        h.ego.pose = convert_pose(h.ego.pose, from, target, off)?;
        for a in &mut h.agents {
            *a = convert_agent(a, from, target, off)?;
        }
    }
    for w in &mut out.gt_waypoints {
        *w = convert_xy(*w, from, target);
    }
    for c in &mut out.cameras {
        c.t_cam_to_ego = convert_extrinsic(&c.t_cam_to_ego, from, target, off);
    }
    out.frame_convention = target;
    Ok(out)
}

pub fn align_scene_context(
    c: &SceneContext,
    target: FrameConvention,
    off: RoofOffset,
) -> Result<SceneContext, CurationError> {
    let from = c.frame_convention;
    if from == target {
        return Ok(c.clone());
    }
    let mut out = c.clone();
    for step in &mut out.agent_futures {
        for a in step.iter_mut() {
            *a = convert_agent(a, from, target, off)?;
        }
    }
    out.lanes = c
        .lanes
        .iter()
        .map(|l| l.mapped(|p| convert_xy(p, from, target)))
        .collect();
    out.frame_convention = target;
    Ok(out)
}

/// The no-alignment ablation: relabels the convention without touching any
/// coordinate, as a naive mix of differently-framed data would.
pub fn naive_relabel(r: &EpisodeRecord, target: FrameConvention) -> EpisodeRecord {
    EpisodeRecord {
        frame_convention: target,
        ..r.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::{instantiate_scenario, simulate_episode};

    const RH: FrameConvention = FrameConvention::RH_FLU_ROOF;
    const LH: FrameConvention = FrameConvention::LH_FRU_WHEEL;

    fn opts(conv: FrameConvention) -> RecordOptions {
        RecordOptions {
            id: "r0".into(),
            provenance: Provenance::Sim,
            city: "Town13".into(),
            convention: conv,
            roof_offset: RoofOffset::default(),
            rig: CameraRig::CarlaLike,
            jitter: None,
            noise: None,
            seed: 0,
        }
    }

    fn sample(cat: ScenarioCategory, seed: u64, conv: FrameConvention) -> (EpisodeRecord, SceneContext) {
        let spec = instantiate_scenario(cat, seed);
        let ep = simulate_episode(&spec, 5.5, 0.5).unwrap();
        record_from_episode(&ep, &opts(conv)).unwrap()
    }

    #[test]
    fn record_shape() {
        let (r, c) = sample(ScenarioCategory::E2dCommon, 1, RH);
        r.validate().unwrap();
        assert_eq!(r.history.len(), 5);
        assert_eq!(r.current().t, 0.0);
        assert_eq!(r.current().ego.pose.xy(), [0.0, 0.0]);
        assert_eq!(r.current().ego.pose.z, -1.5);
        assert_eq!(c.agent_futures.len(), 6);
        assert!(r.gt_waypoints[5][0] > 10.0);
        assert_eq!(r.command, Command::MoveForward);
    }

    #[test]
    fn alignment_examples() {
        let (r, _) = sample(ScenarioCategory::E2dCommon, 2, RH);
        assert_eq!(align_record(&r, RH, RoofOffset::default()).unwrap(), r);
        let mut lh = align_record(&r, LH, RoofOffset::default()).unwrap();
        lh.gt_waypoints[0] = [4.96, 0.12];
        let back = align_record(&lh, RH, RoofOffset::default()).unwrap();
        assert_eq!(back.gt_waypoints[0], [4.96, -0.12]);
        assert_eq!(back.frame_convention, RH);
    }

    #[test]
    fn lh_record_matches_aligned_rh_record() {
        let (rh, _) = sample(ScenarioCategory::H2dEnvironmental, 5, RH);
        let (lh, ctx) = sample(ScenarioCategory::H2dEnvironmental, 5, LH);
        assert_eq!(lh.frame_convention, LH);
        assert_eq!(ctx.frame_convention, LH);
        let back = align_record(&lh, RH, RoofOffset::default()).unwrap();
        for (a, b) in back.gt_waypoints.iter().zip(&rh.gt_waypoints) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
        assert_eq!(back.command, rh.command);
        for (a, b) in back.cameras.iter().zip(&rh.cameras) {
            assert!(a.t_cam_to_ego.max_abs_diff(&b.t_cam_to_ego) < 1e-12);
        }
    }

    #[test]
    fn naive_relabel_keeps_coordinates() {
        let (lh, _) = sample(ScenarioCategory::H2dEnvironmental, 5, LH);
        let n = naive_relabel(&lh, RH);
        assert_eq!(n.gt_waypoints, lh.gt_waypoints);
        assert_eq!(n.frame_convention, RH);
    }

    #[test]
    fn commands_follow_turn_direction() {
        assert_eq!(command_for_yaw_change(0.5), Command::TurnLeft);
        assert_eq!(command_for_yaw_change(-0.5), Command::TurnRight);
        assert_eq!(command_for_yaw_change(0.1), Command::MoveForward);
        let json = serde_json::to_string(&Command::TurnLeft).unwrap();
        assert_eq!(json, "\"make a left turn at the upcoming intersection\"");
    }

    #[test]
    fn clipping_keeps_inside_parts() {
        let parts = clip_polyline(&[[-100.0, 0.0], [100.0, 0.0]]);
        assert_eq!(parts.len(), 1);
        assert_eq!(parts[0].points(), &[[-20.0, 0.0], [60.0, 0.0]]);
        assert!(clip_polyline(&[[-100.0, 50.0], [100.0, 50.0]]).is_empty());
        let parts = clip_polyline(&[[0.0, 0.0], [10.0, 0.0], [10.0, 100.0], [20.0, 100.0], [20.0, 0.0]]);
        assert_eq!(parts.len(), 2);
    }
}
