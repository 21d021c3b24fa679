//! Episode rollout and labelling.

use serde::{Deserialize, Serialize};

use super::road::{Approach, SignalState};
use super::scenario::{AgentScript, HazardKind, PhaseEnd, ScenarioCategory, ScenarioSpec, Trigger};
use super::teacher::{Teacher, WorldFrame};
use super::{step_ego, AgentState, EgoState, SimError, TimeOfDay, VehicleParams, Weather};
use crate::eval::{obb_overlap, ObbFootprint};
use crate::geometry::{convert_pose, normalize_angle, FrameConvention, Pose, RoofOffset};

pub const HISTORY_FRAMES: usize = 5;
pub const FUTURE_FRAMES: usize = 6;
/// Index of the "now" frame; frames after it are the future waypoints.
pub const CURRENT_FRAME: usize = HISTORY_FRAMES - 1;
pub const MIN_FRAMES: usize = HISTORY_FRAMES + FUTURE_FRAMES;
pub const TURN_THRESHOLD_DEG: f64 = 10.0;

/// Control substep used inside each frame interval.
const CONTROL_DT: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub t: f64,
    pub ego: EgoState,
    pub agents: Vec<AgentState>,
    pub signals: Vec<SignalState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum EpisodeStatus {
    Valid,
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionEvent {
    pub t: f64,
    pub agent_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeDiagnostics {
    /// First ego-agent footprint overlap, checked at every control substep.
    pub collision: Option<CollisionEvent>,
    pub hazard_time: Option<f64>,
    pub min_ego_speed: f64,
    /// Largest ego distance from its route over the rollout.
    pub max_route_offset: f64,
}

impl EpisodeDiagnostics {
    pub fn hazard_triggered(&self) -> bool {
        self.hazard_time.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub frames: Vec<Frame>,
    pub spec: ScenarioSpec,
    pub dt: f64,
    /// Convention of every pose in `frames`. The scenario spec always stays
    /// in the simulator's native frame.
    pub convention: FrameConvention,
    pub roof_offset: RoofOffset,
    pub status: EpisodeStatus,
    pub diagnostics: EpisodeDiagnostics,
}

impl Episode {
    pub fn is_valid(&self) -> bool {
        self.status == EpisodeStatus::Valid
    }

    /// Re-expresses all frame poses in `to`.
    pub fn converted(&self, to: FrameConvention) -> Result<Episode, SimError> {
        let conv = |p: &Pose| convert_pose(*p, self.convention, to, self.roof_offset);
        let mut out = self.clone();
        for f in &mut out.frames {
            f.ego.pose = conv(&f.ego.pose)?;
            for a in &mut f.agents {
                a.pose = conv(&a.pose)?;
            }
        }
        out.convention = to;
        Ok(out)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if self.frames.len() < MIN_FRAMES {
            return Err(SimError::InvalidSettings(format!(
                "episode has {} frames, need {MIN_FRAMES}",
                self.frames.len()
            )));
        }
        for (i, w) in self.frames.windows(2).enumerate() {
            let step = w[1].t - w[0].t;
            if (step - self.dt).abs() > 1e-9 {
                return Err(SimError::InvalidSettings(format!(
                    "frame {} spacing {step} differs from dt {}",
                    i + 1,
                    self.dt
                )));
            }
        }
        for f in &self.frames {
            f.ego.pose.validate()?;
            if !(f.ego.v >= 0.0) {
                return Err(SimError::InvalidSettings("negative ego speed".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Maneuver {
    Straight,
    Turn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Difficulty {
    E2D,
    H2D,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeLabels {
    pub time: TimeOfDay,
    pub weather: Weather,
    pub maneuver: Maneuver,
    pub difficulty: Difficulty,
    /// Long-tail category tag, kept alongside the difficulty label.
    pub category: Option<ScenarioCategory>,
}

/// Accumulated yaw change from the current frame to the last future frame.
pub fn future_yaw_change(frames: &[Frame]) -> f64 {
    let end = (CURRENT_FRAME + FUTURE_FRAMES).min(frames.len().saturating_sub(1));
    let mut total = 0.0;
    for k in CURRENT_FRAME..end {
        total += normalize_angle(frames[k + 1].ego.pose.yaw - frames[k].ego.pose.yaw);
    }
    total
}

pub fn classify_episode(e: &Episode) -> EpisodeLabels {
    let env = e.spec.env;
    let dyaw = future_yaw_change(&e.frames);
    let maneuver = if dyaw.abs().to_degrees() > TURN_THRESHOLD_DEG {
        Maneuver::Turn
    } else {
        Maneuver::Straight
    };
    let hard = env.is_hard() || maneuver == Maneuver::Turn;
    EpisodeLabels {
        time: env.time,
        weather: env.weather,
        maneuver,
        difficulty: if hard { Difficulty::H2D } else { Difficulty::E2D },
        category: e.spec.category.is_long_tail().then_some(e.spec.category),
    }
}

struct AgentRun {
    s: f64,
    v: f64,
    triggered: bool,
    phase: usize,
    phase_start: f64,
    initial_v: f64,
}

impl AgentRun {
    fn new(script: &AgentScript) -> Self {
        AgentRun {
            s: script.start_s,
            v: script.initial_speed,
            triggered: false,
            phase: 0,
            phase_start: 0.0,
            initial_v: script.initial_speed,
        }
    }

    fn state(&self, script: &AgentScript, z: f64) -> AgentState {
        let p = script.path.point_at(self.s);
        AgentState {
            id: script.id,
            kind: script.kind,
            pose: Pose {
                x: p[0],
                y: p[1],
                z,
                yaw: script.path.heading_at(self.s),
            },
            v: self.v,
            length: script.length,
            width: script.width,
        }
    }

    fn advance(&mut self, script: &AgentScript, t: f64, h: f64, ego_xy: [f64; 2]) {
        if !self.triggered {
            let fire = match script.trigger {
                Trigger::Immediate => true,
                Trigger::AtTime(t0) => t >= t0 - 1e-9,
                Trigger::EgoWithin(d) => {
                    let p = script.path.point_at(self.s);
                    (p[0] - ego_xy[0]).hypot(p[1] - ego_xy[1]) <= d
                }
            };
            if fire {
                self.triggered = true;
                self.phase_start = t;
            }
        }
        if self.triggered {
            if let Some(ph) = script.phases.get(self.phase) {
                let dv = (ph.target_speed - self.v).clamp(-ph.accel * h, ph.accel * h);
                self.v = (self.v + dv).max(0.0);
                self.s += self.v * h;
                let done = match ph.end {
                    PhaseEnd::Duration(d) => t + h - self.phase_start >= d - 1e-9,
                    PhaseEnd::Station(st) => self.s >= st,
                    PhaseEnd::Forever => false,
                };
                if done {
                    self.phase += 1;
                    self.phase_start = t + h;
                }
                return;
            }
        }
        self.s += self.v * h;
    }
}

fn ego_footprint(ego: &EgoState, vp: &VehicleParams) -> ObbFootprint {
    ObbFootprint::new(ego.pose.xy(), ego.pose.yaw, vp.length, vp.width)
}

fn agent_footprint(a: &AgentState) -> ObbFootprint {
    ObbFootprint::new(a.pose.xy(), a.pose.yaw, a.length, a.width)
}

/// Whether `a` has a footprint corner inside the ego lane ahead of the ego
/// rear bumper.
fn in_ego_lane_ahead(spec: &ScenarioSpec, a: &AgentState, ego: &EgoState, vp: &VehicleParams) -> bool {
    let route = &spec.ego.route;
    let s_rear = route.project(ego.pose.xy()).s - vp.length / 2.0;
    agent_footprint(a).corners().iter().any(|&c| {
        let pr = route.project(c);
        pr.distance < spec.map.lane_width / 2.0 && pr.s > s_rear
    })
}

fn hazard_fired(
    spec: &ScenarioSpec,
    agents: &[AgentState],
    runs: &[AgentRun],
    ego: &EgoState,
    t: f64,
    vp: &VehicleParams,
) -> bool {
    let Some(kind) = spec.hazard else {
        return false;
    };
    spec.agents.iter().zip(agents).zip(runs).any(|((script, a), run)| {
        if !script.hazard {
            return false;
        }
        match kind {
            HazardKind::StaticInEgoLane => a.v == 0.0 && in_ego_lane_ahead(spec, a, ego, vp),
            HazardKind::EntersEgoLane => in_ego_lane_ahead(spec, a, ego, vp),
            HazardKind::LeadBrakes => run.initial_v - a.v >= 2.0 && in_ego_lane_ahead(spec, a, ego, vp),
            HazardKind::RunsRedLight => {
                let red = spec
                    .map
                    .signals
                    .iter()
                    .any(|s| s.approach == Approach::Cross && s.state_at(t) == SignalState::Red);
                red && in_ego_lane_ahead(spec, a, ego, vp)
            }
        }
    })
}

/// Rolls the scenario forward under the teacher. Frames are sampled every
/// `dt`; control runs at 0.1 s substeps.
pub fn simulate_episode(spec: &ScenarioSpec, horizon_s: f64, dt: f64) -> Result<Episode, SimError> {
    if !(horizon_s.is_finite() && horizon_s >= 5.5 - 1e-9) {
        return Err(SimError::InvalidSettings(format!("horizon {horizon_s} s below 5.5 s")));
    }
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(SimError::InvalidSettings(format!("dt={dt} outside (0, 0.5]")));
    }
    spec.map.validate()?;
    let n_frames = (horizon_s / dt + 1e-9).floor() as usize + 1;
    if n_frames < MIN_FRAMES {
        return Err(SimError::InvalidSettings(format!(
            "horizon/dt yields {n_frames} frames, need {MIN_FRAMES}"
        )));
    }
    let n_sub = ((dt / CONTROL_DT) - 1e-9).ceil().max(1.0) as usize;
    let h = dt / n_sub as f64;

    let roof = RoofOffset::default();
    let z = -roof.h_roof();
    let vp = VehicleParams::default();
    let teacher = Teacher::default();
    let route = &spec.ego.route;
    let p0 = route.point_at(spec.ego.start_s);
    let mut ego = EgoState {
        pose: Pose {
            x: p0[0],
            y: p0[1],
            z,
            yaw: route.heading_at(spec.ego.start_s),
        },
        v: spec.ego.speed,
    };
    let mut runs: Vec<AgentRun> = spec.agents.iter().map(AgentRun::new).collect();
    let states = |runs: &[AgentRun]| -> Vec<AgentState> {
        spec.agents.iter().zip(runs).map(|(s, r)| r.state(s, z)).collect()
    };

    let mut frames = Vec::with_capacity(n_frames);
    let mut diag = EpisodeDiagnostics {
        collision: None,
        hazard_time: None,
        min_ego_speed: ego.v,
        max_route_offset: 0.0,
    };
    let mut status = EpisodeStatus::Valid;
    let mut agents = states(&runs);

    for k in 0..n_frames {
        let t_frame = k as f64 * dt;
        frames.push(Frame {
            t: t_frame,
            ego,
            agents: agents.clone(),
            signals: spec.map.signal_states(t_frame),
        });
        if k == 0 && hazard_fired(spec, &agents, &runs, &ego, 0.0, &vp) {
            diag.hazard_time = Some(0.0);
        }
        if k + 1 == n_frames {
            break;
        }
        for j in 0..n_sub {
            let t = t_frame + j as f64 * h;
            let world = WorldFrame {
                t,
                agents: &agents,
                map: &spec.map,
                route,
                desired_speed: spec.ego.desired_speed,
            };
            let ctl = teacher.plan(&world, &ego);
            ego = step_ego(&ego, ctl.accel, ctl.steer, h, vp.wheelbase)?;
            for (script, run) in spec.agents.iter().zip(runs.iter_mut()) {
                run.advance(script, t, h, ego.pose.xy());
            }
            agents = states(&runs);
            let t_next = t + h;

            diag.min_ego_speed = diag.min_ego_speed.min(ego.v);
            let offset = route.distance_to(ego.pose.xy());
            diag.max_route_offset = diag.max_route_offset.max(offset);
            if diag.collision.is_none() {
                let efp = ego_footprint(&ego, &vp);
                if let Some(a) = agents.iter().find(|a| obb_overlap(&efp, &agent_footprint(a))) {
                    diag.collision = Some(CollisionEvent { t: t_next, agent_id: a.id });
                }
            }
            if diag.hazard_time.is_none() && hazard_fired(spec, &agents, &runs, &ego, t_next, &vp) {
                diag.hazard_time = Some(t_next);
            }
            if status == EpisodeStatus::Valid && offset > spec.map.lane_width {
                status = EpisodeStatus::Invalid(format!("ego left its route at t={t_next:.2}"));
            }
        }
    }

    Ok(Episode {
        frames,
        spec: spec.clone(),
        dt,
        convention: FrameConvention::RH_FLU_ROOF,
        roof_offset: roof,
        status,
        diagnostics: diag,
    })
}
