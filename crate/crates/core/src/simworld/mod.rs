//! Deterministic planar micro-simulator.
//!
//! Worlds are right-handed (X east, Y north, yaw counter-clockwise) and
//! vehicles drive on the right. Episodes are stored in the `RH_FLU_ROOF`
//! convention, so every ground-contact pose carries `z = -h_roof`.

mod episode;
mod road;
mod scenario;
mod teacher;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{normalize_angle, GeometryError, Pose};

pub use episode::{
    classify_episode, future_yaw_change, CollisionEvent, simulate_episode, Difficulty, Episode, EpisodeDiagnostics, EpisodeLabels,
    EpisodeStatus, Frame, Maneuver, CURRENT_FRAME, FUTURE_FRAMES, HISTORY_FRAMES, MIN_FRAMES,
    TURN_THRESHOLD_DEG,
};
pub use road::{
    drivable_grid, turn_route, Approach, DrivableGrid, Polyline, Projection, RoadMap,
    SignalPhase, SignalState, TrafficSignal,
};
pub use scenario::{
    env_speed_factor, instantiate_scenario, list_categories, long_tail_categories, AgentScript,
    EgoSetup, HazardKind, MotionPhase, PhaseEnd, ScenarioCategory, ScenarioSpec, Trigger,
    TurnDirection, LANE_WIDTH,
};
pub use teacher::{teacher_plan, Control, Teacher, TeacherConfig, WorldFrame};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid control: {0}")]
    InvalidControl(String),
    #[error("unknown scenario category {0:?}")]
    UnknownCategory(String),
    #[error("invalid map: {0}")]
    InvalidMap(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid simulation settings: {0}")]
    InvalidSettings(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeOfDay {
    Day,
    Night,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weather {
    Sunny,
    Rainy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EnvCondition {
    pub time: TimeOfDay,
    pub weather: Weather,
}

impl EnvCondition {
    pub const DAY_SUNNY: EnvCondition = EnvCondition {
        time: TimeOfDay::Day,
        weather: Weather::Sunny,
    };

    pub fn is_hard(&self) -> bool {
        self.time == TimeOfDay::Night || self.weather == Weather::Rainy
    }
}

/// Ego kinematic state. The pose is the centre of the ego footprint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoState {
    pub pose: Pose,
    pub v: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
}

/// Other road user. `length`/`width` describe its footprint in its own frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub id: u32,
    pub kind: AgentKind,
    pub pose: Pose,
    pub v: f64,
    pub length: f64,
    pub width: f64,
}

impl AgentState {
    pub fn validate(&self) -> Result<(), SimError> {
        self.pose.validate()?;
        if !(self.length > 0.0 && self.width > 0.0) {
            return Err(SimError::InvalidSettings(format!(
                "agent {} footprint must be positive",
                self.id
            )));
        }
        if self.kind == AgentKind::Pedestrian && (self.length > 1.0 || self.width > 1.0) {
            return Err(SimError::InvalidSettings(format!(
                "pedestrian {} footprint exceeds 1 m",
                self.id
            )));
        }
        Ok(())
    }

    pub fn velocity(&self) -> [f64; 2] {
        [self.v * self.pose.yaw.cos(), self.v * self.pose.yaw.sin()]
    }
}

/// Ego vehicle limits and dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleParams {
    pub wheelbase: f64,
    pub max_accel: f64,
    pub max_steer: f64,
    pub length: f64,
    pub width: f64,
}

impl Default for VehicleParams {
    fn default() -> Self {
        VehicleParams {
            wheelbase: 2.7,
            max_accel: 4.0,
            max_steer: 0.6,
            length: 4.0,
            width: 1.8,
        }
    }
}

/// One kinematic bicycle step with wheelbase `wheelbase`. Speed never goes
/// negative.
pub fn step_ego(
    s: &EgoState,
    accel: f64,
    steer: f64,
    dt: f64,
    wheelbase: f64,
) -> Result<EgoState, SimError> {
    if !accel.is_finite() || !steer.is_finite() {
        return Err(SimError::InvalidControl(format!(
            "accel={accel}, steer={steer}"
        )));
    }
    if !(dt > 0.0 && dt <= 0.5) {
        return Err(SimError::InvalidControl(format!("dt={dt} outside (0, 0.5]")));
    }
    if steer.abs() > 0.6 + 1e-12 {
        return Err(SimError::InvalidControl(format!("|steer|={} > 0.6", steer.abs())));
    }
    let p = s.pose;
    let (sin, cos) = p.yaw.sin_cos();
    Ok(EgoState {
        pose: Pose {
            x: p.x + s.v * cos * dt,
            y: p.y + s.v * sin * dt,
            z: p.z,
            yaw: normalize_angle(p.yaw + s.v / wheelbase * steer.tan() * dt),
        },
        v: (s.v + accel * dt).max(0.0),
    })
}
