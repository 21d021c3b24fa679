//! Kinematic baselines and the closed-form linear planner.

mod kinematic;
mod linear;
mod trajectory;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::EpisodeRecord;
use crate::i2e::I2eError;

pub use kinematic::{kinematic_baseline, KinematicMode};
pub use linear::{
    features, fit_ridge, targets, FeatureSpec, LinearPlanner, OUTPUT_DIM, PLANNER_FORMAT_VERSION,
};
pub use trajectory::{Prediction, Trajectory, WAYPOINTS, WAYPOINT_DT};

#[derive(Debug, Error)]
pub enum PlannerError {
    #[error("record {id} is in {found}; align it to RH_FLU_ROOF first")]
    Convention { id: String, found: &'static str },
    #[error("need at least {need} training records, have {have}")]
    TooFewRecords { have: usize, need: usize },
    #[error("normal equations are singular; use lambda > 0")]
    Singular,
    #[error("planner spec: {0}")]
    Spec(String),
    #[error(transparent)]
    Encoder(#[from] I2eError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Planner choices exposed on the command line. `gt` replays the ground
/// truth and is meant for sanity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerKind {
    Cv,
    Ctrv,
    Linear,
    Gt,
}

impl PlannerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PlannerKind::Cv => "cv",
            PlannerKind::Ctrv => "ctrv",
            PlannerKind::Linear => "linear",
            PlannerKind::Gt => "gt",
        }
    }
}

impl fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.as_str())
    }
}

impl FromStr for PlannerKind {
    type Err = PlannerError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cv" => Ok(PlannerKind::Cv),
            "ctrv" => Ok(PlannerKind::Ctrv),
            "linear" => Ok(PlannerKind::Linear),
            "gt" => Ok(PlannerKind::Gt),
            other => Err(PlannerError::Spec(format!("unknown planner {other:?}"))),
        }
    }
}

/// Predictions for every record. `linear` needs a fitted planner.
pub fn predict_all(
    kind: PlannerKind,
    records: &[EpisodeRecord],
    linear: Option<&LinearPlanner>,
) -> Result<Vec<Prediction>, PlannerError> {
    records
        .iter()
        .map(|r| {
            let trajectory = match kind {
                PlannerKind::Cv => kinematic_baseline(r, KinematicMode::ConstantVelocity),
                PlannerKind::Ctrv => kinematic_baseline(r, KinematicMode::ConstantTurnRate),
                PlannerKind::Gt => Trajectory::ground_truth(r),
                PlannerKind::Linear => linear
                    .ok_or_else(|| PlannerError::Spec("linear planner not fitted".into()))?
                    .predict(r)?,
            };
            Ok(Prediction {
                id: r.id.clone(),
                trajectory,
            })
        })
        .collect()
}
