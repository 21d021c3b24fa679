use serde::{Deserialize, Serialize};

use super::{Trajectory, WAYPOINTS, WAYPOINT_DT};
use crate::curation::EpisodeRecord;
use crate::geometry::normalize_angle;
use crate::simworld::CURRENT_FRAME;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KinematicMode {
    ConstantVelocity,
    ConstantTurnRate,
}

/// Extrapolates the last history state. The yaw rate for the turning
/// variant comes from the last two history frames.
pub fn kinematic_baseline(r: &EpisodeRecord, mode: KinematicMode) -> Trajectory {
    let now = &r.history[CURRENT_FRAME];
    let prev = &r.history[CURRENT_FRAME - 1];
    let (x0, y0, yaw0, v) = (now.ego.pose.x, now.ego.pose.y, now.ego.pose.yaw, now.ego.v);
    let omega = match mode {
        KinematicMode::ConstantVelocity => 0.0,
        KinematicMode::ConstantTurnRate => {
            let dt = now.t - prev.t;
            if dt > 0.0 {
                normalize_angle(now.ego.pose.yaw - prev.ego.pose.yaw) / dt
            } else {
                0.0
            }
        }
    };
    let mut out = Trajectory::zeros();
    for k in 0..WAYPOINTS {
        let t = (k + 1) as f64 * WAYPOINT_DT;
        out.waypoints[k] = if omega.abs() < 1e-9 {
            [x0 + v * t * yaw0.cos(), y0 + v * t * yaw0.sin()]
        } else {
            let r = v / omega;
            let yaw = yaw0 + omega * t;
            [x0 + r * (yaw.sin() - yaw0.sin()), y0 - r * (yaw.cos() - yaw0.cos())]
        };
        out.speeds[k] = v;
    }
    out
}
