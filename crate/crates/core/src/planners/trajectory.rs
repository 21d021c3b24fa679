use serde::{Deserialize, Serialize};

use crate::curation::EpisodeRecord;

pub const WAYPOINTS: usize = 6;
/// Seconds between waypoints.
pub const WAYPOINT_DT: f64 = 0.5;

/// Six future waypoints and speeds in the current ego frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub waypoints: [[f64; 2]; WAYPOINTS],
    pub speeds: [f64; WAYPOINTS],
}

impl Trajectory {
    pub fn zeros() -> Self {
        Trajectory {
            waypoints: [[0.0; 2]; WAYPOINTS],
            speeds: [0.0; WAYPOINTS],
        }
    }

    pub fn is_finite(&self) -> bool {
        self.waypoints.iter().flatten().chain(&self.speeds).all(|v| v.is_finite())
    }

    /// Ground truth carried by a record. Panics on records that did not
    /// pass validation.
    pub fn ground_truth(r: &EpisodeRecord) -> Self {
        let mut t = Trajectory::zeros();
        t.waypoints.copy_from_slice(&r.gt_waypoints[..WAYPOINTS]);
        t.speeds.copy_from_slice(&r.gt_speeds[..WAYPOINTS]);
        t
    }

    /// Heading at each waypoint: towards the next one, the last reusing the
    /// previous. Stationary steps keep the previous heading.
    pub fn headings(&self) -> [f64; WAYPOINTS] {
        let mut out = [0.0; WAYPOINTS];
        let mut prev = {
            let p = self.waypoints[0];
            if p[0].hypot(p[1]) > 1e-6 {
                p[1].atan2(p[0])
            } else {
                0.0
            }
        };
        for i in 0..WAYPOINTS {
            if i + 1 < WAYPOINTS {
                let a = self.waypoints[i];
                let b = self.waypoints[i + 1];
                let d = [b[0] - a[0], b[1] - a[1]];
                if d[0].hypot(d[1]) > 1e-6 {
                    prev = d[1].atan2(d[0]);
                }
            }
            out[i] = prev;
        }
        out
    }
}

/// A trajectory tagged with the record it answers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub id: String,
    pub trajectory: Trajectory,
}
