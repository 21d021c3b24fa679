//! Oriented rectangular footprints and the separating-axis overlap test.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObbFootprint {
    pub center: [f64; 2],
    pub yaw: f64,
    pub length: f64,
    pub width: f64,
}

/// Overlap along an axis at or below this is treated as touching.
const CONTACT_EPS: f64 = 1e-9;

impl ObbFootprint {
    pub fn new(center: [f64; 2], yaw: f64, length: f64, width: f64) -> Self {
        debug_assert!(length > 0.0 && width > 0.0);
        ObbFootprint {
            center,
            yaw,
            length,
            width,
        }
    }

    /// Unit axes: heading direction and its left normal.
    pub fn axes(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.yaw.sin_cos();
        [[c, s], [-s, c]]
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let [u, v] = self.axes();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let c = self.center;
        let at = |a: f64, b: f64| [c[0] + a * u[0] + b * v[0], c[1] + a * u[1] + b * v[1]];
        [at(hl, hw), at(-hl, hw), at(-hl, -hw), at(hl, -hw)]
    }

    /// Strict containment (boundary points excluded).
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let [u, v] = self.axes();
        let d = [p[0] - self.center[0], p[1] - self.center[1]];
        let a = d[0] * u[0] + d[1] * u[1];
        let b = d[0] * v[0] + d[1] * v[1];
        a.abs() < self.length / 2.0 && b.abs() < self.width / 2.0
    }

    fn project(&self, axis: [f64; 2]) -> (f64, f64) {
        let [u, v] = self.axes();
        let c = self.center[0] * axis[0] + self.center[1] * axis[1];
        let r = self.length / 2.0 * (u[0] * axis[0] + u[1] * axis[1]).abs()
            + self.width / 2.0 * (v[0] * axis[0] + v[1] * axis[1]).abs();
        (c - r, c + r)
    }
}

/// True iff the two rectangles intersect with positive area. Four face normals
/// are tested; touching edges count as separated.
pub fn obb_overlap(a: &ObbFootprint, b: &ObbFootprint) -> bool {
    let axes = a.axes().into_iter().chain(b.axes());
    for axis in axes {
        let (a0, a1) = a.project(axis);
        let (b0, b1) = b.project(axis);
        let overlap = a1.min(b1) - a0.max(b0);
        if overlap <= CONTACT_EPS {
            return false;
        }
    }
    true
}
