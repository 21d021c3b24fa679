//! Road geometry: polylines, lane maps, signals and the drivable-area raster.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::SimError;

/// Open polyline in the plane with cached arc length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct Polyline {
    points: Vec<[f64; 2]>,
    cum: Vec<f64>,
}

/// Result of projecting a point onto a polyline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    /// Arc length of the foot point. Points beyond either end are projected
    /// onto the extension of the end segment, so `s` may leave `[0, len]`.
    pub s: f64,
    /// Signed offset, positive to the left of the direction of travel.
    pub lateral: f64,
    /// Distance to the polyline itself (no extension).
    pub distance: f64,
}

impl Polyline {
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self, SimError> {
        let mut pts: Vec<[f64; 2]> = Vec::with_capacity(points.len());
        for p in points {
            if !(p[0].is_finite() && p[1].is_finite()) {
                return Err(SimError::InvalidMap("non-finite polyline point".into()));
            }
            if let Some(last) = pts.last() {
                if (p[0] - last[0]).hypot(p[1] - last[1]) < 1e-9 {
                    continue;
                }
            }
            pts.push(p);
        }
        if pts.len() < 2 {
            return Err(SimError::InvalidMap(
                "polyline needs at least 2 distinct points".into(),
            ));
        }
        let mut cum = Vec::with_capacity(pts.len());
        cum.push(0.0);
        for w in pts.windows(2) {
            let d = (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            cum.push(cum.last().unwrap() + d);
        }
        Ok(Polyline { points: pts, cum })
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    fn segment_index(&self, s: f64) -> usize {
        let n = self.points.len() - 1;
        match self.cum.binary_search_by(|c| c.total_cmp(&s)) {
            Ok(i) => i.min(n - 1),
            Err(i) => i.saturating_sub(1).min(n - 1),
        }
    }

    /// Point at arc length `s`; extrapolates linearly past the ends.
    pub fn point_at(&self, s: f64) -> [f64; 2] {
        let i = self.segment_index(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        let seg = self.cum[i + 1] - self.cum[i];
        let u = (s - self.cum[i]) / seg;
        [a[0] + u * (b[0] - a[0]), a[1] + u * (b[1] - a[1])]
    }

    pub fn heading_at(&self, s: f64) -> f64 {
        let i = self.segment_index(s);
        let a = self.points[i];
        let b = self.points[i + 1];
        (b[1] - a[1]).atan2(b[0] - a[0])
    }

    pub fn project(&self, p: [f64; 2]) -> Projection {
        let n = self.points.len() - 1;
        let mut best: Option<(f64, usize, f64)> = None; // (dist2, seg, u)
        for i in 0..n {
            let a = self.points[i];
            let b = self.points[i + 1];
            let d = [b[0] - a[0], b[1] - a[1]];
            let len2 = d[0] * d[0] + d[1] * d[1];
            let u = (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0);
            let q = [a[0] + u * d[0], a[1] + u * d[1]];
            let dist2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2);
            if best.is_none_or(|(bd, _, _)| dist2 < bd) {
                best = Some((dist2, i, u));
            }
        }
        let (dist2, mut i, mut u) = best.unwrap();
        let distance = dist2.sqrt();
        // Extend the end segments for points lying beyond the polyline ends.
        let a = self.points[i];
        let b = self.points[i + 1];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let raw_u = ((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / (len * len);
        if (i == 0 && raw_u < 0.0) || (i == n - 1 && raw_u > 1.0) {
            u = raw_u;
        }
        if u.is_nan() {
            u = 0.0;
            i = 0;
        }
        let a = self.points[i];
        let b = self.points[i + 1];
        let d = [b[0] - a[0], b[1] - a[1]];
        let len = d[0].hypot(d[1]);
        let s = self.cum[i] + u * len;
        let cross = d[0] * (p[1] - a[1]) - d[1] * (p[0] - a[0]);
        Projection {
            s,
            lateral: cross / len,
            distance,
        }
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        self.project(p).distance
    }

    /// Signed curvature estimate around arc length `s` from the heading change
    /// over a short window.
    pub fn curvature_at(&self, s: f64) -> f64 {
        let h = 1.0;
        let a = self.heading_at(s - h);
        let b = self.heading_at(s + h);
        let mut d = b - a;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d < -PI {
            d += 2.0 * PI;
        }
        d / (2.0 * h)
    }

    pub fn mapped(&self, f: impl Fn([f64; 2]) -> [f64; 2]) -> Polyline {
        Polyline::new(self.points.iter().map(|&p| f(p)).collect()).expect("mapped polyline")
    }
}

impl TryFrom<Vec<[f64; 2]>> for Polyline {
    type Error = SimError;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self, Self::Error> {
        Polyline::new(v)
    }
}

impl From<Polyline> for Vec<[f64; 2]> {
    fn from(p: Polyline) -> Self {
        p.points
    }
}

/// Builds a straight segment followed by a circular arc and a straight exit.
///
/// The route starts at `start`, heading `heading`, drives `approach` meters,
/// then turns through `sweep` radians (positive = left) on a circle of radius
/// `radius` and finishes with `exit` meters of straight road.
pub fn turn_route(
    start: [f64; 2],
    heading: f64,
    approach: f64,
    radius: f64,
    sweep: f64,
    exit: f64,
) -> Vec<[f64; 2]> {
    let (s, c) = heading.sin_cos();
    let mut pts = vec![start];
    let p0 = [start[0] + approach * c, start[1] + approach * s];
    pts.push(p0);
    let sign = sweep.signum();
    // Centre of the arc sits to the left (sign > 0) or right of the heading.
    let centre = [p0[0] - sign * radius * s, p0[1] + sign * radius * c];
    let steps = ((sweep.abs() / 5f64.to_radians()).ceil() as usize).max(2);
    let start_angle = (p0[1] - centre[1]).atan2(p0[0] - centre[0]);
    for k in 1..=steps {
        let a = start_angle + sweep * k as f64 / steps as f64;
        pts.push([centre[0] + radius * a.cos(), centre[1] + radius * a.sin()]);
    }
    let h_end = heading + sweep;
    let last = *pts.last().unwrap();
    pts.push([last[0] + exit * h_end.cos(), last[1] + exit * h_end.sin()]);
    pts
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignalState {
    Green,
    Yellow,
    Red,
}

/// Which approach of an intersection a signal head controls.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Approach {
    Ego,
    Cross,
    Oncoming,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalPhase {
    /// Phase start time in seconds from episode start.
    pub start: f64,
    pub state: SignalState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSignal {
    pub intersection: usize,
    pub approach: Approach,
    /// Stop line position on the controlled approach.
    pub stop_line: [f64; 2],
    pub phases: Vec<SignalPhase>,
}

impl TrafficSignal {
    pub fn state_at(&self, t: f64) -> SignalState {
        self.phases
            .iter()
            .rev()
            .find(|p| p.start <= t)
            .or(self.phases.first())
            .map(|p| p.state)
            .unwrap_or(SignalState::Green)
    }
}

/// Lane centerlines with a shared lane width, intersections and signal plans.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoadMap {
    pub centerlines: Vec<Polyline>,
    pub lane_width: f64,
    #[serde(default)]
    pub intersections: Vec<[f64; 2]>,
    #[serde(default)]
    pub signals: Vec<TrafficSignal>,
}

impl RoadMap {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.lane_width > 0.0 && self.lane_width.is_finite()) {
            return Err(SimError::InvalidMap(format!(
                "lane_width must be positive, got {}",
                self.lane_width
            )));
        }
        for s in &self.signals {
            if s.intersection >= self.intersections.len() {
                return Err(SimError::InvalidMap(format!(
                    "signal references missing intersection {}",
                    s.intersection
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, SimError> {
        let map: RoadMap =
            serde_json::from_str(text).map_err(|e| SimError::InvalidMap(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn signal_states(&self, t: f64) -> Vec<SignalState> {
        self.signals.iter().map(|s| s.state_at(t)).collect()
    }

    /// Distance from `p` to the nearest centerline.
    pub fn distance_to_road(&self, p: [f64; 2]) -> f64 {
        self.centerlines
            .iter()
            .map(|c| c.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Continuous drivable test: within half a lane width of a centerline.
    pub fn is_drivable_point(&self, p: [f64; 2]) -> bool {
        self.distance_to_road(p) <= self.lane_width / 2.0
    }

    pub fn bounds(&self) -> Option<([f64; 2], [f64; 2])> {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for c in &self.centerlines {
            for p in c.points() {
                lo[0] = lo[0].min(p[0]);
                lo[1] = lo[1].min(p[1]);
                hi[0] = hi[0].max(p[0]);
                hi[1] = hi[1].max(p[1]);
            }
        }
        if self.centerlines.is_empty() {
            None
        } else {
            Some((lo, hi))
        }
    }

    pub fn mapped(&self, f: impl Fn([f64; 2]) -> [f64; 2] + Copy) -> RoadMap {
        RoadMap {
            centerlines: self.centerlines.iter().map(|c| c.mapped(f)).collect(),
            lane_width: self.lane_width,
            intersections: self.intersections.iter().map(|&p| f(p)).collect(),
            signals: self
                .signals
                .iter()
                .map(|s| TrafficSignal {
                    stop_line: f(s.stop_line),
                    ..s.clone()
                })
                .collect(),
        }
    }
}

/// Boolean raster of the drivable area.
///
/// A cell is drivable when its centre and all four corners lie within half a
/// lane width of some centerline, i.e. the whole cell is on the road.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrivableGrid {
    /// World position of the lower-left corner of cell (0, 0).
    pub origin: [f64; 2],
    pub resolution: f64,
    pub cols: usize,
    pub rows: usize,
    cells: Vec<bool>,
}

impl DrivableGrid {
    pub fn cell_of(&self, p: [f64; 2]) -> Option<(usize, usize)> {
        let cx = ((p[0] - self.origin[0]) / self.resolution).floor();
        let cy = ((p[1] - self.origin[1]) / self.resolution).floor();
        if cx < 0.0 || cy < 0.0 || cx >= self.cols as f64 || cy >= self.rows as f64 {
            None
        } else {
            Some((cx as usize, cy as usize))
        }
    }

    pub fn cell_center(&self, col: usize, row: usize) -> [f64; 2] {
        [
            self.origin[0] + (col as f64 + 0.5) * self.resolution,
            self.origin[1] + (row as f64 + 0.5) * self.resolution,
        ]
    }

    pub fn is_drivable_cell(&self, col: usize, row: usize) -> bool {
        self.cells[row * self.cols + col]
    }

    /// `None` when the point falls outside the raster.
    pub fn is_drivable(&self, p: [f64; 2]) -> Option<bool> {
        self.cell_of(p).map(|(c, r)| self.is_drivable_cell(c, r))
    }

    pub fn drivable_count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}

pub const GRID_MARGIN: f64 = 10.0;

pub(crate) fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let len2 = d[0] * d[0] + d[1] * d[1];
    let u = if len2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - u * d[0]).hypot(p[1] - a[1] - u * d[1])
}

/// Rasterizes the drivable area of `map` at `resolution` meters per cell.
pub fn drivable_grid(map: &RoadMap, resolution: f64) -> Result<DrivableGrid, SimError> {
    if !(0.1..=1.0).contains(&resolution) {
        return Err(SimError::InvalidGrid(format!(
            "resolution must be in [0.1, 1.0], got {resolution}"
        )));
    }
    map.validate()?;
    let (lo, hi) = map
        .bounds()
        .ok_or_else(|| SimError::InvalidGrid("map has no centerlines".into()))?;
    let margin = map.lane_width + GRID_MARGIN;
    let origin = [
        ((lo[0] - margin) / resolution).floor() * resolution,
        ((lo[1] - margin) / resolution).floor() * resolution,
    ];
    let cols = (((hi[0] + margin) - origin[0]) / resolution).ceil() as usize;
    let rows = (((hi[1] + margin) - origin[1]) / resolution).ceil() as usize;
    let half = map.lane_width / 2.0;

    // Distance fields on the corner lattice and on the cell centres, filled
    // only near each segment.
    let mut corner = vec![f64::INFINITY; (cols + 1) * (rows + 1)];
    let mut centre = vec![f64::INFINITY; cols * rows];
    for line in &map.centerlines {
        for w in line.points().windows(2) {
            let (a, b) = (w[0], w[1]);
            let lo_x = a[0].min(b[0]) - half - resolution;
            let hi_x = a[0].max(b[0]) + half + resolution;
            let lo_y = a[1].min(b[1]) - half - resolution;
            let hi_y = a[1].max(b[1]) + half + resolution;
            let c0 = (((lo_x - origin[0]) / resolution).floor().max(0.0)) as usize;
            let c1 = ((((hi_x - origin[0]) / resolution).ceil()) as usize).min(cols);
            let r0 = (((lo_y - origin[1]) / resolution).floor().max(0.0)) as usize;
            let r1 = ((((hi_y - origin[1]) / resolution).ceil()) as usize).min(rows);
            for row in r0..=r1 {
                for col in c0..=c1 {
                    let p = [
                        origin[0] + col as f64 * resolution,
                        origin[1] + row as f64 * resolution,
                    ];
                    let i = row * (cols + 1) + col;
                    corner[i] = corner[i].min(segment_distance(p, a, b));
                    if row < rows && col < cols {
                        let q = [p[0] + resolution / 2.0, p[1] + resolution / 2.0];
                        let j = row * cols + col;
                        centre[j] = centre[j].min(segment_distance(q, a, b));
                    }
                }
            }
        }
    }
    let mut cells = vec![false; cols * rows];
    for row in 0..rows {
        for col in 0..cols {
            let k = |r: usize, c: usize| corner[r * (cols + 1) + c] <= half;
            cells[row * cols + col] = centre[row * cols + col] <= half
                && k(row, col)
                && k(row, col + 1)
                && k(row + 1, col)
                && k(row + 1, col + 1);
        }
    }
    Ok(DrivableGrid {
        origin,
        resolution,
        cols,
        rows,
        cells,
    })
}
