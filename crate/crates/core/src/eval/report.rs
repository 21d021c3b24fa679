//! Text tables and SVG overlays.

use std::fmt::Write;

use super::metrics::{HorizonValues, MetricsReport, HORIZON_NAMES};
use crate::curation::{EpisodeRecord, SceneContext};
use crate::planners::Trajectory;

fn cells(v: &HorizonValues, out: &mut String) {
    for x in v.as_array() {
        let _ = write!(out, " {x:>7.2}");
    }
}

/// One table for `slice` with a row per method: L2 (m), collision (%) and
/// boundary (%) at 1s/2s/3s/avg.
pub fn format_table(reports: &[&MetricsReport], slice: &str) -> String {
    let width = reports.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
    let mut out = String::new();
    let _ = writeln!(out, "[{slice}]");
    let _ = write!(out, "{:<width$} {:>5}", "method", "n");
    for group in ["L2", "Coll", "Bound"] {
        for h in HORIZON_NAMES.iter().chain(&["avg"]) {
            let _ = write!(out, " {:>7}", format!("{group}{h}"));
        }
    }
    out.push('\n');
    for r in reports {
        let Some(m) = r.slice(slice) else { continue };
        let _ = write!(out, "{:<width$} {:>5}", r.method, m.n);
        cells(&m.l2, &mut out);
        cells(&m.collision_pct, &mut out);
        cells(&m.boundary_pct, &mut out);
        out.push('\n');
    }
    out
}

/// Tables for every slice present in the first report.
pub fn format_report(reports: &[&MetricsReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    super::metrics::SLICES
        .iter()
        .filter(|s| first.slices.contains_key(**s))
        .map(|s| format_table(reports, s))
        .collect::<Vec<_>>()
        .join("\n")
}

const SCALE: f64 = 8.0;
const VIEW: (f64, f64, f64, f64) = (-20.0, 60.0, -25.0, 25.0);

/// Ego frame to SVG pixels: forward is up the page, +y to the left.
fn px(p: [f64; 2]) -> (f64, f64) {
    let (_, x1, _, y1) = VIEW;
    ((y1 - p[1]) * SCALE, (x1 - p[0]) * SCALE)
}

fn points_attr(pts: &[[f64; 2]]) -> String {
    pts.iter()
        .map(|p| {
            let (u, v) = px(*p);
            format!("{u:.2},{v:.2}")
        })
        .collect::<Vec<_>>()
        .join(" ")
}

/// Overlay of the road, agents at the current frame, ground truth (red),
/// a baseline (yellow) and the evaluated planner (green).
pub fn svg_overlay(
    record: &EpisodeRecord,
    ctx: &SceneContext,
    baseline: &Trajectory,
    model: &Trajectory,
) -> String {
    let (x0, x1, y0, y1) = VIEW;
    let w = (y1 - y0) * SCALE;
    let h = (x1 - x0) * SCALE;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#
    );
    let _ = writeln!(s, r##"<rect width="{w}" height="{h}" fill="#f4f4f0"/>"##);
    let _ = writeln!(s, "<title>{}</title>", record.id);
    let lw = ctx.lane_width * SCALE;
    for lane in &ctx.lanes {
        let d: Vec<String> = lane
            .points()
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let (u, v) = px(*p);
                format!("{}{u:.2} {v:.2}", if i == 0 { "M" } else { "L" })
            })
            .collect();
        let _ = writeln!(
            s,
            r##"<path d="{}" stroke="#b8b8b8" stroke-width="{lw:.2}" fill="none" stroke-linecap="butt"/>"##,
            d.join(" ")
        );
    }
    for a in &record.current().agents {
        let fp = super::ObbFootprint::new(a.pose.xy(), a.pose.yaw, a.length, a.width);
        let _ = writeln!(
            s,
            r##"<polygon points="{}" fill="#5078c8" fill-opacity="0.7"/>"##,
            points_attr(&fp.corners())
        );
    }
    let gt = Trajectory::ground_truth(record);
    for (traj, colour) in [(&gt, "#d62728"), (baseline, "#e6c619"), (model, "#2ca02c")] {
        let mut pts = vec![[0.0, 0.0]];
        pts.extend(traj.waypoints);
        let _ = writeln!(
            s,
            r#"<polyline points="{}" stroke="{colour}" stroke-width="3" fill="none"/>"#,
            points_attr(&pts)
        );
    }
    s.push_str("</svg>\n");
    s
}
