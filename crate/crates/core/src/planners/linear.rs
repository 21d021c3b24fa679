use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{PlannerError, Trajectory, WAYPOINTS};
use crate::curation::{Command, EpisodeRecord, Provenance};
use crate::geometry::FrameConvention;
use crate::i2e::{mean_embedding, MlpParams, DEFAULT_EMBED, DEFAULT_HIDDEN};
use crate::simworld::HISTORY_FRAMES;

pub const OUTPUT_DIM: usize = 2 * WAYPOINTS + WAYPOINTS;
pub const PLANNER_FORMAT_VERSION: u32 = 1;

/// Which feature blocks enter the regression, in this order: ego history,
/// command one-hot, history copies gated by the turn commands, provenance
/// flag, mean camera embedding, bias.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureSpec {
    pub history: bool,
    pub command: bool,
    pub command_interactions: bool,
    pub provenance: bool,
    pub i2e: bool,
    pub i2e_hidden: usize,
    pub i2e_embed: usize,
    pub i2e_seed: u64,
}

impl Default for FeatureSpec {
    fn default() -> Self {
        FeatureSpec {
            history: true,
            command: true,
            command_interactions: true,
            provenance: true,
            i2e: true,
            i2e_hidden: DEFAULT_HIDDEN,
            i2e_embed: DEFAULT_EMBED,
            i2e_seed: 0,
        }
    }
}

const HISTORY_DIM: usize = HISTORY_FRAMES * 4;

impl FeatureSpec {
    pub fn dim(&self) -> usize {
        let mut d = 1;
        if self.history {
            d += HISTORY_DIM;
        }
        if self.command {
            d += 3;
        }
        if self.command_interactions {
            d += 2 * HISTORY_DIM;
        }
        if self.provenance {
            d += 1;
        }
        if self.i2e {
            d += self.i2e_embed;
        }
        d
    }

    pub fn encoder(&self) -> Result<Option<MlpParams>, PlannerError> {
        if !self.i2e {
            return Ok(None);
        }
        Ok(Some(MlpParams::init(self.i2e_seed, self.i2e_hidden, self.i2e_embed)?))
    }
}

fn history_block(r: &EpisodeRecord) -> [f64; HISTORY_DIM] {
    let mut h = [0.0; HISTORY_DIM];
    for (k, f) in r.history.iter().enumerate() {
        h[4 * k..4 * k + 4].copy_from_slice(&[f.ego.pose.x, f.ego.pose.y, f.ego.pose.yaw, f.ego.v]);
    }
    h
}

/// Feature vector of `r` under `spec`.
pub fn features(
    r: &EpisodeRecord,
    spec: &FeatureSpec,
    encoder: Option<&MlpParams>,
) -> Result<Vec<f64>, PlannerError> {
    let mut x = Vec::with_capacity(spec.dim());
    let hist = history_block(r);
    if spec.history {
        x.extend_from_slice(&hist);
    }
    if spec.command {
        let mut one = [0.0; 3];
        one[r.command.index()] = 1.0;
        x.extend_from_slice(&one);
    }
    if spec.command_interactions {
        for c in [Command::TurnLeft, Command::TurnRight] {
            let gate = if r.command == c { 1.0 } else { 0.0 };
            x.extend(hist.iter().map(|v| v * gate));
        }
    }
    if spec.provenance {
        x.push(if r.provenance == Provenance::Sim { 1.0 } else { 0.0 });
    }
    if spec.i2e {
        let enc = encoder.ok_or_else(|| PlannerError::Spec("missing camera encoder".into()))?;
        x.extend(mean_embedding(enc, r)?);
    }
    x.push(1.0);
    debug_assert_eq!(x.len(), spec.dim());
    Ok(x)
}

pub fn targets(r: &EpisodeRecord) -> [f64; OUTPUT_DIM] {
    let mut y = [0.0; OUTPUT_DIM];
    for k in 0..WAYPOINTS {
        y[2 * k] = r.gt_waypoints[k][0];
        y[2 * k + 1] = r.gt_waypoints[k][1];
        y[2 * WAYPOINTS + k] = r.gt_speeds[k];
    }
    y
}

fn require_rh(r: &EpisodeRecord) -> Result<(), PlannerError> {
    if r.frame_convention != FrameConvention::RH_FLU_ROOF {
        return Err(PlannerError::Convention {
            id: r.id.clone(),
            found: r.frame_convention.name(),
        });
    }
    Ok(())
}

/// Ridge regression from features to stacked waypoints and speeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearPlanner {
    pub format_version: u32,
    pub spec: FeatureSpec,
    pub lambda: f64,
    /// `OUTPUT_DIM` rows of `spec.dim()` weights.
    pub weights: Vec<Vec<f64>>,
    pub encoder: Option<MlpParams>,
}

/// Solves `min (1/n)|XW - Y|^2 + lambda |W|^2` from feature/target rows.
/// Rows are sorted first so the result does not depend on input order.
pub fn fit_ridge(
    mut rows: Vec<(Vec<f64>, Vec<f64>)>,
    lambda: f64,
) -> Result<Vec<Vec<f64>>, PlannerError> {
    if rows.is_empty() {
        return Err(PlannerError::TooFewRecords { have: 0, need: 1 });
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(PlannerError::Spec(format!("lambda must be non-negative, got {lambda}")));
    }
    rows.sort_by(|a, b| {
        a.0.iter()
            .chain(&a.1)
            .zip(b.0.iter().chain(&b.1))
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let n = rows.len();
    let d = rows[0].0.len();
    let m = rows[0].1.len();
    let x = DMatrix::from_fn(n, d, |i, j| rows[i].0[j]);
    let y = DMatrix::from_fn(n, m, |i, j| rows[i].1[j]);
    let inv_n = 1.0 / n as f64;
    let gram = x.tr_mul(&x) * inv_n + DMatrix::identity(d, d) * lambda;
    let rhs = x.tr_mul(&y) * inv_n;
    let chol = gram.cholesky().ok_or(PlannerError::Singular)?;
    let w = chol.solve(&rhs);
    Ok((0..m).map(|k| w.column(k).iter().copied().collect()).collect())
}

impl LinearPlanner {
    /// Closed-form fit. Needs at least as many records as features.
    pub fn fit(train: &[EpisodeRecord], lambda: f64, spec: FeatureSpec) -> Result<Self, PlannerError> {
        if train.len() < spec.dim() {
            return Err(PlannerError::TooFewRecords {
                have: train.len(),
                need: spec.dim(),
            });
        }
        let encoder = spec.encoder()?;
        let rows = train
            .iter()
            .map(|r| {
                require_rh(r)?;
                Ok((features(r, &spec, encoder.as_ref())?, targets(r).to_vec()))
            })
            .collect::<Result<Vec<_>, PlannerError>>()?;
        Ok(LinearPlanner {
            format_version: PLANNER_FORMAT_VERSION,
            spec,
            lambda,
            weights: fit_ridge(rows, lambda)?,
            encoder,
        })
    }

    pub fn predict(&self, r: &EpisodeRecord) -> Result<Trajectory, PlannerError> {
        require_rh(r)?;
        let x = DVector::from_vec(features(r, &self.spec, self.encoder.as_ref())?);
        let mut out = Trajectory::zeros();
        for (k, w) in self.weights.iter().enumerate() {
            let v = DVector::from_column_slice(w).dot(&x);
            if k < 2 * WAYPOINTS {
                out.waypoints[k / 2][k % 2] = v;
            } else {
                out.speeds[k - 2 * WAYPOINTS] = v;
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("planner serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, PlannerError> {
        let p: LinearPlanner = serde_json::from_str(s).map_err(|e| PlannerError::Spec(e.to_string()))?;
        if p.format_version != PLANNER_FORMAT_VERSION {
            return Err(PlannerError::Spec(format!("unsupported version {}", p.format_version)));
        }
        if p.weights.len() != OUTPUT_DIM || p.weights.iter().any(|w| w.len() != p.spec.dim()) {
            return Err(PlannerError::Spec("weight shape does not match feature spec".into()));
        }
        if p.spec.i2e != p.encoder.is_some() {
            return Err(PlannerError::Spec("encoder presence does not match feature spec".into()));
        }
        Ok(p)
    }

    pub fn save(&self, path: &Path) -> Result<(), PlannerError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, PlannerError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
