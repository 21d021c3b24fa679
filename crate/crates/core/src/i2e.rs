//! Image-to-ego encoder: a two-layer tanh MLP over the flattened
//! image-to-ego matrix of each camera.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curation::EpisodeRecord;
use crate::geometry::{image_to_ego_matrix, GeometryError};

pub const INPUT_DIM: usize = 16;
pub const DEFAULT_HIDDEN: usize = 64;
pub const DEFAULT_EMBED: usize = 32;
pub const WEIGHTS_FORMAT_VERSION: u32 = 1;
/// Finite-difference step used by [`MlpParams::grad_check`].
pub const FD_STEP: f64 = 1e-5;

#[derive(Debug, Error)]
pub enum I2eError {
    #[error("dimensions must be positive (hidden {0}, embed {1})")]
    BadDims(usize, usize),
    #[error("non-finite input at index {0}")]
    NonFinite(usize),
    #[error("weights: {0}")]
    Weights(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Row-major weights: `w1` is `d_h x 16`, `w2` is `d_e x d_h`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub d_h: usize,
    pub d_e: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Same layout as [`MlpParams`].
pub type Gradients = MlpParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding(pub Vec<f64>);

#[derive(Serialize, Deserialize)]
struct WeightFile {
    format_version: u32,
    activation: String,
    input_dim: usize,
    #[serde(flatten)]
    params: MlpParams,
}

fn xavier(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols).map(|_| rng.random_range(-bound..=bound)).collect()
}

impl MlpParams {
    pub fn init(seed: u64, d_h: usize, d_e: usize) -> Result<Self, I2eError> {
        if d_h == 0 || d_e == 0 {
            return Err(I2eError::BadDims(d_h, d_e));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w1 = xavier(&mut rng, d_h, INPUT_DIM);
        let w2 = xavier(&mut rng, d_e, d_h);
        Ok(MlpParams {
            d_h,
            d_e,
            w1,
            b1: vec![0.0; d_h],
            w2,
            b2: vec![0.0; d_e],
        })
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            d_h: self.d_h,
            d_e: self.d_e,
            w1: vec![0.0; self.w1.len()],
            b1: vec![0.0; self.d_h],
            w2: vec![0.0; self.w2.len()],
            b2: vec![0.0; self.d_e],
        }
    }

    pub fn validate(&self) -> Result<(), I2eError> {
        if self.d_h == 0 || self.d_e == 0 {
            return Err(I2eError::BadDims(self.d_h, self.d_e));
        }
        let shapes = [
            ("w1", self.w1.len(), self.d_h * INPUT_DIM),
            ("b1", self.b1.len(), self.d_h),
            ("w2", self.w2.len(), self.d_e * self.d_h),
            ("b2", self.b2.len(), self.d_e),
        ];
        for (name, got, want) in shapes {
            if got != want {
                return Err(I2eError::Weights(format!("{name} has {got} entries, expected {want}")));
            }
        }
        if !self.values().all(|v| v.is_finite()) {
            return Err(I2eError::Weights("non-finite entry".into()));
        }
        Ok(())
    }

    /// All parameters in `w1, b1, w2, b2` order.
    pub fn values(&self) -> impl Iterator<Item = &f64> {
        self.w1.iter().chain(&self.b1).chain(&self.w2).chain(&self.b2)
    }

    pub fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(&mut self.b1)
            .chain(&mut self.w2)
            .chain(&mut self.b2)
    }

    /// Parameter `idx` in [`values`](Self::values) order.
    pub fn param_mut(&mut self, idx: usize) -> &mut f64 {
        let (n1, nb1, n2) = (self.w1.len(), self.b1.len(), self.w2.len());
        match idx {
            i if i < n1 => &mut self.w1[i],
            i if i < n1 + nb1 => &mut self.b1[i - n1],
            i if i < n1 + nb1 + n2 => &mut self.w2[i - n1 - nb1],
            i => &mut self.b2[i - n1 - nb1 - n2],
        }
    }

    fn hidden(&self, m: &[f64; INPUT_DIM]) -> Vec<f64> {
        (0..self.d_h)
            .map(|i| {
                let row = &self.w1[i * INPUT_DIM..(i + 1) * INPUT_DIM];
                let z: f64 = row.iter().zip(m).map(|(w, x)| w * x).sum::<f64>() + self.b1[i];
                z.tanh()
            })
            .collect()
    }

    fn output(&self, h: &[f64]) -> Vec<f64> {
        (0..self.d_e)
            .map(|k| {
                let row = &self.w2[k * self.d_h..(k + 1) * self.d_h];
                row.iter().zip(h).map(|(w, x)| w * x).sum::<f64>() + self.b2[k]
            })
            .collect()
    }

    /// `e = W2 tanh(W1 m + b1) + b2`.
    pub fn forward(&self, m: &[f64; INPUT_DIM]) -> Result<Embedding, I2eError> {
        if let Some(i) = m.iter().position(|v| !v.is_finite()) {
            return Err(I2eError::NonFinite(i));
        }
        Ok(Embedding(self.output(&self.hidden(m))))
    }

    /// Gradient of a loss with `dL/de = upstream` with respect to all
    /// parameters.
    pub fn backward(&self, m: &[f64; INPUT_DIM], upstream: &[f64]) -> Gradients {
        let h = self.hidden(m);
        let mut g = self.zeros_like();
        for k in 0..self.d_e {
            g.b2[k] = upstream[k];
            for j in 0..self.d_h {
                g.w2[k * self.d_h + j] = upstream[k] * h[j];
            }
        }
        for j in 0..self.d_h {
            let dh: f64 = (0..self.d_e).map(|k| upstream[k] * self.w2[k * self.d_h + j]).sum();
            let dz = dh * (1.0 - h[j] * h[j]);
            g.b1[j] = dz;
            for i in 0..INPUT_DIM {
                g.w1[j * INPUT_DIM + i] = dz * m[i];
            }
        }
        g
    }

    fn loss(&self, m: &[f64; INPUT_DIM]) -> f64 {
        0.5 * self.output(&self.hidden(m)).iter().map(|v| v * v).sum::<f64>()
    }

    /// Loss `scale * 0.5 * |e|^2` and its gradient.
    pub fn half_sq_loss(&self, m: &[f64; INPUT_DIM], scale: f64) -> (f64, Gradients) {
        let e = self.output(&self.hidden(m));
        let loss = scale * 0.5 * e.iter().map(|v| v * v).sum::<f64>();
        let up: Vec<f64> = e.iter().map(|v| scale * v).collect();
        (loss, self.backward(m, &up))
    }

    /// Largest relative error between backprop and central differences
    /// of `0.5 * |e|^2`. Pairs where both gradients are below `1e-10` in
    /// magnitude count as exact.
    pub fn grad_check(&self, m: &[f64; INPUT_DIM]) -> f64 {
        let (_, analytic) = self.half_sq_loss(m, 1.0);
        let mut probe = self.clone();
        let mut worst: f64 = 0.0;
        for (idx, &a) in analytic.values().enumerate() {
            let orig = *probe.param_mut(idx);
            *probe.param_mut(idx) = orig + FD_STEP;
            let lp = probe.loss(m);
            *probe.param_mut(idx) = orig - FD_STEP;
            let lm = probe.loss(m);
            *probe.param_mut(idx) = orig;
            let numeric = (lp - lm) / (2.0 * FD_STEP);
            let denom = a.abs().max(numeric.abs());
            if denom < 1e-10 {
                continue;
            }
            worst = worst.max((a - numeric).abs() / denom);
        }
        worst
    }

    pub fn to_json(&self) -> String {
        let f = WeightFile {
            format_version: WEIGHTS_FORMAT_VERSION,
            activation: "tanh".into(),
            input_dim: INPUT_DIM,
            params: self.clone(),
        };
        serde_json::to_string(&f).expect("weights serialize")
    }

    pub fn from_json(s: &str) -> Result<Self, I2eError> {
        let f: WeightFile = serde_json::from_str(s).map_err(|e| I2eError::Weights(e.to_string()))?;
        if f.format_version != WEIGHTS_FORMAT_VERSION {
            return Err(I2eError::Weights(format!("unsupported version {}", f.format_version)));
        }
        if f.activation != "tanh" || f.input_dim != INPUT_DIM {
            return Err(I2eError::Weights(format!(
                "expected tanh with input {INPUT_DIM}, found {} with input {}",
                f.activation, f.input_dim
            )));
        }
        f.params.validate()?;
        Ok(f.params)
    }

    pub fn save(&self, path: &Path) -> Result<(), I2eError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, I2eError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// One embedding per camera, in view order.
pub fn embed_record(p: &MlpParams, r: &EpisodeRecord) -> Result<Vec<Embedding>, I2eError> {
    r.cameras
        .iter()
        .map(|c| p.forward(image_to_ego_matrix(c)?.as_array()))
        .collect()
}

/// Mean of the per-camera embeddings.
pub fn mean_embedding(p: &MlpParams, r: &EpisodeRecord) -> Result<Vec<f64>, I2eError> {
    let all = embed_record(p, r)?;
    let mut out = vec![0.0; p.d_e];
    for e in &all {
        for (o, v) in out.iter_mut().zip(&e.0) {
            *o += v / all.len() as f64;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(seed: u64) -> [f64; INPUT_DIM] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        std::array::from_fn(|_| rng.random_range(-1.0..1.0))
    }

    #[test]
    fn init_properties() {
        let a = MlpParams::init(7, 64, 32).unwrap();
        assert_eq!(a, MlpParams::init(7, 64, 32).unwrap());
        assert!(a.b1.iter().chain(&a.b2).all(|&b| b == 0.0));
        let bound = (6.0f64 / (16.0 + 64.0)).sqrt();
        assert!(a.w1.iter().all(|w| w.abs() <= bound));
        assert!(MlpParams::init(0, 0, 4).is_err());
    }

    #[test]
    fn scalar_forward() {
        let mut p = MlpParams::init(0, 1, 1).unwrap();
        p.w1 = vec![0.0; 16];
        p.w1[0] = 1.0;
        p.w2 = vec![2.0];
        let mut m = [0.3; 16];
        m[0] = 0.5;
        let e = p.forward(&m).unwrap();
        assert!((e.0[0] - 2.0 * 0.5f64.tanh()).abs() < 1e-15);
        assert!((e.0[0] - 0.924234).abs() < 1e-6);
        m[0] = 0.0;
        p.w2 = vec![1.0];
        assert_eq!(p.forward(&m).unwrap().0, vec![0.0]);

        let mut z = p.zeros_like();
        z.b2 = vec![3.5];
        assert_eq!(z.forward(&input(1)).unwrap().0, vec![3.5]);
        m[3] = f64::NAN;
        assert!(p.forward(&m).is_err());
    }

    #[test]
    fn gradients_match_differences() {
        let p = MlpParams::init(0, 64, 32).unwrap();
        assert!(p.grad_check(&input(0)) < 1e-4);
    }

    #[test]
    fn dead_inputs_and_scaling() {
        let p = MlpParams::init(3, 8, 4).unwrap();
        let mut m = [0.0; 16];
        m[0] = 0.7;
        let (_, g) = p.half_sq_loss(&m, 1.0);
        for j in 0..8 {
            for i in 1..16 {
                assert_eq!(g.w1[j * 16 + i], 0.0);
            }
        }
        let (l1, g1) = p.half_sq_loss(&input(2), 1.0);
        let (l2, g2) = p.half_sq_loss(&input(2), 2.0);
        assert!((l2 - 2.0 * l1).abs() < 1e-12);
        for (a, b) in g1.values().zip(g2.values()) {
            assert!((b - 2.0 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn weights_roundtrip() {
        let p = MlpParams::init(5, 6, 3).unwrap();
        assert_eq!(MlpParams::from_json(&p.to_json()).unwrap(), p);
        let mut bad = p.clone();
        bad.b1.pop();
        assert!(MlpParams::from_json(&bad.to_json()).is_err());
    }
}
