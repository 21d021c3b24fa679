mod common;

use common::real_record;
use nalgebra::DMatrix;
use proptest::prelude::*;
use sim2real::geometry::optical_extrinsic;
use sim2real::i2e::{embed_record, MlpParams, INPUT_DIM};
use sim2real::simworld::ScenarioCategory;

fn spectral_norm(rows: usize, cols: usize, w: &[f64]) -> f64 {
    DMatrix::from_row_slice(rows, cols, w)
        .singular_values()
        .iter()
        .fold(0.0, |a: f64, &b| a.max(b))
}

fn input() -> impl Strategy<Value = [f64; INPUT_DIM]> {
    prop::array::uniform16(-3.0..3.0f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_is_lipschitz(seed in any::<u64>(), d_h in 1..48usize, d_e in 1..24usize, a in input(), b in input()) {
        let p = MlpParams::init(seed, d_h, d_e).unwrap();
        let bound = spectral_norm(d_e, d_h, &p.w2) * spectral_norm(d_h, INPUT_DIM, &p.w1);
        let (ea, eb) = (p.forward(&a).unwrap().0, p.forward(&b).unwrap().0);
        let out: f64 = ea.iter().zip(&eb).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        let inp: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
        prop_assert!(out <= bound * inp * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>(), m in input()) {
        let p = MlpParams::init(seed, 16, 8).unwrap();
        prop_assert!(p.grad_check(&m) < 1e-4);
    }
}

#[test]
fn embedding_tracks_each_camera() {
    let (r, _) = real_record(ScenarioCategory::E2dCommon, 3);
    let p = MlpParams::init(7, 64, 32).unwrap();
    let base = embed_record(&p, &r).unwrap();
    for view in 0..r.cameras.len() {
        let mut moved = r.clone();
        let pos = moved.cameras[view].t_cam_to_ego.translation_part();
        moved.cameras[view].t_cam_to_ego = optical_extrinsic(0.3 + view as f64, pos);
        let e = embed_record(&p, &moved).unwrap();
        for (k, (a, b)) in base.iter().zip(&e).enumerate() {
            if k == view {
                assert_ne!(a, b, "view {view} ignored its extrinsic");
            } else {
                assert_eq!(a, b);
            }
        }
    }
}
