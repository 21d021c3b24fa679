//! Embeds both camera rigs with the image-to-ego encoder, checks its
//! gradients and saves the weights.
//!
//! Entries of the inverse intrinsics are around 1e-3 to 1e-6, so a few
//! first-layer gradients are tiny and the finite differences are limited by
//! rounding. Errors near 1e-3 on those cameras come from the check, not the
//! backward pass.

use rand::SeedableRng;
use sim2real::curation::{CameraRig, RigJitter};
use sim2real::geometry::image_to_ego_matrix;
use sim2real::i2e::{MlpParams, DEFAULT_EMBED, DEFAULT_HIDDEN};

fn main() {
    let p = MlpParams::init(0, DEFAULT_HIDDEN, DEFAULT_EMBED).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0);
    for (rig, jitter) in [(CameraRig::NuScenesLike, Some(RigJitter::default())), (CameraRig::CarlaLike, None)] {
        for cam in rig.calibrations(jitter.as_ref(), &mut rng) {
            let m = image_to_ego_matrix(&cam).unwrap();
            let e = p.forward(m.as_array()).unwrap();
            let norm = e.0.iter().map(|v| v * v).sum::<f64>().sqrt();
            println!(
                "{:<14} {:?}: |e| = {norm:.4}, grad check {:.1e}",
                rig.name(),
                cam.name,
                p.grad_check(m.as_array())
            );
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("i2e.json");
    p.save(&path).unwrap();
    assert_eq!(MlpParams::load(&path).unwrap(), p);
}
