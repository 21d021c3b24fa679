//! Converts a simulator pose and a camera rig between the left-handed
//! wheel-plane frame and the right-handed roof frame.

use sim2real::curation::CameraRig;
use sim2real::geometry::{
    compose, convert_extrinsic, convert_pose, image_to_ego_matrix, FrameConvention, Pose,
    RoofOffset,
};

fn main() {
    let (lh, rh) = (FrameConvention::LH_FRU_WHEEL, FrameConvention::RH_FLU_ROOF);
    let off = RoofOffset::default();
    let p = Pose::new(12.0, 3.5, 0.0, 0.4).unwrap();
    let q = convert_pose(p, lh, rh, off).unwrap();
    println!("{}: {p:?}", lh.name());
    println!("{}: {q:?}", rh.name());
    println!("back: {:?}", convert_pose(q, rh, lh, off).unwrap());

    let mut rng = rand::rng();
    for cam in CameraRig::CarlaLike.calibrations(None, &mut rng) {
        let in_lh = convert_extrinsic(&cam.t_cam_to_ego, rh, lh, off);
        let m = image_to_ego_matrix(&cam).unwrap();
        let err = compose(&m, &cam.intrinsic_hom()).max_abs_diff(&cam.t_cam_to_ego);
        println!(
            "{:?}: position rh {:?} lh {:?}, K round trip {err:.1e}",
            cam.name,
            cam.t_cam_to_ego.translation_part(),
            in_lh.translation_part()
        );
    }
}
