mod common;

use common::camera_strategy;
use depthprior::geometry::{reproject, Camera, CameraPose, PlaneSweep};
use nalgebra::{Rotation3, Vector2, Vector3};
use proptest::prelude::*;

/// A second camera near `cam`, looking roughly the same way.
fn neighbour(cam: &Camera, shift: [f64; 3], angles: [f64; 3]) -> Camera {
    let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner() * cam.pose.rotation;
    let center = cam.pose.center() + Vector3::from(shift);
    let pose = CameraPose::new(r, -r * center).unwrap();
    Camera::new(cam.intrinsics, pose, cam.depth_min, cam.depth_interval).unwrap()
}

fn pixel_in(cam: &Camera, fx: f64, fy: f64) -> Vector2<f64> {
    Vector2::new(fx * (cam.width() - 1) as f64, fy * (cam.height() - 1) as f64)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn project_inverts_backproject(cam in camera_strategy(), fx in 0.0f64..1.0, fy in 0.0f64..1.0, d in 1.0f64..1e4) {
        let p = pixel_in(&cam, fx, fy);
        let (q, z) = cam.project(&cam.backproject(&p, d).unwrap()).unwrap();
        prop_assert!((q - p).norm() <= 1e-6);
        prop_assert!((z - d).abs() <= 1e-6 * d.max(1.0));
    }

    #[test]
    fn self_reprojection_is_identity(cam in camera_strategy(), fx in 0.0f64..1.0, fy in 0.0f64..1.0, d in 1.0f64..1e4) {
        let p = pixel_in(&cam, fx, fy);
        let r = reproject(&cam, &cam, &p, d).unwrap();
        prop_assert!((r.pixel - p).norm() <= 1e-9);
        prop_assert!(r.in_bounds);
    }

    #[test]
    fn reprojection_round_trip(
        cam in camera_strategy(),
        shift in prop::array::uniform3(-200.0f64..200.0),
        angles in prop::array::uniform3(-0.3f64..0.3),
        fx in 0.0f64..1.0, fy in 0.0f64..1.0, d in 300.0f64..3000.0,
    ) {
        let src = neighbour(&cam, shift, angles);
        let p = pixel_in(&cam, fx, fy);
        let Ok(there) = reproject(&cam, &src, &p, d) else { return Ok(()) };
        let back = reproject(&src, &cam, &there.pixel, there.depth).unwrap();
        prop_assert!((back.pixel - p).norm() <= 1e-5);
        prop_assert!((back.depth - d).abs() <= 1e-5 * d);
    }

    #[test]
    fn sweep_matches_reproject_and_finite_differences(
        cam in camera_strategy(),
        shift in prop::array::uniform3(-200.0f64..200.0),
        angles in prop::array::uniform3(-0.3f64..0.3),
        fx in 0.0f64..1.0, fy in 0.0f64..1.0, d in 300.0f64..3000.0,
    ) {
        let src = neighbour(&cam, shift, angles);
        let p = pixel_in(&cam, fx, fy);
        let sweep = PlaneSweep::new(&cam, &src);
        let h = 0.01;
        let (Ok(r), Some((q, dq)), Some(lo), Some(hi)) = (
            reproject(&cam, &src, &p, d),
            sweep.map_with_derivative(p.x, p.y, d),
            sweep.map(p.x, p.y, d - h),
            sweep.map(p.x, p.y, d + h),
        ) else {
            return Ok(());
        };
        prop_assert!((r.pixel - Vector2::new(q[0], q[1])).norm() <= 1e-6 * (1.0 + r.pixel.norm()));
        let fd = Vector2::new((hi.0 - lo.0) / (2.0 * h), (hi.1 - lo.1) / (2.0 * h));
        let an = Vector2::new(dq[0], dq[1]);
        prop_assert!((fd - an).norm() <= 1e-4 * an.norm().max(1e-9), "fd {fd:?} analytic {an:?}");
    }
}

#[test]
fn depth_zero_is_rejected() {
    let cam = Camera::new(
        depthprior::geometry::CameraIntrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap(),
        CameraPose::identity(),
        500.0,
        1.0,
    )
    .unwrap();
    assert!(matches!(
        reproject(&cam, &cam, &Vector2::new(1.0, 1.0), 0.0),
        Err(depthprior::Error::InvalidDepth(_))
    ));
}
