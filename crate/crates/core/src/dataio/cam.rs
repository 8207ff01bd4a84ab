//! MVSNet-style camera text files.
//!
//! ```text
//! extrinsic
//! r11 r12 r13 t1
//! r21 r22 r23 t2
//! r31 r32 r33 t3
//! 0 0 0 1
//!
//! intrinsic
//! fx 0 cx
//! 0 fy cy
//! 0 0 1
//!
//! depth_min depth_interval
//! ```
//!
//! The image size is not part of the file; callers supply it from the
//! paired image.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use super::tokens::Tokens;
use crate::error::{Error, Result};
use crate::geometry::{Camera, CameraIntrinsics, CameraPose};

const READ_ROTATION_TOL: f64 = 1e-3;

pub fn format_cam(camera: &Camera) -> String {
    let r = &camera.pose.rotation;
    let t = &camera.pose.translation;
    let k = &camera.intrinsics;
    let mut s = String::from("extrinsic\n");
    for i in 0..3 {
        s += &format!("{:?} {:?} {:?} {:?}\n", r[(i, 0)], r[(i, 1)], r[(i, 2)], t[i]);
    }
    s += "0 0 0 1\n\nintrinsic\n";
    s += &format!("{:?} 0 {:?}\n0 {:?} {:?}\n0 0 1\n\n", k.fx, k.cx, k.fy, k.cy);
    s += &format!("{:?} {:?}\n", camera.depth_min, camera.depth_interval);
    s
}

/// Nearest rotation in the Frobenius sense.
fn orthonormalize(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
    u * vt
}

pub fn parse_cam(text: &str, width: usize, height: usize, path: &Path) -> Result<Camera> {
    let mut toks = Tokens::new(text, path);
    toks.keyword("extrinsic")?;
    let ext_at = toks.offset();
    let mut e = [0.0; 16];
    for v in e.iter_mut() {
        *v = toks.f64("extrinsic entry")?;
    }
    if e[12..16] != [0.0, 0.0, 0.0, 1.0] {
        return Err(toks.error(ext_at, "extrinsic bottom row must be 0 0 0 1"));
    }
    let rot = Matrix3::new(e[0], e[1], e[2], e[4], e[5], e[6], e[8], e[9], e[10]);
    let translation = Vector3::new(e[3], e[7], e[11]);
    let orth_err = (rot.transpose() * rot - Matrix3::identity()).amax();
    let det = rot.determinant();
    if orth_err > READ_ROTATION_TOL || det <= 0.0 {
        return Err(toks.error(
            ext_at,
            format!("extrinsic rotation is not a proper rotation (orthonormality error {orth_err:e}, det {det})"),
        ));
    }
    let rotation = if orth_err > 1e-12 { orthonormalize(&rot) } else { rot };

    toks.keyword("intrinsic")?;
    let mut k = [0.0; 9];
    for v in k.iter_mut() {
        *v = toks.f64("intrinsic entry")?;
    }
    let depth_min = toks.f64("depth_min")?;
    let depth_interval = toks.f64("depth_interval")?;
    toks.finish()?;

    let intrinsics = CameraIntrinsics::new(k[0], k[4], k[2], k[5], width, height)?;
    let pose = CameraPose::new(rotation, translation)?;
    Camera::new(intrinsics, pose, depth_min, depth_interval)
}

pub fn read_cam(path: impl AsRef<Path>, width: usize, height: usize) -> Result<Camera> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cam(&text, width, height, path)
}

pub fn write_cam(camera: &Camera, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, format_cam(camera)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "cam.txt";

    #[test]
    fn parses_identity_camera() {
        let text = "extrinsic\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n\nintrinsic\n2892 0 800\n0 2892 600\n0 0 1\n\n425 2.5\n";
        let cam = parse_cam(text, 1600, 1200, Path::new(P)).unwrap();
        assert_eq!(cam.intrinsics.fx, 2892.0);
        assert_eq!(cam.intrinsics.cx, 800.0);
        assert_eq!(cam.depth_min, 425.0);
        assert_eq!(cam.depth_interval, 2.5);
        assert_eq!(cam.pose.rotation, Matrix3::identity());
    }

    #[test]
    fn rejects_reflection() {
        let text = "extrinsic\n1 0 0 0\n0 1 0 0\n0 0 -1 0\n0 0 0 1\nintrinsic\n2892 0 800\n0 2892 600\n0 0 1\n425 2.5\n";
        let err = parse_cam(text, 1600, 1200, Path::new(P)).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }), "{err}");
    }

    #[test]
    fn rejects_missing_block() {
        let text = "extrinsic\n1 0 0 0\n0 1 0 0\n0 0 1 0\n0 0 0 1\n";
        let err = parse_cam(text, 1600, 1200, Path::new(P)).unwrap_err();
        assert!(err.to_string().contains("intrinsic"), "{err}");
    }

    #[test]
    fn snaps_slightly_off_rotation() {
        let text = "extrinsic\n1 0.0001 0 5\n-0.0001 1 0 0\n0 0 1 0\n0 0 0 1\nintrinsic\n100 0 50\n0 100 50\n0 0 1\n100 1\n";
        let cam = parse_cam(text, 100, 100, Path::new(P)).unwrap();
        let r = cam.pose.rotation;
        assert!((r.transpose() * r - Matrix3::identity()).amax() < 1e-12);
    }
}
