//! Pinhole cameras and cross-view reprojection.
//!
//! Conventions used throughout the crate:
//! - depth is the camera-frame `z` coordinate (not the ray length), in millimetres;
//! - the pose maps world to camera coordinates, `X_cam = R * X_world + t`;
//! - pixel centers sit at integer coordinates with the origin at the top-left
//!   pixel, `x` to the right and `y` down.

use nalgebra::{Matrix3, Vector2, Vector3};

use crate::error::{Error, Result};

const ROTATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let k = CameraIntrinsics {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0 && self.fx.is_finite() && self.fy.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::InvalidCamera(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Intrinsics of the image box-downsampled by an integer `factor`.
    ///
    /// With pixel centers at integer coordinates, a full-resolution coordinate
    /// `u` maps to `(u + 0.5) / factor - 0.5`.
    pub fn downscaled(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.width % factor != 0 || self.height % factor != 0 {
            return Err(Error::Dimension(format!(
                "{}x{} image is not divisible by scale {}",
                self.width, self.height, factor
            )));
        }
        let s = factor as f64;
        CameraIntrinsics::new(
            self.fx / s,
            self.fy / s,
            (self.cx + 0.5) / s - 0.5,
            (self.cy + 0.5) / s - 0.5,
            self.width / factor,
            self.height / factor,
        )
    }
}

/// Rigid world-to-camera transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl CameraPose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let orth = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let det = rotation.determinant();
        if orth > ROTATION_TOL || (det - 1.0).abs() > ROTATION_TOL {
            return Err(Error::InvalidCamera(format!(
                "rotation is not a proper orthonormal matrix (|RtR - I| = {orth:e}, det = {det})"
            )));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidCamera("non-finite translation".into()));
        }
        Ok(CameraPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        CameraPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Pose of a camera at `center` looking at `target`; `down_hint` is the
    /// world direction that should appear as image-down.
    pub fn look_at(center: Vector3<f64>, target: Vector3<f64>, down_hint: Vector3<f64>) -> Result<Self> {
        let forward = (target - center)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("camera center coincides with its target".into()))?;
        let right = down_hint
            .cross(&forward)
            .try_normalize(1e-12)
            .ok_or_else(|| Error::InvalidCamera("down hint is parallel to the viewing direction".into()))?;
        let down = forward.cross(&right);
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        CameraPose::new(rotation, -(rotation * center))
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Vector3<f64> {
        -(self.rotation.transpose() * self.translation)
    }

    /// Unit viewing direction (camera `+z`) in world coordinates.
    pub fn view_direction(&self) -> Vector3<f64> {
        self.rotation.row(2).transpose()
    }
}

/// A calibrated view: intrinsics, pose and the depth sampling range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub intrinsics: CameraIntrinsics,
    pub pose: CameraPose,
    pub depth_min: f64,
    pub depth_interval: f64,
}

impl Camera {
    pub fn new(intrinsics: CameraIntrinsics, pose: CameraPose, depth_min: f64, depth_interval: f64) -> Result<Self> {
        intrinsics.validate()?;
        if !(depth_min > 0.0 && depth_interval > 0.0 && depth_min.is_finite() && depth_interval.is_finite()) {
            return Err(Error::InvalidCamera(format!(
                "depth range must be positive (depth_min={depth_min}, depth_interval={depth_interval})"
            )));
        }
        Ok(Camera {
            intrinsics,
            pose,
            depth_min,
            depth_interval,
        })
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    /// The same camera observing a box-downsampled image.
    pub fn downscaled(&self, factor: usize) -> Result<Self> {
        Ok(Camera {
            intrinsics: self.intrinsics.downscaled(factor)?,
            ..*self
        })
    }

    pub fn to_camera_frame(&self, point: &Vector3<f64>) -> Vector3<f64> {
        self.pose.rotation * point + self.pose.translation
    }

    pub fn project(&self, point: &Vector3<f64>) -> Result<(Vector2<f64>, f64)> {
        let pc = self.to_camera_frame(point);
        if pc.z <= 0.0 {
            return Err(Error::BehindCamera { z: pc.z });
        }
        let k = &self.intrinsics;
        Ok((Vector2::new(k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy), pc.z))
    }

    pub fn backproject(&self, pixel: &Vector2<f64>, depth: f64) -> Result<Vector3<f64>> {
        if !(depth > 0.0) || !depth.is_finite() {
            return Err(Error::InvalidDepth(format!("{depth} (must be > 0)")));
        }
        let k = &self.intrinsics;
        let pc = Vector3::new((pixel.x - k.cx) / k.fx * depth, (pixel.y - k.cy) / k.fy * depth, depth);
        Ok(self.pose.rotation.transpose() * (pc - self.pose.translation))
    }

    /// True if the pixel can be bilinearly sampled (all four taps inside).
    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x >= 0.0
            && pixel.y >= 0.0
            && pixel.x <= (self.width() - 1) as f64
            && pixel.y <= (self.height() - 1) as f64
    }
}

/// Result of mapping a reference pixel into a source view.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reprojection {
    pub pixel: Vector2<f64>,
    pub depth: f64,
    /// False when `pixel` falls outside the source image; callers decide
    /// whether that matters.
    pub in_bounds: bool,
}

pub fn reproject(reference: &Camera, source: &Camera, pixel: &Vector2<f64>, depth: f64) -> Result<Reprojection> {
    let world = reference.backproject(pixel, depth)?;
    let (src_pixel, src_depth) = source.project(&world)?;
    Ok(Reprojection {
        pixel: src_pixel,
        depth: src_depth,
        in_bounds: source.contains(&src_pixel),
    })
}

/// Precomputed reference-to-source mapping for fronto-parallel depth planes.
///
/// A reference pixel `p = (u, v, 1)` at depth `d` lands at the homogeneous
/// source coordinate `d * A p + b`, with `A = K_s R_rel K_r^-1` and
/// `b = K_s t_rel`.
#[derive(Debug, Clone, Copy)]
pub struct PlaneSweep {
    a: Matrix3<f64>,
    b: Vector3<f64>,
}

impl PlaneSweep {
    pub fn new(reference: &Camera, source: &Camera) -> Self {
        let r_rel = source.pose.rotation * reference.pose.rotation.transpose();
        let t_rel = source.pose.translation - r_rel * reference.pose.translation;
        let ks = source.intrinsics.matrix();
        PlaneSweep {
            a: ks * r_rel * reference.intrinsics.inverse_matrix(),
            b: ks * t_rel,
        }
    }

    /// Ray terms for a reference pixel; reuse across hypotheses.
    #[inline]
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        self.a * Vector3::new(u, v, 1.0)
    }

    /// Source pixel and source depth for a precomputed ray at depth `depth`.
    /// Returns `None` when the point is not in front of the source camera.
    #[inline]
    pub fn map_ray(&self, ray: &Vector3<f64>, depth: f64) -> Option<(f64, f64, f64)> {
        let h = ray * depth + self.b;
        if h.z <= 0.0 {
            return None;
        }
        Some((h.x / h.z, h.y / h.z, h.z))
    }

    #[inline]
    pub fn map(&self, u: f64, v: f64, depth: f64) -> Option<(f64, f64, f64)> {
        self.map_ray(&self.ray(u, v), depth)
    }

    /// Source pixel and its analytic derivative with respect to the
    /// reference depth: `d/dd (a d + b) / (c d + e) = (a e - b c) / (c d + e)^2`.
    #[inline]
    pub fn map_with_derivative(&self, u: f64, v: f64, depth: f64) -> Option<([f64; 2], [f64; 2])> {
        let ray = self.ray(u, v);
        let w = ray.z * depth + self.b.z;
        if w <= 0.0 {
            return None;
        }
        let x = ray.x * depth + self.b.x;
        let y = ray.y * depth + self.b.y;
        let w2 = w * w;
        Some((
            [x / w, y / w],
            [(ray.x * self.b.z - self.b.x * ray.z) / w2, (ray.y * self.b.z - self.b.y * ray.z) / w2],
        ))
    }
}
