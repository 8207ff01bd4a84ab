//! Deterministic synthetic scenes with analytically exact depth.
//!
//! World frame: the ground plane is `z = 0` with `+z` pointing towards the
//! cameras. View 0 sits on the `z` axis at height `target_distance_mm`
//! looking straight down; the remaining views sit on a ring of radius
//! `ring_radius_mm` at the same height, all looking at the origin.

use std::path::Path;

use image::{Rgb, RgbImage};
use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use crate::dataio::{write_scene, DepthMapBuffer, PairTable, Scene, SourceRef, View};
use crate::error::{Error, Result};
use crate::geometry::{Camera, CameraIntrinsics, CameraPose};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Shape {
    TexturedPlane,
    SphereOnPlane,
}

impl std::str::FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "textured_plane" => Ok(Shape::TexturedPlane),
            "sphere_on_plane" => Ok(Shape::SphereOnPlane),
            _ => Err(Error::Config(format!(
                "unknown shape {s:?} (expected textured_plane or sphere_on_plane)"
            ))),
        }
    }
}

impl std::fmt::Display for Shape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Shape::TexturedPlane => "textured_plane",
            Shape::SphereOnPlane => "sphere_on_plane",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub shape: Shape,
    /// Albedo contrast in [0, 1]; 0 gives a constant albedo.
    pub texture_strength: f64,
    pub n_views: usize,
    pub image_size: (usize, usize),
    pub ring_radius_mm: f64,
    pub target_distance_mm: f64,
    pub sphere_radius_mm: f64,
    pub fov_x_deg: f64,
    /// Stage-1 hypothesis count used to derive each camera's depth interval.
    pub n_hypotheses: usize,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        SceneSpec {
            shape: Shape::TexturedPlane,
            texture_strength: 1.0,
            n_views: 5,
            image_size: (160, 128),
            ring_radius_mm: 300.0,
            target_distance_mm: 1000.0,
            sphere_radius_mm: 150.0,
            fov_x_deg: 50.0,
            n_hypotheses: 48,
            seed: 0,
        }
    }
}

/// Lattice spacings (mm) and weights of the albedo noise octaves.
const OCTAVES: [(f64, f64); 3] = [(80.0, 0.5), (40.0, 0.3), (20.0, 0.2)];
/// Albedo excursion around 0.5 at full texture strength.
const CONTRAST: f64 = 1.6;
/// Sub-pixel samples per axis for anti-aliased shading.
const SUPERSAMPLE: usize = 3;
/// Margin applied to the observed depth range when writing cameras.
const DEPTH_MARGIN: f64 = 0.2;
/// Hypothesis interval multiplier of the first cascade stage.
const STAGE1_INTERVAL_FACTOR: f64 = 4.0;

fn light_dir() -> Vector3<f64> {
    Vector3::new(0.3, -0.4, 1.0).normalize()
}

#[derive(Debug, Clone, Copy)]
struct Hit {
    depth: f64,
    point: Vector3<f64>,
    normal: Vector3<f64>,
}

/// Analytic scene plus its camera rig.
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    poses: Vec<CameraPose>,
    intrinsics: CameraIntrinsics,
}

impl SyntheticScene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        let (w, h) = spec.image_size;
        if spec.n_views < 2 {
            return Err(Error::Config(format!("n_views must be >= 2, got {}", spec.n_views)));
        }
        if !(0.0..=1.0).contains(&spec.texture_strength) {
            return Err(Error::Config(format!(
                "texture_strength must be in [0, 1], got {}",
                spec.texture_strength
            )));
        }
        if w < 32 || h < 32 {
            return Err(Error::Config(format!("image size must be at least 32x32, got {w}x{h}")));
        }
        if !(spec.target_distance_mm > 0.0) || !(spec.ring_radius_mm >= 0.0) {
            return Err(Error::Config("cameras must sit above the ground plane".into()));
        }
        if !(spec.fov_x_deg > 0.0 && spec.fov_x_deg < 170.0) {
            return Err(Error::Config(format!("fov_x_deg out of range: {}", spec.fov_x_deg)));
        }
        if spec.n_hypotheses < 2 {
            return Err(Error::Config("n_hypotheses must be >= 2".into()));
        }
        let fx = (w as f64 / 2.0) / (spec.fov_x_deg.to_radians() / 2.0).tan();
        let intrinsics = CameraIntrinsics::new(fx, fx, (w as f64 - 1.0) / 2.0, (h as f64 - 1.0) / 2.0, w, h)?;
        let down = Vector3::new(0.0, -1.0, 0.0);
        let mut poses = Vec::with_capacity(spec.n_views);
        for i in 0..spec.n_views {
            let center = if i == 0 {
                Vector3::new(0.0, 0.0, spec.target_distance_mm)
            } else {
                let a = std::f64::consts::TAU * (i - 1) as f64 / (spec.n_views - 1) as f64;
                Vector3::new(
                    spec.ring_radius_mm * a.cos(),
                    spec.ring_radius_mm * a.sin(),
                    spec.target_distance_mm,
                )
            };
            poses.push(CameraPose::look_at(center, Vector3::zeros(), down)?);
        }
        let scene = SyntheticScene {
            spec,
            poses,
            intrinsics,
        };
        if scene.spec.shape == Shape::SphereOnPlane {
            if !(scene.spec.sphere_radius_mm > 0.0) {
                return Err(Error::Config("sphere_radius_mm must be > 0".into()));
            }
            let c = scene.sphere_center();
            for (i, p) in scene.poses.iter().enumerate() {
                if (p.center() - c).norm() <= scene.spec.sphere_radius_mm {
                    return Err(Error::Config(format!("camera {i} lies inside the sphere")));
                }
            }
        }
        Ok(scene)
    }

    fn sphere_center(&self) -> Vector3<f64> {
        Vector3::new(0.0, 0.0, self.spec.sphere_radius_mm)
    }

    pub fn intrinsics(&self) -> CameraIntrinsics {
        self.intrinsics
    }

    pub fn pose(&self, view: usize) -> CameraPose {
        self.poses[view]
    }

    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        if dir.z < 0.0 && origin.z > 0.0 {
            let t = -origin.z / dir.z;
            best = Some(Hit {
                depth: t,
                point: origin + dir * t,
                normal: Vector3::z(),
            });
        }
        if self.spec.shape == Shape::SphereOnPlane {
            let c = self.sphere_center();
            let r = self.spec.sphere_radius_mm;
            let oc = origin - c;
            let a = dir.norm_squared();
            let b = dir.dot(&oc);
            let cc = oc.norm_squared() - r * r;
            let disc = b * b - a * cc;
            if disc >= 0.0 {
                let t = (-b - disc.sqrt()) / a;
                if t > 0.0 && best.map_or(true, |h| t < h.depth) {
                    let point = origin + dir * t;
                    best = Some(Hit {
                        depth: t,
                        point,
                        normal: (point - c) / r,
                    });
                }
            }
        }
        best
    }

    /// Ray through a pixel with unit camera-frame z, so the hit parameter
    /// equals the camera-frame depth.
    fn ray(&self, pose: &CameraPose, u: f64, v: f64) -> (Vector3<f64>, Vector3<f64>) {
        let k = &self.intrinsics;
        let dir_cam = Vector3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
        (pose.center(), pose.rotation.transpose() * dir_cam)
    }

    /// Analytic camera-frame depth at a (sub)pixel of a view.
    pub fn depth_at(&self, view: usize, pixel: &Vector2<f64>) -> Option<f64> {
        let (o, d) = self.ray(&self.poses[view], pixel.x, pixel.y);
        self.intersect(&o, &d).map(|h| h.depth)
    }

    /// Distance from a world point to the analytic surface.
    pub fn surface_distance(&self, p: &Vector3<f64>) -> f64 {
        let plane = p.z.abs();
        match self.spec.shape {
            Shape::TexturedPlane => plane,
            Shape::SphereOnPlane => plane.min(((p - self.sphere_center()).norm() - self.spec.sphere_radius_mm).abs()),
        }
    }

    fn albedo(&self, p: &Vector3<f64>) -> f64 {
        if self.spec.texture_strength == 0.0 {
            return 0.5;
        }
        let total: f64 = OCTAVES.iter().map(|o| o.1).sum();
        let n: f64 = OCTAVES
            .iter()
            .enumerate()
            .map(|(i, &(spacing, weight))| weight * value_noise(self.spec.seed, i as u64, &(p / spacing)))
            .sum::<f64>()
            / total;
        (0.5 + self.spec.texture_strength * CONTRAST * (n - 0.5)).clamp(0.02, 0.98)
    }

    fn radiance(&self, hit: &Hit) -> f64 {
        let shade = 0.35 + 0.65 * hit.normal.dot(&light_dir()).max(0.0);
        self.albedo(&hit.point) * shade
    }

    /// Image and ground-truth depth of one view.
    pub fn render(&self, view: usize) -> (RgbImage, DepthMapBuffer) {
        let (w, h) = self.spec.image_size;
        let pose = self.poses[view];
        let rows: Vec<(Vec<[u8; 3]>, Vec<f32>)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let mut colors = Vec::with_capacity(w);
                let mut depths = Vec::with_capacity(w);
                for x in 0..w {
                    let (o, d) = self.ray(&pose, x as f64, y as f64);
                    depths.push(self.intersect(&o, &d).map_or(0.0, |hit| hit.depth as f32));
                    let mut acc = 0.0;
                    for sy in 0..SUPERSAMPLE {
                        for sx in 0..SUPERSAMPLE {
                            let u = x as f64 - 0.5 + (sx as f64 + 0.5) / SUPERSAMPLE as f64;
                            let v = y as f64 - 0.5 + (sy as f64 + 0.5) / SUPERSAMPLE as f64;
                            let (o, d) = self.ray(&pose, u, v);
                            acc += self.intersect(&o, &d).map_or(0.0, |hit| self.radiance(&hit));
                        }
                    }
                    let g = acc / (SUPERSAMPLE * SUPERSAMPLE) as f64;
                    let q = |tint: f64| (g * tint * 255.0).round().clamp(0.0, 255.0) as u8;
                    colors.push([q(1.0), q(0.96), q(0.9)]);
                }
                (colors, depths)
            })
            .collect();
        let mut img = RgbImage::new(w as u32, h as u32);
        let mut depth = Vec::with_capacity(w * h);
        for (y, (colors, depths)) in rows.into_iter().enumerate() {
            for (x, c) in colors.into_iter().enumerate() {
                img.put_pixel(x as u32, y as u32, Rgb(c));
            }
            depth.extend(depths);
        }
        let depth = DepthMapBuffer::from_values(w, h, depth).expect("rendered depths are finite and non-negative");
        (img, depth)
    }

    /// Camera with a depth range bracketing the observed depths.
    fn camera_for(&self, view: usize, gt: &DepthMapBuffer) -> Result<Camera> {
        let valid = gt.values().iter().filter(|v| **v > 0.0);
        let (lo, hi) = valid.fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v as f64), hi.max(v as f64)));
        if !lo.is_finite() {
            return Err(Error::Config(format!("view {view} sees no surface")));
        }
        let depth_min = (1.0 - DEPTH_MARGIN) * lo;
        let depth_max = (1.0 + DEPTH_MARGIN) * hi;
        let interval = (depth_max - depth_min) / (STAGE1_INTERVAL_FACTOR * (self.spec.n_hypotheses - 1) as f64);
        Camera::new(self.intrinsics, self.poses[view], depth_min, interval)
    }

    /// Sources ranked by the angle between viewing directions.
    pub fn pair_table(&self) -> PairTable {
        let dirs: Vec<Vector3<f64>> = self.poses.iter().map(|p| p.view_direction()).collect();
        let sources = (0..dirs.len())
            .map(|i| {
                let mut list: Vec<SourceRef> = (0..dirs.len())
                    .filter(|&j| j != i)
                    .map(|j| SourceRef {
                        view: j,
                        score: dirs[i].dot(&dirs[j]).clamp(-1.0, 1.0),
                    })
                    .collect();
                list.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.view.cmp(&b.view)));
                list
            })
            .collect();
        PairTable { sources }
    }

    /// Renders every view into an in-memory scene.
    pub fn build(&self) -> Result<Scene> {
        let mut views = Vec::with_capacity(self.spec.n_views);
        for i in 0..self.spec.n_views {
            let (image, gt) = self.render(i);
            let camera = self.camera_for(i, &gt)?;
            views.push(View::new(image, camera, Some(gt), None)?);
        }
        Scene::new(views, self.pair_table())
    }
}

/// Seeded value noise on the integer lattice, trilinearly interpolated
/// with a smoothstep fade. Values in [0, 1].
fn value_noise(seed: u64, octave: u64, p: &Vector3<f64>) -> f64 {
    let base = p.map(f64::floor);
    let f = p - base;
    let fade = |t: f64| t * t * (3.0 - 2.0 * t);
    let (fx, fy, fz) = (fade(f.x), fade(f.y), fade(f.z));
    let lattice = |dx: i64, dy: i64, dz: i64| {
        let key = ((base.x as i64 + dx) as u64).wrapping_mul(0x8da6_b343)
            ^ ((base.y as i64 + dy) as u64).wrapping_mul(0xd816_3841)
            ^ ((base.z as i64 + dz) as u64).wrapping_mul(0xcb1a_b31f);
        rng::unit_open(rng::hash3(seed, octave, key))
    };
    let lerp = |a: f64, b: f64, t: f64| a + (b - a) * t;
    let x00 = lerp(lattice(0, 0, 0), lattice(1, 0, 0), fx);
    let x10 = lerp(lattice(0, 1, 0), lattice(1, 1, 0), fx);
    let x01 = lerp(lattice(0, 0, 1), lattice(1, 0, 1), fx);
    let x11 = lerp(lattice(0, 1, 1), lattice(1, 1, 1), fx);
    lerp(lerp(x00, x10, fy), lerp(x01, x11, fy), fz)
}

/// Renders the scene, writes it to `out_dir` in the standard layout, and
/// returns it.
pub fn generate_scene(spec: &SceneSpec, out_dir: impl AsRef<Path>) -> Result<Scene> {
    let scene = SyntheticScene::new(spec.clone())?.build()?;
    write_scene(&scene, out_dir)?;
    Ok(scene)
}
