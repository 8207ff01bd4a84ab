//! Galliani-style consistency fusion of per-view depth maps.
//!
//! Reference views are swept in ascending id. Each confident reference
//! pixel is checked against every other view by a forward and backward
//! reprojection; if enough views agree, the average of the agreeing 3D
//! estimates is emitted and every pixel that took part is marked visited
//! so that later views do not emit it again.

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;

use crate::dataio::{DepthMapBuffer, Scene};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::pipeline::DepthEstimate;

/// Unordered points in millimetres with optional per-point colors.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub colors: Option<Vec<[u8; 3]>>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams {
    /// Source views that must agree, not counting the reference.
    pub min_consistent_views: usize,
    pub max_reproj_px: f64,
    pub max_rel_depth_diff: f64,
    pub min_confidence: f64,
}

impl Default for FusionParams {
    fn default() -> Self {
        FusionParams {
            min_consistent_views: 3,
            max_reproj_px: 1.0,
            max_rel_depth_diff: 0.01,
            min_confidence: 0.1,
        }
    }
}

impl FusionParams {
    pub fn validate(&self) -> Result<()> {
        if self.min_consistent_views < 1 {
            return Err(Error::Config("min_consistent_views must be >= 1".into()));
        }
        if !(self.max_reproj_px > 0.0) || !(self.max_rel_depth_diff > 0.0) {
            return Err(Error::Config("fusion thresholds must be > 0".into()));
        }
        if !(self.min_confidence >= 0.0) {
            return Err(Error::Config("min_confidence must be >= 0".into()));
        }
        Ok(())
    }
}

/// Backprojects every valid pixel of a depth map.
pub fn depth_to_cloud(depth: &DepthMapBuffer, camera: &Camera) -> Result<PointCloud> {
    if (depth.width(), depth.height()) != (camera.width(), camera.height()) {
        return Err(Error::Dimension("depth map and camera disagree".into()));
    }
    let mut points = Vec::with_capacity(depth.valid_count());
    for y in 0..depth.height() {
        for x in 0..depth.width() {
            let d = depth.get(x, y) as f64;
            if d > 0.0 {
                let p = camera.backproject(&Vector2::new(x as f64, y as f64), d)?;
                points.push([p.x, p.y, p.z]);
            }
        }
    }
    Ok(PointCloud { points, colors: None })
}

/// A fusion input: depth, confidence and camera at matching resolution.
struct Input<'a> {
    depth: &'a DepthMapBuffer,
    confidence: &'a [f32],
    camera: Camera,
    scale: usize,
}

struct Candidate {
    pixel: usize,
    /// Reference backprojection first, then one entry per agreeing view.
    members: Vec<(usize, usize, Vector3<f64>)>,
}

fn nearest_pixel(p: &Vector2<f64>, w: usize, h: usize) -> Option<usize> {
    let (x, y) = (p.x.round(), p.y.round());
    if x < 0.0 || y < 0.0 || x > (w - 1) as f64 || y > (h - 1) as f64 {
        return None;
    }
    Some(y as usize * w + x as usize)
}

fn check_view(
    r: &Input<'_>,
    s: &Input<'_>,
    u: f64,
    v: f64,
    world: &Vector3<f64>,
    params: &FusionParams,
) -> Option<(usize, Vector3<f64>)> {
    let (q, expected) = s.camera.project(world).ok()?;
    let (sw, sh) = (s.depth.width(), s.depth.height());
    let qi = nearest_pixel(&q, sw, sh)?;
    let ds = s.depth.values()[qi] as f64;
    if ds <= 0.0 || (ds - expected).abs() / expected > params.max_rel_depth_diff {
        return None;
    }
    let qpix = Vector2::new((qi % sw) as f64, (qi / sw) as f64);
    let back = s.camera.backproject(&qpix, ds).ok()?;
    let (p2, _) = r.camera.project(&back).ok()?;
    if (p2 - Vector2::new(u, v)).norm() > params.max_reproj_px {
        return None;
    }
    Some((qi, back))
}

/// Fuses one estimate per scene view into a point cloud.
pub fn fuse(estimates: &[DepthEstimate], scene: &Scene, params: &FusionParams) -> Result<PointCloud> {
    params.validate()?;
    if estimates.len() != scene.len() {
        return Err(Error::Config(format!(
            "{} depth estimates for a scene of {} views",
            estimates.len(),
            scene.len()
        )));
    }
    let mut inputs = Vec::with_capacity(estimates.len());
    for (i, e) in estimates.iter().enumerate() {
        if e.view != i {
            return Err(Error::Config(format!("estimate {i} belongs to view {}", e.view)));
        }
        let scale = e.final_scale();
        let camera = scene.views[i].camera.downscaled(scale)?;
        if (e.depth.width(), e.depth.height()) != (camera.width(), camera.height())
            || (e.confidence.width, e.confidence.height) != (camera.width(), camera.height())
        {
            return Err(Error::Dimension(format!("estimate {i} does not match its camera at scale {scale}")));
        }
        inputs.push(Input {
            depth: &e.depth,
            confidence: &e.confidence.data,
            camera,
            scale,
        });
    }

    let mut visited: Vec<Vec<bool>> = inputs.iter().map(|i| vec![false; i.depth.values().len()]).collect();
    let mut cloud = PointCloud {
        points: Vec::new(),
        colors: Some(Vec::new()),
    };
    for (ri, r) in inputs.iter().enumerate() {
        let w = r.depth.width();
        let seen = &visited;
        let candidates: Vec<Candidate> = (0..r.depth.values().len())
            .into_par_iter()
            .filter_map(|pix| {
                let d = r.depth.values()[pix] as f64;
                if seen[ri][pix] || d <= 0.0 || (r.confidence[pix] as f64) < params.min_confidence {
                    return None;
                }
                let (u, v) = ((pix % w) as f64, (pix / w) as f64);
                let world = r.camera.backproject(&Vector2::new(u, v), d).ok()?;
                let mut members = vec![(ri, pix, world)];
                for (si, s) in inputs.iter().enumerate() {
                    if si == ri {
                        continue;
                    }
                    if let Some((qi, back)) = check_view(r, s, u, v, &world, params) {
                        if !seen[si][qi] {
                            members.push((si, qi, back));
                        }
                    }
                }
                (members.len() > params.min_consistent_views).then_some(Candidate { pixel: pix, members })
            })
            .collect();

        // Serial claim pass so that no pixel feeds two points.
        let image = &scene.views[ri].image;
        for c in candidates {
            let members: Vec<_> = c.members.into_iter().filter(|(v, p, _)| !visited[*v][*p]).collect();
            if members.len() <= params.min_consistent_views || members[0].0 != ri {
                continue;
            }
            let mut sum = Vector3::zeros();
            for (v, p, x) in &members {
                visited[*v][*p] = true;
                sum += x;
            }
            let mean = sum / members.len() as f64;
            cloud.points.push([mean.x, mean.y, mean.z]);
            let (x, y) = (c.pixel % w, c.pixel / w);
            let (ix, iy) = (
                (x * r.scale + r.scale / 2).min(image.width() as usize - 1),
                (y * r.scale + r.scale / 2).min(image.height() as usize - 1),
            );
            let px = image.get_pixel(ix as u32, iy as u32).0;
            cloud.colors.as_mut().expect("colors").push(px);
        }
    }
    Ok(cloud)
}
