//! Guided sparse-to-dense depth propagation.
//!
//! Each output pixel is a normalized weighted sum over its `k×k` window,
//! `d(p) = (1/z_p) Σ_q d(q) w(p, q)`, where the weights are joint-bilateral
//! in the guide intensity and image distance and are zero for missing `q`.

use rayon::prelude::*;

use crate::dataio::DepthMapBuffer;
use crate::error::{Error, Result};
use crate::raster::Plane;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationParams {
    pub window: usize,
    /// Intensity scale in [0, 1] units.
    pub sigma_color: f64,
    /// Spatial scale in pixels.
    pub sigma_spatial: f64,
}

impl Default for PropagationParams {
    fn default() -> Self {
        PropagationParams {
            window: 3,
            sigma_color: 0.1,
            sigma_spatial: 1.5,
        }
    }
}

impl PropagationParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::Config(format!("window must be odd and >= 3, got {}", self.window)));
        }
        if !(self.sigma_color > 0.0) || !(self.sigma_spatial > 0.0) {
            return Err(Error::Config("propagation sigmas must be > 0".into()));
        }
        Ok(())
    }
}

/// Places a strided sparse map at coordinates `(stride·i, stride·j)` of a
/// `width × height` map; everything else is missing.
pub fn expand_sparse(sparse: &DepthMapBuffer, stride: usize, width: usize, height: usize) -> DepthMapBuffer {
    DepthMapBuffer::from_fn(width, height, |x, y| {
        if x % stride == 0 && y % stride == 0 && x / stride < sparse.width() && y / stride < sparse.height() {
            sparse.get(x / stride, y / stride)
        } else {
            0.0
        }
    })
}

pub fn propagate(sparse: &DepthMapBuffer, guide: &Plane, params: &PropagationParams) -> Result<DepthMapBuffer> {
    params.validate()?;
    let (w, h) = (sparse.width(), sparse.height());
    if (guide.width, guide.height) != (w, h) {
        return Err(Error::Dimension(format!(
            "depth map is {w}x{h}, guide is {}x{}",
            guide.width, guide.height
        )));
    }
    let r = (params.window / 2) as isize;
    let inv_color = 1.0 / (2.0 * params.sigma_color * params.sigma_color);
    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| (-((dx * dx + dy * dy) as f64) / (2.0 * params.sigma_spatial * params.sigma_spatial)).exp())
        .collect();
    let values: Vec<f32> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            let ip = guide.get(x as usize, y as usize) as f64;
            let (mut num, mut z) = (0.0f64, 0.0f64);
            let mut k = 0;
            for dy in -r..=r {
                for dx in -r..=r {
                    let (qx, qy) = (x + dx, y + dy);
                    let ws = spatial[k];
                    k += 1;
                    if qx < 0 || qy < 0 || qx >= w as isize || qy >= h as isize {
                        continue;
                    }
                    let d = sparse.get(qx as usize, qy as usize);
                    if d <= 0.0 {
                        continue;
                    }
                    let di = guide.get(qx as usize, qy as usize) as f64 - ip;
                    let wgt = (-di * di * inv_color).exp() * ws;
                    num += d as f64 * wgt;
                    z += wgt;
                }
            }
            if z > 0.0 {
                (num / z) as f32
            } else {
                0.0
            }
        })
        .collect();
    DepthMapBuffer::from_values(w, h, values)
}
