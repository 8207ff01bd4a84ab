//! Low-quality "sensor" depth synthesized from ground truth.
//!
//! The ground truth is box-downsampled, converted to disparity with a
//! virtual stereo rig of baseline `b` and focal length `f`, perturbed by
//! Gaussian disparity noise plus a constant half-pixel offset, and
//! converted back:
//!
//! ```text
//! d_corrupted = b f / (b f / d_down + n + 0.5),   n ~ N(0, sigma_d^2)
//! ```

use rayon::prelude::*;

use crate::dataio::DepthMapBuffer;
use crate::error::{Error, Result};
use crate::rng;

/// Image width that `focal_px` refers to.
pub const REFERENCE_WIDTH: f64 = 1600.0;

/// Denominators at or below this value produce a missing pixel.
pub const MIN_DISPARITY: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionParams {
    /// Virtual stereo baseline in millimetres.
    pub baseline_mm: f64,
    /// Focal length in pixels for a 1600 px wide depth map; rescaled by
    /// `width / 1600` for other input widths.
    pub focal_px: f64,
    /// Standard deviation of the disparity noise, pixels.
    pub sigma_d: f64,
    /// Box-downsampling factor applied before the noise.
    pub downsample: usize,
    pub seed: u64,
}

impl Default for CorruptionParams {
    fn default() -> Self {
        CorruptionParams {
            baseline_mm: 100.0,
            focal_px: 2892.0,
            sigma_d: 1.0 / 6.0,
            downsample: 4,
            seed: 0,
        }
    }
}

impl CorruptionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.baseline_mm > 0.0 && self.baseline_mm.is_finite()) {
            return Err(Error::Config(format!("baseline_mm must be > 0, got {}", self.baseline_mm)));
        }
        if !(self.focal_px > 0.0 && self.focal_px.is_finite()) {
            return Err(Error::Config(format!("focal_px must be > 0, got {}", self.focal_px)));
        }
        if !(self.sigma_d >= 0.0 && self.sigma_d.is_finite()) {
            return Err(Error::Config(format!("sigma_d must be >= 0, got {}", self.sigma_d)));
        }
        if self.downsample < 1 {
            return Err(Error::Config("downsample must be >= 1".into()));
        }
        Ok(())
    }

    /// `b * f` in pixel-millimetres for an input map of the given width.
    pub fn baseline_focal(&self, input_width: usize) -> f64 {
        self.baseline_mm * self.focal_px * input_width as f64 / REFERENCE_WIDTH
    }
}

/// Mean of the valid (non-zero) depths in each `factor`×`factor` block;
/// blocks without valid pixels stay missing.
pub fn box_downsample(depth: &DepthMapBuffer, factor: usize) -> Result<DepthMapBuffer> {
    if factor == 0 || depth.width() % factor != 0 || depth.height() % factor != 0 {
        return Err(Error::Dimension(format!(
            "{}x{} depth map is not divisible by {factor}",
            depth.width(),
            depth.height()
        )));
    }
    if factor == 1 {
        return Ok(depth.clone());
    }
    let (w, h) = (depth.width() / factor, depth.height() / factor);
    let values: Vec<f32> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let mut sum = 0.0f64;
            let mut n = 0usize;
            for yy in y * factor..(y + 1) * factor {
                for xx in x * factor..(x + 1) * factor {
                    let v = depth.get(xx, yy);
                    if v > 0.0 {
                        sum += v as f64;
                        n += 1;
                    }
                }
            }
            if n == 0 {
                0.0
            } else {
                (sum / n as f64) as f32
            }
        })
        .collect();
    DepthMapBuffer::from_values(w, h, values)
}

/// The corruption formula for one pixel with a given noise draw; `None`
/// when the perturbed disparity is not positive.
#[inline]
pub fn corrupt_value(d_down: f64, noise: f64, baseline_focal: f64) -> Option<f64> {
    let disparity = baseline_focal / d_down + noise + 0.5;
    (disparity > MIN_DISPARITY).then(|| baseline_focal / disparity)
}

/// Downsamples the full-resolution ground truth and applies disparity
/// noise. Draw `i` uses counter `i` = row-major index in the downsampled
/// map, so the output is identical for any thread count.
pub fn corrupt(depth: &DepthMapBuffer, params: &CorruptionParams) -> Result<DepthMapBuffer> {
    params.validate()?;
    let down = box_downsample(depth, params.downsample)?;
    let bf = params.baseline_focal(depth.width());
    let values: Vec<f32> = down
        .values()
        .par_iter()
        .enumerate()
        .map(|(i, &d)| {
            if d <= 0.0 {
                return 0.0;
            }
            let noise = if params.sigma_d > 0.0 {
                params.sigma_d * rng::standard_normal(params.seed, i as u64)
            } else {
                0.0
            };
            corrupt_value(d as f64, noise, bf).map_or(0.0, |v| v as f32)
        })
        .collect();
    DepthMapBuffer::from_values(down.width(), down.height(), values)
}
