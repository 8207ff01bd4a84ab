//! Scene data: depth buffers, views, and the on-disk formats.
//!
//! Scene directory layout:
//!
//! ```text
//! scene/
//!   images/00000000.png
//!   cams/00000000_cam.txt
//!   depths_gt/00000000.pfm      (optional)
//!   depths_prior/00000000.pfm   (optional)
//!   pair.txt
//! ```

mod cam;
mod pair;
mod pfm;
mod ply;
mod scene;
mod tokens;

pub use cam::{format_cam, parse_cam, read_cam, write_cam};
pub use pair::{format_pair, parse_pair, read_pair, write_pair, PairTable, SourceRef};
pub use pfm::{decode_pfm, encode_pfm, read_pfm, write_pfm};
pub use ply::{read_ply, write_ply};
pub use scene::{load_scene, view_stem, write_scene, Scene, View};

use crate::error::{Error, Result};

/// Depth map in millimetres; `0.0` marks a missing value.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMapBuffer {
    width: usize,
    height: usize,
    values: Vec<f32>,
}

impl DepthMapBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        DepthMapBuffer {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f32>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} values for a {width}x{height} depth map",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidDepth(format!(
                "depth value {v} at index {i} is not a finite non-negative number"
            )));
        }
        Ok(DepthMapBuffer { width, height, values })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = f(x, y);
                values.push(if v.is_finite() && v > 0.0 { v } else { 0.0 });
            }
        }
        DepthMapBuffer { width, height, values }
    }

    pub fn constant(width: usize, height: usize, value: f32) -> Self {
        DepthMapBuffer::from_fn(width, height, |_, _| value)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.values[y * self.width + x]
    }

    /// Sets a value; non-finite or non-positive values become missing.
    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.values[y * self.width + x] = if v.is_finite() && v > 0.0 { v } else { 0.0 };
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.get(x, y) > 0.0
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| **v > 0.0).count()
    }

    pub fn same_size(&self, other: &DepthMapBuffer) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_size(&self, other: &DepthMapBuffer, what: &str) -> Result<()> {
        if self.same_size(other) {
            Ok(())
        } else {
            Err(Error::Dimension(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    /// Nearest-neighbour upsampling by an integer factor; preserves the
    /// missing sentinel.
    pub fn upsample_nearest(&self, factor: usize) -> DepthMapBuffer {
        DepthMapBuffer::from_fn(self.width * factor, self.height * factor, |x, y| {
            self.get(x / factor, y / factor)
        })
    }

    /// Integer ratio `self / other` when `other` is an exact integer
    /// subsampling of `self`.
    pub fn scale_relative_to(&self, width: usize, height: usize) -> Option<usize> {
        if self.width == 0 || width % self.width != 0 {
            return None;
        }
        let s = width / self.width;
        (s >= 1 && self.height * s == height).then_some(s)
    }
}
