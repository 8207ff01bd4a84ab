//! Plane-sweep matching: hand-crafted features, depth hypothesis sets,
//! ZNCC cost volumes and depth regression.
//!
//! Each hypothesis is a fronto-parallel plane at constant reference-camera
//! depth. For a reference pixel the surrounding patch is warped into every
//! source image through that plane and compared with `1 - ZNCC`, so costs
//! lie in `[0, 2]` and lower is better.

use rayon::prelude::*;

use crate::dataio::DepthMapBuffer;
use crate::error::{Error, Result};
use crate::geometry::{Camera, PlaneSweep};
use crate::raster::Plane;

/// Cost assigned when a patch has no intensity variation.
pub const NEUTRAL_COST: f32 = 1.0;
const MIN_PATCH_VARIANCE: f64 = 1e-12;

/// Per-pixel feature channels: intensity, `d/dx`, `d/dy`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureImage {
    pub width: usize,
    pub height: usize,
    pub channels: Vec<Plane>,
}

impl FeatureImage {
    pub fn intensity(&self) -> &Plane {
        &self.channels[0]
    }
}

/// Grayscale intensity plus central-difference gradients; one-sided
/// differences on the border.
pub fn extract_features(gray: &Plane) -> FeatureImage {
    let (w, h) = (gray.width, gray.height);
    let diff = |lo: f32, hi: f32, span: usize| if span == 0 { 0.0 } else { (hi - lo) / span as f32 };
    let gx = Plane::from_fn(w, h, |x, y| {
        let (a, b) = (x.saturating_sub(1), (x + 1).min(w - 1));
        diff(gray.get(a, y), gray.get(b, y), b - a)
    });
    let gy = Plane::from_fn(w, h, |x, y| {
        let (a, b) = (y.saturating_sub(1), (y + 1).min(h - 1));
        diff(gray.get(x, a), gray.get(x, b), b - a)
    });
    FeatureImage {
        width: w,
        height: h,
        channels: vec![gray.clone(), gx, gy],
    }
}

/// Depth hypotheses per reference pixel, strictly increasing.
#[derive(Debug, Clone, PartialEq)]
pub enum HypothesisSet {
    /// The same depths at every pixel.
    Global(Vec<f64>),
    /// Explicit `height × width × count` depths; a row of zeros marks a
    /// pixel without hypotheses.
    PerPixel {
        width: usize,
        height: usize,
        count: usize,
        depths: Vec<f64>,
    },
    /// `count` depths centered on a per-pixel value,
    /// `center + (i - (count - 1) / 2) * spacing`, generated on demand.
    /// Pixels whose center is missing use `fallback` or have no hypotheses.
    Centered {
        width: usize,
        height: usize,
        count: usize,
        centers: Vec<f32>,
        spacing: f64,
        fallback: Option<Vec<f64>>,
    },
}

impl HypothesisSet {
    /// `count` depths evenly spaced on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, count: usize) -> Result<Self> {
        Ok(HypothesisSet::Global(uniform_depths(lo, hi, count)?))
    }

    /// Global range of a camera: `depth_min + i * interval`.
    pub fn from_camera(camera: &Camera, count: usize, interval: f64) -> Result<Self> {
        let hi = camera.depth_min + (count.max(1) - 1) as f64 * interval;
        HypothesisSet::uniform(camera.depth_min, hi, count)
    }

    pub fn centered(
        centers: &DepthMapBuffer,
        count: usize,
        spacing: f64,
        fallback: Option<Vec<f64>>,
    ) -> Result<Self> {
        if count < 2 {
            return Err(Error::Config(format!("hypothesis count must be >= 2, got {count}")));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::Config(format!("hypothesis spacing must be > 0, got {spacing}")));
        }
        if let Some(f) = &fallback {
            check_monotone(f)?;
            if f.len() != count {
                return Err(Error::Config("fallback hypotheses must have the same count".into()));
            }
        }
        Ok(HypothesisSet::Centered {
            width: centers.width(),
            height: centers.height(),
            count,
            centers: centers.values().to_vec(),
            spacing,
            fallback,
        })
    }

    pub fn count(&self) -> usize {
        match self {
            HypothesisSet::Global(d) => d.len(),
            HypothesisSet::PerPixel { count, .. } | HypothesisSet::Centered { count, .. } => *count,
        }
    }

    /// Dimensions for per-pixel sets; `None` for global sets.
    pub fn dims(&self) -> Option<(usize, usize)> {
        match self {
            HypothesisSet::Global(_) => None,
            HypothesisSet::PerPixel { width, height, .. } | HypothesisSet::Centered { width, height, .. } => {
                Some((*width, *height))
            }
        }
    }

    /// Fills `out` (length `count`) with the hypotheses at a pixel; returns
    /// false when the pixel has none.
    pub fn fill(&self, x: usize, y: usize, out: &mut [f64]) -> bool {
        match self {
            HypothesisSet::Global(d) => {
                out.copy_from_slice(d);
                true
            }
            HypothesisSet::PerPixel {
                width, count, depths, ..
            } => {
                let start = (y * width + x) * count;
                out.copy_from_slice(&depths[start..start + count]);
                out[0] > 0.0
            }
            HypothesisSet::Centered {
                width,
                count,
                centers,
                spacing,
                fallback,
                ..
            } => {
                let c = centers[y * width + x] as f64;
                if c > 0.0 {
                    centered_depths(c, *count, *spacing, out);
                    true
                } else if let Some(f) = fallback {
                    out.copy_from_slice(f);
                    true
                } else {
                    false
                }
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            HypothesisSet::Global(d) => check_monotone(d),
            HypothesisSet::PerPixel {
                width,
                height,
                count,
                depths,
            } => {
                if depths.len() != width * height * count || *count == 0 {
                    return Err(Error::Dimension("per-pixel hypothesis buffer has the wrong size".into()));
                }
                for row in depths.chunks_exact(*count) {
                    if row.iter().all(|d| *d == 0.0) {
                        continue;
                    }
                    check_monotone(row)?;
                }
                Ok(())
            }
            HypothesisSet::Centered { .. } => Ok(()),
        }
    }
}

fn check_monotone(d: &[f64]) -> Result<()> {
    if d.is_empty() {
        return Err(Error::Config("empty hypothesis set".into()));
    }
    if !d.iter().all(|v| *v > 0.0 && v.is_finite()) {
        return Err(Error::Config("hypothesis depths must be positive".into()));
    }
    if d.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("hypothesis depths must be strictly increasing".into()));
    }
    Ok(())
}

pub fn uniform_depths(lo: f64, hi: f64, count: usize) -> Result<Vec<f64>> {
    if count < 2 || !(lo > 0.0) || !(hi > lo) {
        return Err(Error::Config(format!(
            "invalid hypothesis range [{lo}, {hi}] with {count} samples"
        )));
    }
    let step = (hi - lo) / (count - 1) as f64;
    let mut d: Vec<f64> = (0..count).map(|i| lo + i as f64 * step).collect();
    d[count - 1] = hi;
    Ok(d)
}

/// `center + (i - (count - 1) / 2) * spacing`, shifted up when the lowest
/// hypothesis would not be positive.
pub fn centered_depths(center: f64, count: usize, spacing: f64, out: &mut [f64]) {
    let half = (count - 1) as f64 / 2.0;
    let center = center.max((half + 1.0) * spacing);
    for (i, o) in out.iter_mut().enumerate() {
        *o = center + (i as f64 - half) * spacing;
    }
}

/// Matching costs over a pixel grid and its hypotheses, `[pixel][hypothesis]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CostVolume {
    /// Grid size (the reference image subsampled by `stride`).
    pub width: usize,
    pub height: usize,
    pub count: usize,
    pub stride: usize,
    pub costs: Vec<f32>,
    pub valid: Vec<bool>,
    /// Hypothesis depths per grid pixel, aligned with `costs`.
    pub depths: Vec<f64>,
}

impl CostVolume {
    #[inline]
    pub fn index(&self, x: usize, y: usize, d: usize) -> usize {
        (y * self.width + x) * self.count + d
    }
}

/// An image and its camera at the working resolution.
#[derive(Debug, Clone, Copy)]
pub struct MatchView<'a> {
    pub image: &'a Plane,
    pub camera: &'a Camera,
}

/// Zero-mean normalized cross-correlation cost `1 - ZNCC`; the neutral
/// cost when either patch is flat.
pub fn zncc_cost(a: &[f64], b: &[f64]) -> f32 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (da, db) = (x - ma, y - mb);
        sab += da * db;
        saa += da * da;
        sbb += db * db;
    }
    if saa < MIN_PATCH_VARIANCE || sbb < MIN_PATCH_VARIANCE {
        return NEUTRAL_COST;
    }
    (1.0 - (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)) as f32
}

pub fn build_cost_volume(
    reference: MatchView<'_>,
    sources: &[MatchView<'_>],
    hyps: &HypothesisSet,
    patch: usize,
) -> Result<CostVolume> {
    build_cost_volume_strided(reference, sources, hyps, patch, 1)
}

/// Cost volume evaluated only at reference pixels `(stride·i, stride·j)`.
pub fn build_cost_volume_strided(
    reference: MatchView<'_>,
    sources: &[MatchView<'_>],
    hyps: &HypothesisSet,
    patch: usize,
    stride: usize,
) -> Result<CostVolume> {
    if sources.is_empty() {
        return Err(Error::Config("cost volume needs at least one source view".into()));
    }
    if patch < 3 || patch % 2 == 0 {
        return Err(Error::Config(format!("patch size must be odd and >= 3, got {patch}")));
    }
    if stride == 0 {
        return Err(Error::Config("stride must be >= 1".into()));
    }
    let (w, h) = (reference.image.width, reference.image.height);
    if (w, h) != (reference.camera.width(), reference.camera.height()) {
        return Err(Error::Dimension("reference image and camera disagree".into()));
    }
    for s in sources {
        if (s.image.width, s.image.height) != (s.camera.width(), s.camera.height()) {
            return Err(Error::Dimension("source image and camera disagree".into()));
        }
    }
    if let Some(dims) = hyps.dims() {
        if dims != (w, h) {
            return Err(Error::Dimension(format!(
                "hypotheses are {}x{}, reference image is {w}x{h}",
                dims.0, dims.1
            )));
        }
    }
    hyps.validate()?;

    let count = hyps.count();
    let (gw, gh) = (w.div_ceil(stride), h.div_ceil(stride));
    let sweeps: Vec<PlaneSweep> = sources.iter().map(|s| PlaneSweep::new(reference.camera, s.camera)).collect();
    let r = (patch / 2) as isize;

    let rows: Vec<(Vec<f32>, Vec<bool>, Vec<f64>)> = (0..gh)
        .into_par_iter()
        .map(|gy| {
            let mut costs = vec![0.0f32; gw * count];
            let mut valid = vec![false; gw * count];
            let mut depths = vec![0.0f64; gw * count];
            let mut hyp = vec![0.0; count];
            let mut offsets = Vec::with_capacity(patch * patch);
            let mut ref_vals = Vec::with_capacity(patch * patch);
            let mut rays = Vec::with_capacity(patch * patch * sources.len());
            let mut warped = Vec::with_capacity(patch * patch);
            let mut per_source = Vec::with_capacity(sources.len());
            let y = gy * stride;
            for gx in 0..gw {
                let x = gx * stride;
                if !hyps.fill(x, y, &mut hyp) {
                    continue;
                }
                depths[gx * count..(gx + 1) * count].copy_from_slice(&hyp);
                offsets.clear();
                ref_vals.clear();
                for dy in -r..=r {
                    for dx in -r..=r {
                        let (px, py) = (x as isize + dx, y as isize + dy);
                        if px >= 0 && py >= 0 && (px as usize) < w && (py as usize) < h {
                            offsets.push((px as f64, py as f64));
                            ref_vals.push(reference.image.get(px as usize, py as usize) as f64);
                        }
                    }
                }
                rays.clear();
                for sweep in &sweeps {
                    rays.extend(offsets.iter().map(|&(px, py)| sweep.ray(px, py)));
                }
                let m = offsets.len();
                for (d, &depth) in hyp.iter().enumerate() {
                    per_source.clear();
                    for (si, (sweep, src)) in sweeps.iter().zip(sources).enumerate() {
                        warped.clear();
                        let mut inside = true;
                        for ray in &rays[si * m..(si + 1) * m] {
                            match sweep.map_ray(ray, depth).and_then(|(u, v, _)| src.image.sample(u, v)) {
                                Some(val) => warped.push(val),
                                None => {
                                    inside = false;
                                    break;
                                }
                            }
                        }
                        if inside {
                            per_source.push(zncc_cost(&ref_vals, &warped));
                        }
                    }
                    if !per_source.is_empty() {
                        // Sorted summation makes the mean independent of source order.
                        per_source.sort_by(f32::total_cmp);
                        let sum: f64 = per_source.iter().map(|c| *c as f64).sum();
                        costs[gx * count + d] = (sum / per_source.len() as f64) as f32;
                        valid[gx * count + d] = true;
                    }
                }
            }
            (costs, valid, depths)
        })
        .collect();

    let mut vol = CostVolume {
        width: gw,
        height: gh,
        count,
        stride,
        costs: Vec::with_capacity(gw * gh * count),
        valid: Vec::with_capacity(gw * gh * count),
        depths: Vec::with_capacity(gw * gh * count),
    };
    for (c, v, d) in rows {
        vol.costs.extend(c);
        vol.valid.extend(v);
        vol.depths.extend(d);
    }
    Ok(vol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegressionMode {
    /// Minimum-cost hypothesis; ties go to the smaller depth.
    WinnerTakeAll,
    /// Softmax(-cost / temperature) expectation.
    Soft,
}

/// Softmax probabilities over the valid hypotheses of one pixel; invalid
/// entries get zero. Returns the index of the most probable hypothesis.
fn softmax(costs: &[f32], valid: &[bool], temperature: f64, out: &mut [f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for i in 0..costs.len() {
        if valid[i] && best.map_or(true, |b| costs[i] < costs[b]) {
            best = Some(i);
        }
    }
    let b = best?;
    let cmin = costs[b] as f64;
    let mut total = 0.0;
    for i in 0..costs.len() {
        out[i] = if valid[i] {
            (-(costs[i] as f64 - cmin) / temperature).exp()
        } else {
            0.0
        };
        total += out[i];
    }
    for p in out.iter_mut() {
        *p /= total;
    }
    Some(b)
}

/// Regresses a depth per grid pixel. Confidence is the softmax mass of the
/// best hypothesis and its two neighbours.
pub fn regress_depth(vol: &CostVolume, mode: RegressionMode, temperature: f64) -> Result<(DepthMapBuffer, Plane)> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::Config(format!("temperature must be > 0, got {temperature}")));
    }
    let n = vol.width * vol.height;
    let k = vol.count;
    let results: Vec<(f32, f32)> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0; k],
            |prob, i| {
                let costs = &vol.costs[i * k..(i + 1) * k];
                let valid = &vol.valid[i * k..(i + 1) * k];
                let depths = &vol.depths[i * k..(i + 1) * k];
                let Some(best) = softmax(costs, valid, temperature, prob) else {
                    return (0.0, 0.0);
                };
                let depth = match mode {
                    RegressionMode::WinnerTakeAll => depths[best],
                    RegressionMode::Soft => prob.iter().zip(depths).map(|(p, d)| p * d).sum(),
                };
                let lo = best.saturating_sub(1);
                let hi = (best + 1).min(k - 1);
                let conf: f64 = prob[lo..=hi].iter().sum();
                (depth as f32, conf.clamp(0.0, 1.0) as f32)
            },
        )
        .collect();
    let depth = DepthMapBuffer::from_fn(vol.width, vol.height, |x, y| results[y * vol.width + x].0);
    let conf = Plane::from_fn(vol.width, vol.height, |x, y| results[y * vol.width + x].1);
    Ok((depth, conf))
}
