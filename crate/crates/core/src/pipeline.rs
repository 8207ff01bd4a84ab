//! Per-view depth estimation.
//!
//! A coarse-to-fine cascade of plane sweeps narrows the hypothesis range
//! around the previous stage's estimate. Without a prior, or with
//! `PriorMode::Init`, the final stage is matched sparsely (stride 2), then
//! densified by guided propagation and refined with Gauss-Newton. With
//! `PriorMode::Range` the first stage is centered on the prior and the
//! cascade runs dense to the end.
//!
//! `PriorMode::Init` is a classical stand-in for feeding the prior to a
//! network as an extra input channel: the prior replaces sparse samples
//! that are missing or low-confidence before propagation. It is an
//! analogue, not an equivalent.

use rayon::prelude::*;

use crate::dataio::{DepthMapBuffer, Scene, View};
use crate::densify::{expand_sparse, propagate, PropagationParams};
use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::matcher::{
    build_cost_volume_strided, extract_features, regress_depth, uniform_depths, HypothesisSet, MatchView,
    RegressionMode,
};
use crate::raster::Plane;
use crate::refine::{gn_refine, GnParams};
use crate::sensor_sim::box_downsample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorMode {
    #[default]
    None,
    Range,
    Init,
}

impl std::str::FromStr for PriorMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PriorMode::None),
            "range" => Ok(PriorMode::Range),
            "init" => Ok(PriorMode::Init),
            _ => Err(Error::Config(format!("unknown prior mode {s:?} (expected none, range or init)"))),
        }
    }
}

impl std::fmt::Display for PriorMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PriorMode::None => "none",
            PriorMode::Range => "range",
            PriorMode::Init => "init",
        })
    }
}

/// Hypothesis spacing of a stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Spacing {
    /// Multiple of the reference camera's `depth_interval`.
    CameraMultiple(f64),
    Millimetres(f64),
}

impl Spacing {
    pub fn resolve(&self, camera: &Camera) -> f64 {
        match *self {
            Spacing::CameraMultiple(k) => k * camera.depth_interval,
            Spacing::Millimetres(mm) => mm,
        }
    }

    fn value(&self) -> f64 {
        match *self {
            Spacing::CameraMultiple(v) | Spacing::Millimetres(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageConfig {
    /// Image downscale factor, a power of two.
    pub scale: usize,
    pub n_hypotheses: usize,
    pub interval: Spacing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchParams {
    pub patch: usize,
    pub regression: RegressionMode,
    pub temperature: f64,
}

impl Default for MatchParams {
    fn default() -> Self {
        MatchParams {
            patch: 7,
            regression: RegressionMode::Soft,
            temperature: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub stages: Vec<StageConfig>,
    pub prior_mode: PriorMode,
    /// Half-width of the stage-1 range around the prior, in stage-1
    /// intervals. `None` means half the stage-1 hypothesis count.
    pub prior_range_width: Option<f64>,
    pub matching: MatchParams,
    pub propagation: PropagationParams,
    pub refine: GnParams,
    pub sparse_stride: usize,
    /// Init mode replaces missing sparse samples and, when this is above
    /// zero, samples whose confidence falls below it.
    pub init_min_confidence: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            stages: vec![
                StageConfig {
                    scale: 4,
                    n_hypotheses: 48,
                    interval: Spacing::CameraMultiple(4.0),
                },
                StageConfig {
                    scale: 2,
                    n_hypotheses: 32,
                    interval: Spacing::CameraMultiple(2.0),
                },
                StageConfig {
                    scale: 1,
                    n_hypotheses: 8,
                    interval: Spacing::CameraMultiple(1.0),
                },
            ],
            prior_mode: PriorMode::None,
            prior_range_width: None,
            matching: MatchParams::default(),
            propagation: PropagationParams::default(),
            refine: GnParams::default(),
            sparse_stride: 2,
            init_min_confidence: 0.0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::Config("at least one stage is required".into()));
        }
        for (k, s) in self.stages.iter().enumerate() {
            if !s.scale.is_power_of_two() {
                return Err(Error::Config(format!("stage {k}: scale {} is not a power of two", s.scale)));
            }
            if s.n_hypotheses < 2 {
                return Err(Error::Config(format!("stage {k}: need at least 2 hypotheses")));
            }
            let v = s.interval.value();
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("stage {k}: interval must be > 0")));
            }
        }
        if self.stages.windows(2).any(|w| w[1].scale > w[0].scale) {
            return Err(Error::Config("stage scales must be non-increasing".into()));
        }
        if let Some(w) = self.prior_range_width {
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Config("prior_range_width must be > 0".into()));
            }
        }
        if self.sparse_stride < 1 {
            return Err(Error::Config("sparse_stride must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.init_min_confidence) {
            return Err(Error::Config("init_min_confidence must be in [0, 1]".into()));
        }
        if self.matching.patch < 3 || self.matching.patch % 2 == 0 {
            return Err(Error::Config("patch size must be odd and >= 3".into()));
        }
        if !(self.matching.temperature > 0.0) {
            return Err(Error::Config("temperature must be > 0".into()));
        }
        self.propagation.validate()?;
        self.refine.validate()
    }

    /// True when the final stage goes through the sparse, propagate and
    /// refine chain.
    pub fn uses_sparse_chain(&self) -> bool {
        self.prior_mode != PriorMode::Range
    }
}

#[derive(Debug, Clone)]
pub struct StageOutput {
    pub scale: usize,
    pub interval_mm: f64,
    pub depth: DepthMapBuffer,
    pub confidence: Plane,
    /// Gauss-Newton output, present on the final stage of the sparse chain.
    pub refined: Option<DepthMapBuffer>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineSummary {
    /// Pixels with at least the minimum number of usable sources.
    pub processed: usize,
    /// Processed pixels whose photometric error strictly decreased.
    pub improved: usize,
}

impl RefineSummary {
    pub fn improved_fraction(&self) -> f64 {
        if self.processed == 0 {
            0.0
        } else {
            self.improved as f64 / self.processed as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct DepthEstimate {
    pub view: usize,
    /// Final depth at the last stage's resolution.
    pub depth: DepthMapBuffer,
    pub confidence: Plane,
    pub stages: Vec<StageOutput>,
    pub refine: Option<RefineSummary>,
    /// Incremented when range mode had to fall back to the global range
    /// because the prior was entirely missing.
    pub prior_warnings: usize,
}

impl DepthEstimate {
    /// Wraps an externally produced depth map (for example ground truth)
    /// given `scale` times below the view's image, with full confidence.
    pub fn from_depth(view: usize, depth: DepthMapBuffer, scale: usize) -> Self {
        let confidence = Plane::from_fn(depth.width(), depth.height(), |_, _| 1.0);
        DepthEstimate {
            view,
            depth: depth.clone(),
            confidence: confidence.clone(),
            stages: vec![StageOutput {
                scale,
                interval_mm: 0.0,
                depth,
                confidence,
                refined: None,
            }],
            refine: None,
            prior_warnings: 0,
        }
    }

    pub fn final_scale(&self) -> usize {
        self.stages.last().map_or(1, |s| s.scale)
    }
}

/// Per-view inputs at one working resolution.
struct Level {
    gray: Plane,
    camera: Camera,
}

fn level(view: &View, scale: usize) -> Result<Level> {
    let (w, h) = (view.camera.width(), view.camera.height());
    if w % scale != 0 || h % scale != 0 {
        return Err(Error::Config(format!("image {w}x{h} is not divisible by stage scale {scale}")));
    }
    let full = Plane::gray_from_rgb(&view.image);
    Ok(Level {
        gray: full.box_downsample(scale),
        camera: view.camera.downscaled(scale)?,
    })
}

/// Resamples a depth map given at `from` times below the image to `to`
/// times below it: nearest upsampling or valid-only box averaging.
fn resample_depth(depth: &DepthMapBuffer, from: usize, to: usize) -> Result<DepthMapBuffer> {
    if from == to {
        Ok(depth.clone())
    } else if from > to && from % to == 0 {
        Ok(depth.upsample_nearest(from / to))
    } else if to % from == 0 {
        box_downsample(depth, to / from)
    } else {
        Err(Error::Config(format!("cannot resample depth from scale {from} to {to}")))
    }
}

fn prior_at_scale(view: &View, scale: usize) -> Result<DepthMapBuffer> {
    let prior = view
        .prior_depth
        .as_ref()
        .ok_or_else(|| Error::Config("prior mode requires prior depth maps".into()))?;
    let from = view
        .prior_scale()
        .ok_or_else(|| Error::Dimension("prior depth is not an integer subsampling of the image".into()))?;
    resample_depth(prior, from, scale)
}

/// Global stage-1 depths of a view: `depth_min + i·interval`.
fn global_depths(camera: &Camera, stage: &StageConfig) -> Result<Vec<f64>> {
    let interval = stage.interval.resolve(camera);
    let lo = camera.depth_min;
    uniform_depths(lo, lo + (stage.n_hypotheses - 1) as f64 * interval, stage.n_hypotheses)
}

/// Stage-1 hypotheses for a reference view. Returns the set and whether
/// range mode fell back to the global range because the prior was empty.
pub fn first_stage_hypotheses(view: &View, config: &PipelineConfig) -> Result<(HypothesisSet, bool)> {
    let stage = &config.stages[0];
    let global = global_depths(&view.camera, stage)?;
    if config.prior_mode != PriorMode::Range {
        return Ok((HypothesisSet::Global(global), false));
    }
    let prior = prior_at_scale(view, stage.scale)?;
    if prior.valid_count() == 0 {
        return Ok((HypothesisSet::Global(global), true));
    }
    let d = stage.n_hypotheses;
    let width = config.prior_range_width.unwrap_or(d as f64 / 2.0);
    let interval = stage.interval.resolve(&view.camera);
    let spacing = 2.0 * width * interval / (d - 1) as f64;
    Ok((HypothesisSet::centered(&prior, d, spacing, Some(global))?, false))
}

/// Hypotheses of stage `k > 0`: `D_k` depths spaced by the stage interval
/// around the previous estimate, nearest-upsampled to this stage. Pixels
/// without a previous estimate sweep the stage-1 range with `D_k` samples.
pub fn refined_stage_hypotheses(
    view: &View,
    config: &PipelineConfig,
    k: usize,
    previous: &StageOutput,
) -> Result<HypothesisSet> {
    let stage = config
        .stages
        .get(k)
        .ok_or_else(|| Error::Config(format!("stage {k} does not exist")))?;
    let full_range = global_depths(&view.camera, &config.stages[0])?;
    let (lo, hi) = (full_range[0], full_range[full_range.len() - 1]);
    let centers = resample_depth(&previous.depth, previous.scale, stage.scale)?;
    let fallback = uniform_depths(lo, hi, stage.n_hypotheses)?;
    HypothesisSet::centered(&centers, stage.n_hypotheses, stage.interval.resolve(&view.camera), Some(fallback))
}

pub fn estimate_depth(scene: &Scene, ref_id: usize, config: &PipelineConfig) -> Result<DepthEstimate> {
    config.validate()?;
    if ref_id >= scene.len() {
        return Err(Error::Config(format!("view {ref_id} out of range (scene has {})", scene.len())));
    }
    let view = &scene.views[ref_id];
    if config.prior_mode != PriorMode::None && view.prior_depth.is_none() {
        return Err(Error::Config(format!(
            "prior mode {} requires prior depth for view {ref_id}",
            config.prior_mode
        )));
    }
    let source_ids = scene.pairs.source_ids(ref_id);
    if source_ids.is_empty() {
        return Err(Error::Config(format!("view {ref_id} has no source views")));
    }

    let n_stages = config.stages.len();
    let mut stages: Vec<StageOutput> = Vec::with_capacity(n_stages);
    let mut refine_summary = None;
    let mut prior_warnings = 0;
    for (k, stage) in config.stages.iter().enumerate() {
        let reference = level(view, stage.scale)?;
        let sources: Vec<Level> = source_ids
            .iter()
            .map(|&s| level(&scene.views[s], stage.scale))
            .collect::<Result<_>>()?;
        let (w, h) = (reference.gray.width, reference.gray.height);
        let interval = stage.interval.resolve(&view.camera);

        let hyps = match stages.last() {
            None => {
                let (hyps, fell_back) = first_stage_hypotheses(view, config)?;
                if fell_back {
                    log::warn!("view {ref_id}: prior is empty, using the global range");
                    prior_warnings += 1;
                }
                hyps
            }
            Some(prev) => refined_stage_hypotheses(view, config, k, prev)?,
        };

        let ref_match = MatchView {
            image: &reference.gray,
            camera: &reference.camera,
        };
        let src_match: Vec<MatchView> = sources
            .iter()
            .map(|s| MatchView {
                image: &s.gray,
                camera: &s.camera,
            })
            .collect();
        let last = k + 1 == n_stages;
        let stride = if last && config.uses_sparse_chain() {
            config.sparse_stride
        } else {
            1
        };
        let vol = build_cost_volume_strided(ref_match, &src_match, &hyps, config.matching.patch, stride)?;
        let (mut depth, mut confidence) =
            regress_depth(&vol, config.matching.regression, config.matching.temperature)?;
        drop(vol);

        if stride == 1 {
            stages.push(StageOutput {
                scale: stage.scale,
                interval_mm: interval,
                depth,
                confidence,
                refined: None,
            });
            continue;
        }

        if config.prior_mode == PriorMode::Init {
            let prior = prior_at_scale(view, stage.scale)?;
            for gy in 0..depth.height() {
                for gx in 0..depth.width() {
                    let unreliable = !depth.is_valid(gx, gy) || (confidence.get(gx, gy) as f64) < config.init_min_confidence;
                    let p = prior.get(gx * stride, gy * stride);
                    if unreliable && p > 0.0 {
                        depth.set(gx, gy, p);
                    }
                }
            }
        }
        let sparse = expand_sparse(&depth, stride, w, h);
        let dense = propagate(&sparse, &reference.gray, &config.propagation)?;
        confidence = Plane::from_fn(w, h, |x, y| confidence.get(x / stride, y / stride));

        let ref_feat = extract_features(&reference.gray);
        let src_feats: Vec<_> = sources.iter().map(|s| extract_features(&s.gray)).collect();
        let src_pairs: Vec<_> = src_feats.iter().zip(&sources).map(|(f, s)| (f, &s.camera)).collect();
        let out = gn_refine(&dense, (&ref_feat, &reference.camera), &src_pairs, &config.refine)?;
        let processed = out.processed.iter().filter(|p| **p).count();
        let improved = (0..w * h)
            .filter(|&i| out.processed[i] && out.final_error.data[i] < out.initial_error.data[i])
            .count();
        refine_summary = Some(RefineSummary { processed, improved });
        stages.push(StageOutput {
            scale: stage.scale,
            interval_mm: interval,
            depth: dense,
            confidence,
            refined: Some(out.depth),
        });
    }

    let last = stages.last().expect("at least one stage");
    Ok(DepthEstimate {
        view: ref_id,
        depth: last.refined.clone().unwrap_or_else(|| last.depth.clone()),
        confidence: last.confidence.clone(),
        stages,
        refine: refine_summary,
        prior_warnings,
    })
}

#[derive(Debug)]
pub struct ViewFailure {
    pub view: usize,
    pub error: Error,
}

/// Estimates for every view; failures are collected rather than aborting.
#[derive(Debug, Default)]
pub struct SceneReconstruction {
    pub estimates: Vec<DepthEstimate>,
    pub failures: Vec<ViewFailure>,
}

pub fn reconstruct_scene(scene: &Scene, config: &PipelineConfig) -> Result<SceneReconstruction> {
    config.validate()?;
    if config.prior_mode != PriorMode::None && !scene.has_prior() {
        return Err(Error::Config(format!(
            "prior mode {} requires prior depth maps in the scene",
            config.prior_mode
        )));
    }
    let results: Vec<Result<DepthEstimate>> =
        (0..scene.len()).into_par_iter().map(|v| estimate_depth(scene, v, config)).collect();
    let mut out = SceneReconstruction::default();
    for (view, r) in results.into_iter().enumerate() {
        match r {
            Ok(e) => out.estimates.push(e),
            Err(error) => out.failures.push(ViewFailure { view, error }),
        }
    }
    Ok(out)
}
