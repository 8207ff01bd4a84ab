//! TOML run configuration. Every section and key is optional; missing keys
//! take the library defaults and unknown keys are rejected.

use std::path::Path;

use depthprior::densify::PropagationParams;
use depthprior::fusion::FusionParams;
use depthprior::matcher::RegressionMode;
use depthprior::pipeline::{MatchParams, PipelineConfig, PriorMode, Spacing, StageConfig};
use depthprior::refine::GnParams;
use depthprior::sensor_sim::CorruptionParams;
use depthprior::Error;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Prior {
    None,
    Range,
    Init,
}

impl From<Prior> for PriorMode {
    fn from(p: Prior) -> Self {
        match p {
            Prior::None => PriorMode::None,
            Prior::Range => PriorMode::Range,
            Prior::Init => PriorMode::Init,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regression {
    Soft,
    Wta,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub prior: Prior,
    /// Half-width of the stage-1 range around the prior in stage-1
    /// intervals; half the stage-1 hypothesis count when absent.
    pub prior_range_width: Option<f64>,
    pub stage_scales: Vec<usize>,
    pub stage_hypotheses: Vec<usize>,
    /// Stage spacing as multiples of each camera's depth interval.
    pub stage_interval_multiples: Vec<f64>,
    pub patch: usize,
    pub regression: Regression,
    pub temperature: f64,
    pub sparse_stride: usize,
    pub init_min_confidence: f64,
    pub propagation_window: usize,
    pub sigma_color: f64,
    pub sigma_spatial: f64,
    pub gn_iters: usize,
    pub gn_damping: f64,
    pub gn_step_clamp: f64,
    pub gn_min_sources: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let p = PipelineConfig::default();
        PipelineSection {
            prior: Prior::None,
            prior_range_width: p.prior_range_width,
            stage_scales: p.stages.iter().map(|s| s.scale).collect(),
            stage_hypotheses: p.stages.iter().map(|s| s.n_hypotheses).collect(),
            stage_interval_multiples: vec![4.0, 2.0, 1.0],
            patch: p.matching.patch,
            regression: Regression::Soft,
            temperature: p.matching.temperature,
            sparse_stride: p.sparse_stride,
            init_min_confidence: p.init_min_confidence,
            propagation_window: p.propagation.window,
            sigma_color: p.propagation.sigma_color,
            sigma_spatial: p.propagation.sigma_spatial,
            gn_iters: p.refine.max_iters,
            gn_damping: p.refine.damping,
            gn_step_clamp: p.refine.step_clamp,
            gn_min_sources: p.refine.min_valid_sources,
        }
    }
}

impl PipelineSection {
    pub fn to_config(&self) -> Result<PipelineConfig, Error> {
        let n = self.stage_scales.len();
        if self.stage_hypotheses.len() != n || self.stage_interval_multiples.len() != n {
            return Err(Error::Config(
                "stage_scales, stage_hypotheses and stage_interval_multiples must have equal length".into(),
            ));
        }
        let stages = (0..n)
            .map(|k| StageConfig {
                scale: self.stage_scales[k],
                n_hypotheses: self.stage_hypotheses[k],
                interval: Spacing::CameraMultiple(self.stage_interval_multiples[k]),
            })
            .collect();
        let config = PipelineConfig {
            stages,
            prior_mode: self.prior.into(),
            prior_range_width: self.prior_range_width,
            matching: MatchParams {
                patch: self.patch,
                regression: match self.regression {
                    Regression::Soft => RegressionMode::Soft,
                    Regression::Wta => RegressionMode::WinnerTakeAll,
                },
                temperature: self.temperature,
            },
            propagation: PropagationParams {
                window: self.propagation_window,
                sigma_color: self.sigma_color,
                sigma_spatial: self.sigma_spatial,
            },
            refine: GnParams {
                max_iters: self.gn_iters,
                damping: self.gn_damping,
                step_clamp: self.gn_step_clamp,
                min_valid_sources: self.gn_min_sources,
                ..GnParams::default()
            },
            sparse_stride: self.sparse_stride,
            init_min_confidence: self.init_min_confidence,
        };
        config.validate()?;
        Ok(config)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionSection {
    pub baseline_mm: f64,
    pub focal_px: f64,
    pub sigma_d: f64,
    pub downsample: usize,
    pub seed: u64,
}

impl Default for CorruptionSection {
    fn default() -> Self {
        let c = CorruptionParams::default();
        CorruptionSection {
            baseline_mm: c.baseline_mm,
            focal_px: c.focal_px,
            sigma_d: c.sigma_d,
            downsample: c.downsample,
            seed: c.seed,
        }
    }
}

impl CorruptionSection {
    pub fn to_params(&self) -> Result<CorruptionParams, Error> {
        let p = CorruptionParams {
            baseline_mm: self.baseline_mm,
            focal_px: self.focal_px,
            sigma_d: self.sigma_d,
            downsample: self.downsample,
            seed: self.seed,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionSection {
    pub min_views: usize,
    pub reproj_px: f64,
    pub rel_depth: f64,
    pub min_confidence: f64,
}

impl Default for FusionSection {
    fn default() -> Self {
        let f = FusionParams::default();
        FusionSection {
            min_views: f.min_consistent_views,
            reproj_px: f.max_reproj_px,
            rel_depth: f.max_rel_depth_diff,
            min_confidence: f.min_confidence,
        }
    }
}

impl FusionSection {
    pub fn to_params(&self) -> Result<FusionParams, Error> {
        let p = FusionParams {
            min_consistent_views: self.min_views,
            max_reproj_px: self.reproj_px,
            max_rel_depth_diff: self.rel_depth,
            min_confidence: self.min_confidence,
        };
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    pub max_dist_mm: f64,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection { max_dist_mm: 20.0 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub pipeline: PipelineSection,
    pub corruption: CorruptionSection,
    pub fusion: FusionSection,
    pub eval: EvalSection,
}

impl RunConfig {
    pub fn parse(text: &str, origin: &Path) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| {
            let offset = e.span().map_or(0, |s| s.start);
            Error::parse(origin, offset, e.message().to_string())
        })
    }

    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        match path {
            None => Ok(RunConfig::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                Self::parse(&text, p)
            }
        }
    }
}
