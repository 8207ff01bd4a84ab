//! Prior-versus-no-prior study on generated scenes: every scene in the spec
//! is reconstructed under every prior mode, fused, and scored against the
//! ground-truth cloud.

use std::fmt::Write as _;

use depthprior::dataio::Scene;
use depthprior::eval::{depth_mae, point_metrics};
use depthprior::fusion::{depth_to_cloud, fuse, PointCloud};
use depthprior::pipeline::{reconstruct_scene, PriorMode};
use depthprior::sensor_sim::corrupt;
use depthprior::synthscene::{SceneSpec, Shape, SyntheticScene};
use depthprior::Error;
use serde::Deserialize;

use crate::commands::{gt_for, write_text};
use crate::config::{Prior, RunConfig};
use crate::ExperimentArgs;

pub const RESULTS_HEADER: &str = "scene,mode,mae_mm,accuracy_mm,completeness_mm,overall_mm";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenePlan {
    pub shape: String,
    pub texture_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub seed: u64,
    pub n_views: usize,
    pub image_size: (usize, usize),
    pub modes: Vec<Prior>,
    pub scene: Vec<ScenePlan>,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            seed: 0,
            n_views: 5,
            image_size: (160, 128),
            modes: vec![Prior::None, Prior::Range, Prior::Init],
            scene: Vec::new(),
        }
    }
}

impl ExperimentSpec {
    /// Three textured planes at decreasing texture under all prior modes.
    pub fn standard() -> Self {
        ExperimentSpec {
            scene: [1.0, 0.5, 0.1]
                .into_iter()
                .map(|t| ScenePlan {
                    shape: "textured_plane".into(),
                    texture_strength: t,
                })
                .collect(),
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<(), Error> {
        if self.scene.is_empty() {
            return Err(Error::Config("experiment spec lists no scenes".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Config("experiment spec lists no prior modes".into()));
        }
        Ok(())
    }
}

struct Row {
    scene: String,
    mode: PriorMode,
    mae: f64,
    accuracy: f64,
    completeness: f64,
    overall: f64,
}

/// Ground-truth cloud: every valid pixel of every view.
fn reference_cloud(scene: &Scene) -> Result<PointCloud, Error> {
    let mut points = Vec::new();
    for v in &scene.views {
        if let Some(gt) = &v.gt_depth {
            points.extend(depth_to_cloud(gt, &v.camera)?.points);
        }
    }
    Ok(PointCloud { points, colors: None })
}

fn run_scene(plan: &ScenePlan, spec: &ExperimentSpec, config: &RunConfig) -> Result<Vec<Row>, Error> {
    let shape: Shape = plan.shape.parse()?;
    let synth = SyntheticScene::new(SceneSpec {
        shape,
        texture_strength: plan.texture_strength,
        n_views: spec.n_views,
        image_size: spec.image_size,
        seed: spec.seed,
        ..Default::default()
    })?;
    let mut scene = synth.build()?;
    let corruption = config.corruption.to_params()?;
    for (i, v) in scene.views.iter_mut().enumerate() {
        let mut p = corruption;
        p.seed = corruption.seed.wrapping_add(i as u64);
        v.prior_depth = Some(corrupt(v.gt_depth.as_ref().expect("synthetic views carry depth"), &p)?);
    }
    let reference = reference_cloud(&scene)?;
    let fusion = config.fusion.to_params()?;
    let name = format!("{shape}_t{}_s{}", plan.texture_strength, spec.seed);

    let mut rows = Vec::new();
    for &mode in &spec.modes {
        let mut section = config.pipeline.clone();
        section.prior = mode;
        let result = reconstruct_scene(&scene, &section.to_config()?)?;
        if let Some(f) = result.failures.into_iter().next() {
            return Err(f.error);
        }
        let (mut sum, mut n) = (0.0, 0usize);
        for e in &result.estimates {
            if let Some(gt) = gt_for(&scene, e) {
                let s = depth_mae(&e.depth, &gt?)?;
                if s.evaluated > 0 {
                    sum += s.mae_mm * s.evaluated as f64;
                    n += s.evaluated;
                }
            }
        }
        let cloud = fuse(&result.estimates, &scene, &fusion)?;
        let (accuracy, completeness, overall) = if cloud.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let m = point_metrics(&cloud, &reference, config.eval.max_dist_mm)?;
            (m.accuracy_mm, m.completeness_mm, m.overall_mm)
        };
        rows.push(Row {
            scene: name.clone(),
            mode: mode.into(),
            mae: if n > 0 { sum / n as f64 } else { f64::NAN },
            accuracy,
            completeness,
            overall,
        });
    }
    Ok(rows)
}

fn summary(rows: &[Row]) -> String {
    let mut s = format!(
        "{:<28} {:<6} {:>10} {:>12} {:>16} {:>11} {:>12}\n",
        "scene", "mode", "mae_mm", "accuracy_mm", "completeness_mm", "overall_mm", "mae vs none"
    );
    for r in rows {
        let base = rows.iter().find(|b| b.scene == r.scene && b.mode == PriorMode::None);
        let gain = base.map_or(String::from("-"), |b| format!("{:+.1}%", 100.0 * (r.mae / b.mae - 1.0)));
        let _ = writeln!(
            s,
            "{:<28} {:<6} {:>10.3} {:>12.3} {:>16.3} {:>11.3} {:>12}",
            r.scene,
            r.mode.to_string(),
            r.mae,
            r.accuracy,
            r.completeness,
            r.overall,
            gain
        );
    }
    s
}

pub fn run(a: &ExperimentArgs, config: &RunConfig) -> Result<(), Error> {
    let spec = match &a.spec {
        None => ExperimentSpec::standard(),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str(&text).map_err(|e| Error::parse(p, e.span().map_or(0, |s| s.start), e.message()))?
        }
    };
    spec.validate()?;
    let mut rows = Vec::new();
    for plan in &spec.scene {
        rows.extend(run_scene(plan, &spec, config)?);
    }
    let mut csv = format!("{RESULTS_HEADER}\n");
    for r in &rows {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            r.scene, r.mode, r.mae, r.accuracy, r.completeness, r.overall
        );
    }
    write_text(&a.out.join("results.csv"), &csv)?;
    let text = summary(&rows);
    write_text(&a.out.join("summary.txt"), &text)?;
    print!("{text}");
    Ok(())
}
