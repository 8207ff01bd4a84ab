use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use depthprior::dataio::{load_scene, read_pfm, read_ply, view_stem, write_pfm, write_ply, DepthMapBuffer, Scene};
use depthprior::eval::{depth_mae, format_metrics_csv, point_metrics, DepthErrorStats, INLIER_THRESHOLDS_MM};
use depthprior::fusion::fuse as fuse_views;
use depthprior::pipeline::{reconstruct_scene, DepthEstimate};
use depthprior::raster::Plane;
use depthprior::sensor_sim::{box_downsample, corrupt};
use depthprior::synthscene::{generate_scene, SceneSpec};
use depthprior::Error;

use crate::config::RunConfig;
use crate::{EvaluateCommand, FuseArgs, ReconstructArgs, SynthDepthArgs, SynthsceneArgs};

pub fn create_dir(path: &Path) -> Result<(), Error> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn synthscene(a: &SynthsceneArgs) -> Result<(), Error> {
    let spec = SceneSpec {
        shape: a.shape.parse()?,
        texture_strength: a.texture_strength,
        n_views: a.views,
        image_size: (a.width, a.height),
        ring_radius_mm: a.ring_radius_mm,
        target_distance_mm: a.target_distance_mm,
        sphere_radius_mm: a.sphere_radius_mm,
        seed: a.seed,
        ..SceneSpec::default()
    };
    let scene = generate_scene(&spec, &a.out)?;
    println!("wrote {} views to {}", scene.len(), a.out.display());
    Ok(())
}

pub fn synth_depth(a: &SynthDepthArgs, config: &RunConfig) -> Result<(), Error> {
    let mut section = config.corruption.clone();
    section.baseline_mm = a.baseline_mm.unwrap_or(section.baseline_mm);
    section.focal_px = a.focal_px.unwrap_or(section.focal_px);
    section.sigma_d = a.sigma_d.unwrap_or(section.sigma_d);
    section.downsample = a.downsample.unwrap_or(section.downsample);
    section.seed = a.seed.unwrap_or(section.seed);
    let params = section.to_params()?;

    if let Some(input) = &a.input {
        let out = a
            .out
            .as_ref()
            .ok_or_else(|| Error::Config("--in needs --out for the output PFM".into()))?;
        let prior = corrupt(&read_pfm(input)?, &params)?;
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        return write_pfm(&prior, out);
    }

    let dir = a.scene.as_ref().expect("clap enforces --scene or --in");
    let scene = load_scene(dir)?;
    if !scene.has_gt() {
        return Err(Error::MissingComponent(format!("depths_gt/ in {}", dir.display())));
    }
    let out = a.out.clone().unwrap_or_else(|| dir.join("depths_prior"));
    create_dir(&out)?;
    for (i, view) in scene.views.iter().enumerate() {
        let mut p = params;
        p.seed = params.seed.wrapping_add(i as u64);
        let prior = corrupt(view.gt_depth.as_ref().expect("checked above"), &p)?;
        write_pfm(&prior, out.join(format!("{}.pfm", view_stem(i))))?;
    }
    println!("wrote {} prior maps to {}", scene.len(), out.display());
    Ok(())
}

fn plane_to_map(p: &Plane) -> Result<DepthMapBuffer, Error> {
    DepthMapBuffer::from_values(p.width, p.height, p.data.clone())
}

/// Ground truth of a view at the resolution of its estimate.
pub fn gt_for(scene: &Scene, e: &DepthEstimate) -> Option<Result<DepthMapBuffer, Error>> {
    let gt = scene.views[e.view].gt_depth.as_ref()?;
    Some(match e.depth.scale_relative_to(gt.width(), gt.height()) {
        Some(f) => box_downsample(gt, f),
        None => Err(Error::Dimension(format!("view {}: estimate and ground truth disagree", e.view))),
    })
}

pub const DEPTH_MAE_HEADER: &str = "view,mae_mm,valid_fraction,inlier_2mm,inlier_4mm,inlier_8mm,evaluated";

pub fn depth_mae_row(view: usize, s: &DepthErrorStats) -> String {
    debug_assert_eq!(INLIER_THRESHOLDS_MM, [2.0, 4.0, 8.0]);
    let r = s.inlier_ratios;
    format!("{view},{},{},{},{},{},{}", s.mae_mm, s.valid_fraction, r[0], r[1], r[2], s.evaluated)
}

pub fn reconstruct(a: &ReconstructArgs, config: &RunConfig) -> Result<(), Error> {
    let mut section = config.pipeline.clone();
    section.prior = a.prior.unwrap_or(section.prior);
    let pipeline = section.to_config()?;
    let scene = load_scene(&a.scene)?;
    let result = reconstruct_scene(&scene, &pipeline)?;

    let (depths, confidence) = (a.out.join("depths"), a.out.join("confidence"));
    create_dir(&depths)?;
    create_dir(&confidence)?;
    let mut csv = format!("{DEPTH_MAE_HEADER}\n");
    for e in &result.estimates {
        let stem = view_stem(e.view);
        write_pfm(&e.depth, depths.join(format!("{stem}.pfm")))?;
        write_pfm(&plane_to_map(&e.confidence)?, confidence.join(format!("{stem}.pfm")))?;
        if let Some(gt) = gt_for(&scene, e) {
            let _ = writeln!(csv, "{}", depth_mae_row(e.view, &depth_mae(&e.depth, &gt?)?));
        }
    }
    if scene.has_gt() {
        write_text(&a.out.join("depth_mae.csv"), &csv)?;
    }
    println!(
        "reconstructed {}/{} views into {}",
        result.estimates.len(),
        scene.len(),
        a.out.display()
    );
    match result.failures.into_iter().next() {
        None => Ok(()),
        Some(f) => {
            eprintln!("view {} failed", f.view);
            Err(f.error)
        }
    }
}

fn load_estimates(scene: &Scene, depths: &Path, confidence: &Path) -> Result<Vec<DepthEstimate>, Error> {
    (0..scene.len())
        .map(|i| {
            let stem = view_stem(i);
            let path = depths.join(format!("{stem}.pfm"));
            if !path.is_file() {
                return Err(Error::MissingComponent(format!("{}", path.display())));
            }
            let depth = read_pfm(&path)?;
            let image = &scene.views[i].image;
            let scale = depth
                .scale_relative_to(image.width() as usize, image.height() as usize)
                .ok_or_else(|| Error::Dimension(format!("{} is not a subsampling of view {i}", path.display())))?;
            let mut e = DepthEstimate::from_depth(i, depth, scale);
            let conf_path = confidence.join(format!("{stem}.pfm"));
            if conf_path.is_file() {
                let c = read_pfm(&conf_path)?;
                if !c.same_size(&e.depth) {
                    return Err(Error::Dimension(format!("{} does not match its depth map", conf_path.display())));
                }
                e.confidence = Plane::from_fn(c.width(), c.height(), |x, y| c.get(x, y));
            }
            Ok(e)
        })
        .collect()
}

pub fn fuse(a: &FuseArgs, config: &RunConfig) -> Result<(), Error> {
    let mut section = config.fusion.clone();
    section.min_views = a.min_views.unwrap_or(section.min_views);
    section.reproj_px = a.reproj_px.unwrap_or(section.reproj_px);
    section.rel_depth = a.rel_depth.unwrap_or(section.rel_depth);
    section.min_confidence = a.min_confidence.unwrap_or(section.min_confidence);
    let params = section.to_params()?;
    let scene = load_scene(&a.scene)?;
    let confidence: PathBuf = a.confidence.clone().unwrap_or_else(|| {
        a.depths
            .parent()
            .map_or_else(|| PathBuf::from("confidence"), |p| p.join("confidence"))
    });
    let estimates = load_estimates(&scene, &a.depths, &confidence)?;
    let cloud = fuse_views(&estimates, &scene, &params)?;
    if let Some(parent) = a.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    write_ply(&cloud, &a.out)?;
    println!("fused {} points into {}", cloud.len(), a.out.display());
    Ok(())
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn evaluate(cmd: &EvaluateCommand, config: &RunConfig) -> Result<(), Error> {
    match cmd {
        EvaluateCommand::Pointcloud {
            recon,
            reference,
            max_dist_mm,
            out,
        } => {
            let cap = max_dist_mm.unwrap_or(config.eval.max_dist_mm);
            if !(cap > 0.0) {
                return Err(Error::Config("max_dist_mm must be > 0".into()));
            }
            let m = point_metrics(&read_ply(recon)?, &read_ply(reference)?, cap)?;
            emit(&format_metrics_csv(&m.rows()), out.as_deref())
        }
        EvaluateCommand::Depth { pred, gt, out } => {
            let pred = read_pfm(pred)?;
            let mut gt = read_pfm(gt)?;
            if let Some(f) = pred.scale_relative_to(gt.width(), gt.height()).filter(|&f| f > 1) {
                gt = box_downsample(&gt, f)?;
            }
            emit(&format_metrics_csv(&depth_mae(&pred, &gt)?.rows()), out.as_deref())
        }
    }
}
