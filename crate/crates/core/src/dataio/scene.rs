use std::path::{Path, PathBuf};

use image::RgbImage;

use super::{read_cam, read_pair, read_pfm, write_cam, write_pair, write_pfm, DepthMapBuffer, PairTable};
use crate::error::{Error, Result};
use crate::geometry::Camera;

/// One posed image with optional depth maps.
#[derive(Debug, Clone)]
pub struct View {
    pub image: RgbImage,
    pub camera: Camera,
    pub gt_depth: Option<DepthMapBuffer>,
    pub prior_depth: Option<DepthMapBuffer>,
}

impl View {
    pub fn new(
        image: RgbImage,
        camera: Camera,
        gt_depth: Option<DepthMapBuffer>,
        prior_depth: Option<DepthMapBuffer>,
    ) -> Result<Self> {
        let view = View {
            image,
            camera,
            gt_depth,
            prior_depth,
        };
        view.validate()?;
        Ok(view)
    }

    fn validate(&self) -> Result<()> {
        let (w, h) = (self.image.width() as usize, self.image.height() as usize);
        if (w, h) != (self.camera.width(), self.camera.height()) {
            return Err(Error::Dimension(format!(
                "image is {w}x{h} but camera expects {}x{}",
                self.camera.width(),
                self.camera.height()
            )));
        }
        for (name, d) in [("ground-truth", &self.gt_depth), ("prior", &self.prior_depth)] {
            if let Some(d) = d {
                if d.scale_relative_to(w, h).is_none() {
                    return Err(Error::Dimension(format!(
                        "{name} depth {}x{} is not an integer subsampling of the {w}x{h} image",
                        d.width(),
                        d.height()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Integer downsampling factor of the prior relative to the image.
    pub fn prior_scale(&self) -> Option<usize> {
        self.prior_depth
            .as_ref()
            .and_then(|d| d.scale_relative_to(self.camera.width(), self.camera.height()))
    }

    pub fn gt_scale(&self) -> Option<usize> {
        self.gt_depth
            .as_ref()
            .and_then(|d| d.scale_relative_to(self.camera.width(), self.camera.height()))
    }
}

/// Views plus the source pairing table.
#[derive(Debug, Clone)]
pub struct Scene {
    pub views: Vec<View>,
    pub pairs: PairTable,
}

impl Scene {
    pub fn new(views: Vec<View>, pairs: PairTable) -> Result<Self> {
        if pairs.len() != views.len() {
            return Err(Error::Config(format!(
                "pair table covers {} views, scene has {}",
                pairs.len(),
                views.len()
            )));
        }
        pairs.validate()?;
        Ok(Scene { views, pairs })
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn has_prior(&self) -> bool {
        self.views.iter().any(|v| v.prior_depth.is_some())
    }

    pub fn has_gt(&self) -> bool {
        self.views.iter().all(|v| v.gt_depth.is_some()) && !self.views.is_empty()
    }
}

/// Zero-padded file stem for a view index.
pub fn view_stem(index: usize) -> String {
    format!("{index:08}")
}

fn numeric_stems(dir: &Path, ext: &str) -> Result<Vec<(u64, PathBuf)>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.extension().and_then(|e| e.to_str()).map(|e| e.eq_ignore_ascii_case(ext)) != Some(true) {
            continue;
        }
        let Some(id) = path.file_stem().and_then(|s| s.to_str()).and_then(|s| s.parse::<u64>().ok()) else {
            continue;
        };
        out.push((id, path));
    }
    out.sort();
    Ok(out)
}

fn require_dir(root: &Path, name: &str) -> Result<PathBuf> {
    let p = root.join(name);
    if p.is_dir() {
        Ok(p)
    } else {
        Err(Error::MissingComponent(format!("{} (expected directory {})", name, p.display())))
    }
}

/// Optional per-view depth maps from `dir/<stem>.pfm`. When the directory
/// exists every view must have a file.
fn optional_depths(root: &Path, name: &str, stems: &[String]) -> Result<Vec<Option<DepthMapBuffer>>> {
    let dir = root.join(name);
    if !dir.is_dir() {
        return Ok(vec![None; stems.len()]);
    }
    stems
        .iter()
        .map(|stem| {
            let p = dir.join(format!("{stem}.pfm"));
            if !p.is_file() {
                return Err(Error::MissingComponent(format!("{}", p.display())));
            }
            read_pfm(&p).map(Some)
        })
        .collect()
}

pub fn load_scene(dir: impl AsRef<Path>) -> Result<Scene> {
    let root = dir.as_ref();
    if !root.is_dir() {
        return Err(Error::MissingComponent(format!("scene directory {}", root.display())));
    }
    let images_dir = require_dir(root, "images")?;
    let cams_dir = require_dir(root, "cams")?;
    let pair_path = root.join("pair.txt");
    if !pair_path.is_file() {
        return Err(Error::MissingComponent(format!(
            "pair.txt in {} (generate the scene with `synthscene` or supply a pairing file)",
            root.display()
        )));
    }
    let images = numeric_stems(&images_dir, "png")?;
    if images.is_empty() {
        return Err(Error::MissingComponent(format!("no PNG images in {}", images_dir.display())));
    }
    let stems: Vec<String> = images
        .iter()
        .map(|(_, p)| p.file_stem().unwrap().to_string_lossy().into_owned())
        .collect();
    let gts = optional_depths(root, "depths_gt", &stems)?;
    let priors = optional_depths(root, "depths_prior", &stems)?;

    let mut views = Vec::with_capacity(images.len());
    for (((_, img_path), stem), (gt, prior)) in images.iter().zip(&stems).zip(gts.into_iter().zip(priors)) {
        let image = image::open(img_path)
            .map_err(|e| Error::Image {
                path: img_path.clone(),
                source: e,
            })?
            .to_rgb8();
        let cam_path = cams_dir.join(format!("{stem}_cam.txt"));
        if !cam_path.is_file() {
            return Err(Error::MissingComponent(format!("{}", cam_path.display())));
        }
        let camera = read_cam(&cam_path, image.width() as usize, image.height() as usize)?;
        views.push(View::new(image, camera, gt, prior)?);
    }
    let pairs = read_pair(&pair_path)?;
    Scene::new(views, pairs)
}

/// Writes a scene in the directory layout read by [`load_scene`].
pub fn write_scene(scene: &Scene, dir: impl AsRef<Path>) -> Result<()> {
    let root = dir.as_ref();
    let mk = |name: &str| -> Result<PathBuf> {
        let p = root.join(name);
        std::fs::create_dir_all(&p).map_err(|e| Error::io(&p, e))?;
        Ok(p)
    };
    let images = mk("images")?;
    let cams = mk("cams")?;
    let gt_dir = if scene.views.iter().any(|v| v.gt_depth.is_some()) {
        Some(mk("depths_gt")?)
    } else {
        None
    };
    let prior_dir = if scene.has_prior() { Some(mk("depths_prior")?) } else { None };
    for (i, view) in scene.views.iter().enumerate() {
        let stem = view_stem(i);
        let img_path = images.join(format!("{stem}.png"));
        view.image.save(&img_path).map_err(|e| Error::Image {
            path: img_path.clone(),
            source: e,
        })?;
        write_cam(&view.camera, cams.join(format!("{stem}_cam.txt")))?;
        if let (Some(dir), Some(d)) = (&gt_dir, &view.gt_depth) {
            write_pfm(d, dir.join(format!("{stem}.pfm")))?;
        }
        if let (Some(dir), Some(d)) = (&prior_dir, &view.prior_depth) {
            write_pfm(d, dir.join(format!("{stem}.pfm")))?;
        }
    }
    write_pair(&scene.pairs, root.join("pair.txt"))
}
