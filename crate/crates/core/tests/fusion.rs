use depthprior::dataio::{DepthMapBuffer, Scene};
use depthprior::fusion::{fuse, FusionParams};
use depthprior::pipeline::DepthEstimate;
use depthprior::synthscene::{SceneSpec, Shape, SyntheticScene};
use depthprior::Error;
use nalgebra::Vector3;

fn gt_estimates(scene: &Scene) -> Vec<DepthEstimate> {
    scene
        .views
        .iter()
        .enumerate()
        .map(|(i, v)| DepthEstimate::from_depth(i, v.gt_depth.clone().unwrap(), 1))
        .collect()
}

fn small(shape: Shape, n_views: usize) -> (SyntheticScene, Scene) {
    let synth = SyntheticScene::new(SceneSpec {
        shape,
        n_views,
        image_size: (96, 64),
        ..Default::default()
    })
    .unwrap();
    let scene = synth.build().unwrap();
    (synth, scene)
}

#[test]
fn ground_truth_fuses_onto_the_surface() {
    for shape in [Shape::TexturedPlane, Shape::SphereOnPlane] {
        let (synth, scene) = small(shape, 5);
        let cloud = fuse(&gt_estimates(&scene), &scene, &FusionParams::default()).unwrap();
        let worst = cloud
            .points
            .iter()
            .map(|p| synth.surface_distance(&Vector3::from(*p)))
            .fold(0.0, f64::max);
        assert!(worst < 0.5, "{shape}: worst {worst} mm");
        let valid0 = scene.views[0].gt_depth.as_ref().unwrap().valid_count();
        assert!(cloud.len() * 2 >= valid0, "{shape}: {} points vs {valid0}", cloud.len());
        assert_eq!(cloud.colors.as_ref().unwrap().len(), cloud.len());
    }
}

#[test]
fn relative_depth_threshold_rejects_five_percent() {
    let (_, scene) = small(Shape::TexturedPlane, 2);
    let params = FusionParams {
        min_consistent_views: 1,
        ..Default::default()
    };
    let scaled = |factor: f32| {
        let mut e = gt_estimates(&scene);
        let gt = &e[1].depth;
        let d = DepthMapBuffer::from_fn(gt.width(), gt.height(), |x, y| gt.get(x, y) * factor);
        e[1] = DepthEstimate::from_depth(1, d, 1);
        e
    };
    assert_eq!(fuse(&scaled(1.05), &scene, &params).unwrap().len(), 0);
    assert!(fuse(&scaled(1.0), &scene, &params).unwrap().len() > 0);
}

#[test]
fn raising_min_consistent_views_never_adds_points() {
    let (_, scene) = small(Shape::SphereOnPlane, 5);
    let estimates = gt_estimates(&scene);
    let count = |p: FusionParams| fuse(&estimates, &scene, &p).unwrap().len();
    let base = FusionParams {
        min_consistent_views: 1,
        ..Default::default()
    };
    let mut last = usize::MAX;
    for m in 1..=4 {
        let n = count(FusionParams {
            min_consistent_views: m,
            ..base
        });
        assert!(n <= last, "min views {m}: {n} > {last}");
        last = n;
    }
}

#[test]
fn each_pixel_feeds_at_most_one_point_and_output_is_deterministic() {
    let (_, scene) = small(Shape::SphereOnPlane, 5);
    let estimates = gt_estimates(&scene);
    let total: usize = estimates.iter().map(|e| e.depth.valid_count()).sum();
    for m in 1..=3 {
        let params = FusionParams {
            min_consistent_views: m,
            ..Default::default()
        };
        let a = fuse(&estimates, &scene, &params).unwrap();
        // Every point consumes the reference pixel and at least m source pixels.
        assert!(a.len() * (m + 1) <= total);
        assert_eq!(a, fuse(&estimates, &scene, &params).unwrap());
    }
}

#[test]
fn low_confidence_pixels_are_skipped() {
    let (_, scene) = small(Shape::TexturedPlane, 5);
    let mut estimates = gt_estimates(&scene);
    for e in &mut estimates {
        e.confidence.data.iter_mut().for_each(|c| *c = 0.05);
    }
    assert!(fuse(&estimates, &scene, &FusionParams::default()).unwrap().is_empty());
}

#[test]
fn cardinality_and_view_order_are_checked() {
    let (_, scene) = small(Shape::TexturedPlane, 3);
    let mut estimates = gt_estimates(&scene);
    estimates.pop();
    assert!(matches!(
        fuse(&estimates, &scene, &FusionParams::default()),
        Err(Error::Config(_))
    ));
    let mut estimates = gt_estimates(&scene);
    estimates.swap(0, 1);
    assert!(fuse(&estimates, &scene, &FusionParams::default()).is_err());
    let bad = FusionParams {
        min_consistent_views: 0,
        ..Default::default()
    };
    assert!(fuse(&gt_estimates(&scene), &scene, &bad).is_err());
}
