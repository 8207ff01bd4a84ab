mod common;

use std::path::Path;

use common::{camera_strategy, depth_strategy, pair_strategy};
use depthprior::dataio::*;
use depthprior::fusion::PointCloud;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pfm_round_trip(depth in depth_strategy(40)) {
        let bytes = encode_pfm(&depth);
        prop_assert_eq!(decode_pfm(&bytes, Path::new("mem")).unwrap(), depth);
    }

    #[test]
    fn cam_round_trip(cam in camera_strategy()) {
        let text = format_cam(&cam);
        let back = parse_cam(&text, cam.width(), cam.height(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, cam);
    }

    #[test]
    fn pair_round_trip(table in pair_strategy()) {
        let text = format_pair(&table);
        prop_assert_eq!(parse_pair(&text, Path::new("mem")).unwrap(), table);
    }

    #[test]
    fn ply_round_trip(
        pts in prop::collection::vec(prop::array::uniform3(-1e4f32..1e4), 0..200),
        colored in any::<bool>(),
    ) {
        let cloud = PointCloud {
            points: pts.iter().map(|p| [p[0] as f64, p[1] as f64, p[2] as f64]).collect(),
            colors: colored.then(|| pts.iter().map(|p| [p[0] as u8, p[1] as u8, p[2] as u8]).collect()),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ply");
        write_ply(&cloud, &path).unwrap();
        let mut expected = cloud.clone();
        if expected.colors.is_none() {
            expected.colors = Some(vec![[255, 255, 255]; expected.len()]);
        }
        prop_assert_eq!(read_ply(&path).unwrap(), expected);
    }
}

#[test]
fn scene_round_trip_on_disk() {
    let spec = depthprior::synthscene::SceneSpec {
        n_views: 3,
        image_size: (48, 32),
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let written = depthprior::synthscene::generate_scene(&spec, dir.path()).unwrap();
    let loaded = load_scene(dir.path()).unwrap();
    assert_eq!(loaded.len(), 3);
    assert_eq!(loaded.pairs, written.pairs);
    for (a, b) in loaded.views.iter().zip(&written.views) {
        assert_eq!(a.image, b.image);
        assert_eq!(a.camera, b.camera);
        assert_eq!(a.gt_depth, b.gt_depth);
    }
}

#[test]
fn missing_pair_file_names_the_fix() {
    let spec = depthprior::synthscene::SceneSpec {
        n_views: 2,
        image_size: (32, 32),
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    depthprior::synthscene::generate_scene(&spec, dir.path()).unwrap();
    std::fs::remove_file(dir.path().join("pair.txt")).unwrap();
    let err = load_scene(dir.path()).unwrap_err();
    assert!(err.is_user_error());
    assert!(err.to_string().contains("pair.txt"), "{err}");
}

#[test]
fn pfm_payload_errors_carry_offsets() {
    let depth = DepthMapBuffer::constant(3, 2, 5.0);
    let mut bytes = encode_pfm(&depth);
    bytes.truncate(bytes.len() - 1);
    let err = decode_pfm(&bytes, Path::new("d.pfm")).unwrap_err();
    assert!(matches!(err, depthprior::Error::Parse { .. }), "{err}");
}
