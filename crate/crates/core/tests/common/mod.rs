#![allow(dead_code)]

use depthprior::dataio::{DepthMapBuffer, PairTable, SourceRef};
use depthprior::geometry::{Camera, CameraIntrinsics, CameraPose};
use depthprior::sensor_sim::{corrupt, CorruptionParams};
use depthprior::synthscene::{SceneSpec, SyntheticScene};
use depthprior::dataio::Scene;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

pub fn camera_strategy() -> impl Strategy<Value = Camera> {
    (
        (32usize..400, 32usize..300),
        (50.0f64..2000.0, 0.8f64..1.25),
        (-0.3f64..0.3, -0.3f64..0.3),
        prop::array::uniform3(-std::f64::consts::PI..std::f64::consts::PI),
        prop::array::uniform3(-500.0f64..500.0),
        (100.0f64..900.0, 0.1f64..10.0),
    )
        .prop_map(|((w, h), (f, aspect), (ox, oy), angles, t, (dmin, dint))| {
            let k = CameraIntrinsics::new(
                f,
                f * aspect,
                w as f64 / 2.0 + ox * w as f64,
                h as f64 / 2.0 + oy * h as f64,
                w,
                h,
            )
            .unwrap();
            let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner();
            let pose = CameraPose::new(r, Vector3::from(t)).unwrap();
            Camera::new(k, pose, dmin, dint).unwrap()
        })
}

pub fn depth_strategy(max: usize) -> impl Strategy<Value = DepthMapBuffer> {
    (1usize..max, 1usize..max).prop_flat_map(|(w, h)| {
        prop::collection::vec(prop_oneof![1 => Just(0.0f32), 4 => 0.001f32..1e5], w * h)
            .prop_map(move |v| DepthMapBuffer::from_values(w, h, v).unwrap())
    })
}

pub fn pair_strategy() -> impl Strategy<Value = PairTable> {
    (2usize..12).prop_flat_map(|n| {
        prop::collection::vec(
            (prop::sample::subsequence((0..n).collect::<Vec<_>>(), 0..n), prop::collection::vec(0.0f64..1e3, n)),
            n,
        )
        .prop_map(move |rows| PairTable {
            sources: rows
                .into_iter()
                .enumerate()
                .map(|(i, (ids, scores))| {
                    ids.into_iter()
                        .filter(|&j| j != i)
                        .map(|j| SourceRef { view: j, score: scores[j] })
                        .collect()
                })
                .collect(),
        })
    })
}

/// Synthetic scene whose views carry priors corrupted from ground truth.
pub fn scene_with_priors(spec: SceneSpec) -> (SyntheticScene, Scene) {
    let synth = SyntheticScene::new(spec).unwrap();
    let mut scene = synth.build().unwrap();
    for (i, v) in scene.views.iter_mut().enumerate() {
        let params = CorruptionParams {
            seed: i as u64,
            ..Default::default()
        };
        v.prior_depth = Some(corrupt(v.gt_depth.as_ref().unwrap(), &params).unwrap());
    }
    (synth, scene)
}
