//! Acceptance report: one PASS/FAIL line per criterion with the measured
//! value, the pinned tolerance and the runtime against its budget.
//!
//! Runs without the libtest harness so that an unmet criterion is reported
//! next to the others instead of hiding them. Set `ACCEPTANCE_STRICT=1` to
//! turn any FAIL into a nonzero exit status.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use common::{camera_strategy, depth_strategy, pair_strategy, scene_with_priors};
use depthprior::dataio::*;
use depthprior::densify::{propagate, PropagationParams};
use depthprior::eval::*;
use depthprior::fusion::{fuse, FusionParams, PointCloud};
use depthprior::geometry::{reproject, Camera, CameraPose, PlaneSweep};
use depthprior::matcher::{regress_depth, CostVolume, HypothesisSet, RegressionMode};
use depthprior::pipeline::*;
use depthprior::raster::Plane;
use depthprior::rng::{hash3, unit_open};
use depthprior::sensor_sim::{box_downsample, corrupt, CorruptionParams};
use depthprior::synthscene::{SceneSpec, Shape, SyntheticScene};
use nalgebra::{Rotation3, Vector2, Vector3};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

type Outcome = Result<String, String>;

struct Report {
    failures: usize,
}

impl Report {
    fn run(&mut self, id: &str, title: &str, budget: Option<Duration>, f: impl FnOnce() -> Outcome) {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let over = budget.is_some_and(|b| elapsed > b);
        let time = match budget {
            Some(b) => format!("{:.2}s / {:.0}s", elapsed.as_secs_f64(), b.as_secs_f64()),
            None => format!("{:.2}s", elapsed.as_secs_f64()),
        };
        let (status, detail) = match outcome {
            Ok(d) if !over => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget")),
            Err(d) => ("FAIL", d),
        };
        if status == "FAIL" {
            self.failures += 1;
        }
        println!("{status} [{id}] {title}: {detail} ({time})");
    }
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

fn random(seed: u64, a: usize, b: u64) -> f64 {
    unit_open(hash3(seed, a as u64, b))
}

// 1 -------------------------------------------------------------------------

fn corruption_exactness() -> Outcome {
    // 1600 px wide so that b·f is the unscaled 289200; 4x4 blocks of one depth.
    let (w, h) = (1600, 4);
    let depth_of = |block: usize| 400.0 + block as f32 * 2.0;
    let gt = DepthMapBuffer::from_fn(w, h, |x, _| depth_of(x / 4));
    let params = CorruptionParams {
        sigma_d: 0.0,
        ..Default::default()
    };
    let out = corrupt(&gt, &params).unwrap();
    let bf = params.baseline_focal(w);
    let mut worst: f64 = 0.0;
    for i in 0..out.width() {
        let d = depth_of(i) as f64;
        let expected = bf / (bf / d + 0.5);
        worst = worst.max((out.get(i, 0) as f64 - expected).abs() / expected);
    }
    let at = |d: f32| out.get(((d - 400.0) / 2.0) as usize, 0) as f64;
    let (v600, v1000) = (at(600.0), at(1000.0));
    let pinned = (v600 - 599.3782).abs() < 1e-4 && (v1000 - 998.2741).abs() < 1e-4;
    check(
        worst <= 1e-6 && pinned,
        format!("max rel err {worst:.2e} (<= 1e-6) over 400..1200 mm; d(600) = {v600:.4}, d(1000) = {v1000:.4}"),
    )
}

// 2 -------------------------------------------------------------------------

fn corruption_statistics() -> Outcome {
    let (w, h, d) = (1600, 1000, 1000.0f32);
    let gt = DepthMapBuffer::constant(w, h, d);
    let params = CorruptionParams { seed: 7, ..Default::default() };
    let one = in_pool(1, || corrupt(&gt, &params).unwrap());
    let many = in_pool(4, || corrupt(&gt, &params).unwrap());
    let same = one.values().iter().zip(many.values()).all(|(a, b)| a.to_bits() == b.to_bits());
    let bf = params.baseline_focal(w);
    let noise: Vec<f64> = one
        .values()
        .iter()
        .map(|&c| bf / c as f64 - bf / d as f64 - 0.5)
        .collect();
    let n = noise.len() as f64;
    let mean = noise.iter().sum::<f64>() / n;
    let std = (noise.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let rel = (std - params.sigma_d).abs() / params.sigma_d;
    check(
        rel <= 0.03 && same && noise.len() >= 100_000,
        format!(
            "std {std:.5} vs {:.5} (rel {rel:.4} <= 0.03) over {} samples; 1 vs 4 threads bitwise equal: {same}",
            params.sigma_d,
            noise.len()
        ),
    )
}

// 3 -------------------------------------------------------------------------

fn neighbour(cam: &Camera, shift: [f64; 3], angles: [f64; 3]) -> Camera {
    let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner() * cam.pose.rotation;
    let center = cam.pose.center() + Vector3::from(shift);
    Camera::new(cam.intrinsics, CameraPose::new(r, -r * center).unwrap(), cam.depth_min, cam.depth_interval).unwrap()
}

fn geometry_suite() -> Outcome {
    let strategy = (
        camera_strategy(),
        prop::array::uniform3(-200.0f64..200.0),
        prop::array::uniform3(-0.3f64..0.3),
        (0.0f64..1.0, 0.0f64..1.0, 300.0f64..3000.0),
    );
    let state = std::cell::RefCell::new(([0.0f64; 5], 0usize));
    let result = runner(10_000).run(&strategy, |(cam, shift, angles, (fx, fy, d))| {
        let (worst, checked_fd) = &mut *state.borrow_mut();
        let p = Vector2::new(fx * (cam.width() - 1) as f64, fy * (cam.height() - 1) as f64);
        let (q, z) = cam.project(&cam.backproject(&p, d).unwrap()).unwrap();
        worst[0] = worst[0].max((q - p).norm());
        worst[1] = worst[1].max((z - d).abs());
        worst[2] = worst[2].max((reproject(&cam, &cam, &p, d).unwrap().pixel - p).norm());
        let src = neighbour(&cam, shift, angles);
        if let Ok(there) = reproject(&cam, &src, &p, d) {
            if let Ok(back) = reproject(&src, &cam, &there.pixel, there.depth) {
                worst[3] = worst[3].max((back.pixel - p).norm()).max((back.depth - d).abs() / d);
            }
        }
        let sweep = PlaneSweep::new(&cam, &src);
        let h = 0.01;
        if let (Some((_, dq)), Some(lo), Some(hi)) = (
            sweep.map_with_derivative(p.x, p.y, d),
            sweep.map(p.x, p.y, d - h),
            sweep.map(p.x, p.y, d + h),
        ) {
            let fd = Vector2::new((hi.0 - lo.0) / (2.0 * h), (hi.1 - lo.1) / (2.0 * h));
            let an = Vector2::new(dq[0], dq[1]);
            worst[4] = worst[4].max((fd - an).norm() / an.norm().max(1e-9));
            *checked_fd += 1;
        }
        Ok(())
    });
    let (worst, checked_fd) = state.into_inner();
    let ok = result.is_ok()
        && worst[0] <= 1e-6
        && worst[1] <= 1e-6
        && worst[2] <= 1e-9
        && worst[3] <= 1e-5
        && worst[4] <= 1e-4;
    check(
        ok,
        format!(
            "10000 configs: project/backproject {:.1e} px (<= 1e-6), {:.1e} mm (<= 1e-6); self-reproject {:.1e} px (<= 1e-9); \
             round trip {:.1e} (<= 1e-5); d p'/dd vs FD rel {:.1e} (<= 1e-4) on {checked_fd} configs",
            worst[0], worst[1], worst[2], worst[3], worst[4]
        ),
    )
}

// 4 -------------------------------------------------------------------------

fn wta_oracle(trials: usize) -> bool {
    let depths = [400.0, 450.0, 500.0, 550.0, 600.0];
    (0..trials).all(|t| {
        let n = 1 + t % 20;
        let costs: Vec<f32> = (0..n * 5).map(|i| 2.0 * random(t as u64, i, 0) as f32).collect();
        let valid: Vec<bool> = (0..n * 5).map(|i| random(t as u64, i, 1) < 0.85).collect();
        let vol = CostVolume {
            width: n,
            height: 1,
            count: 5,
            stride: 1,
            costs,
            valid,
            depths: (0..n).flat_map(|_| depths).collect(),
        };
        let (out, _) = regress_depth(&vol, RegressionMode::WinnerTakeAll, 0.02).unwrap();
        (0..n).all(|px| {
            let best = (0..5)
                .filter(|&d| vol.valid[vol.index(px, 0, d)])
                .min_by(|&a, &b| vol.costs[vol.index(px, 0, a)].total_cmp(&vol.costs[vol.index(px, 0, b)]));
            out.get(px, 0) == best.map_or(0.0, |b| depths[b] as f32)
        })
    })
}

fn propagate_oracle_error(trials: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for t in 0..trials {
        let seed = t as u64;
        let (w, h) = (3 + t % 11, 3 + (t / 11) % 11);
        let k = [3usize, 5, 7][t % 3];
        let (sc, ss) = (0.02 + random(seed, 0, 9), 0.3 + 3.7 * random(seed, 1, 9));
        let sparse = DepthMapBuffer::from_fn(w, h, |x, y| {
            if random(seed, y * w + x, 0) < 0.4 {
                0.0
            } else {
                500.0 + 300.0 * random(seed, y * w + x, 1) as f32
            }
        });
        let guide = Plane::from_fn(w, h, |x, y| random(seed, y * w + x, 2) as f32);
        let params = PropagationParams {
            window: k,
            sigma_color: sc,
            sigma_spatial: ss,
        };
        let out = propagate(&sparse, &guide, &params).unwrap();
        let r = (k / 2) as i64;
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let (mut num, mut z) = (0.0, 0.0);
                for qy in (y - r).max(0)..=(y + r).min(h as i64 - 1) {
                    for qx in (x - r).max(0)..=(x + r).min(w as i64 - 1) {
                        let d = sparse.get(qx as usize, qy as usize) as f64;
                        if d <= 0.0 {
                            continue;
                        }
                        let di = guide.get(qx as usize, qy as usize) as f64 - guide.get(x as usize, y as usize) as f64;
                        let ds = ((qx - x).pow(2) + (qy - y).pow(2)) as f64;
                        let wgt = (-di * di / (2.0 * sc * sc)).exp() * (-ds / (2.0 * ss * ss)).exp();
                        num += d * wgt;
                        z += wgt;
                    }
                }
                let expected = if z > 0.0 { num / z } else { 0.0 };
                worst = worst.max((out.get(x as usize, y as usize) as f64 - expected).abs());
            }
        }
    }
    worst
}

fn kd_oracle(trials: usize) -> bool {
    (0..trials).all(|t| {
        let seed = 1000 + t as u64;
        let n = 1 + (t * 37) % 500;
        let pt = |i: usize, s: u64| -> [f64; 3] {
            [0, 1, 2].map(|c| 200.0 * random(seed, i, s * 3 + c) - 100.0)
        };
        let points: Vec<[f64; 3]> = (0..n).map(|i| pt(i, 0)).collect();
        let tree = KdTree::new(&points);
        (0..200).all(|i| {
            let q = pt(i, 1);
            let brute = points
                .iter()
                .map(|p| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2))
                .fold(f64::INFINITY, f64::min);
            tree.nearest(&q).map(|(_, d2)| d2) == Some(brute)
        })
    })
}

fn oracle_equivalence() -> Outcome {
    let wta = wta_oracle(500);
    let prop_err = propagate_oracle_error(300);
    let kd = kd_oracle(100);
    check(
        wta && prop_err <= 1e-3 && kd,
        format!(
            "wta = brute force on 500 volumes: {wta}; propagate vs direct sum max {prop_err:.1e} mm (<= 1e-3, f32 output) \
             on 300 maps; kd-tree = brute force on 100 clouds of <= 500 points: {kd}"
        ),
    )
}

// 5 -------------------------------------------------------------------------

/// Stage-1 depth span of a camera under `config`.
fn depth_range(camera: &Camera, config: &PipelineConfig) -> f64 {
    let s = &config.stages[0];
    s.interval.resolve(camera) * (s.n_hypotheses - 1) as f64
}

fn gt_at(view: &View, scale: usize) -> DepthMapBuffer {
    box_downsample(view.gt_depth.as_ref().unwrap(), scale).unwrap()
}

fn end_to_end_accuracy() -> Outcome {
    let scene = SyntheticScene::new(SceneSpec::default()).unwrap().build().unwrap();
    let config = PipelineConfig::default();
    let rec = in_pool(1, || reconstruct_scene(&scene, &config).unwrap());
    if !rec.failures.is_empty() {
        return Err(format!("{} views failed", rec.failures.len()));
    }
    let (mut good, mut total, mut processed, mut improved) = (0usize, 0usize, 0usize, 0usize);
    let mut per_view = Vec::new();
    for e in &rec.estimates {
        let view = &scene.views[e.view];
        let gt = gt_at(view, e.final_scale());
        let limit = 0.01 * depth_range(&view.camera, &config);
        let (mut g, mut n) = (0, 0);
        for (p, t) in e.depth.values().iter().zip(gt.values()) {
            if *t > 0.0 {
                n += 1;
                g += (*p > 0.0 && ((p - t).abs() as f64) < limit) as usize;
            }
        }
        per_view.push(format!("{:.1}%", 100.0 * g as f64 / n as f64));
        good += g;
        total += n;
        let r = e.refine.expect("none mode refines");
        processed += r.processed;
        improved += r.improved;
    }
    let frac = good as f64 / total as f64;
    let gn = improved as f64 / processed as f64;
    check(
        frac >= 0.9 && gn >= 0.9,
        format!(
            "{:.2}% of GT-valid pixels (all views) within 1% of the stage-1 depth range (>= 90%; per view {}); \
             GN lowered the residual on {:.2}% of refined pixels (>= 90%); single-threaded",
            100.0 * frac,
            per_view.join(" "),
            100.0 * gn
        ),
    )
}

// 6 -------------------------------------------------------------------------

/// MAE pooled over every view's evaluated pixels.
fn pooled_mae(scene: &Scene, estimates: &[DepthEstimate]) -> f64 {
    let (mut sum, mut n) = (0.0, 0usize);
    for e in estimates {
        let s = depth_mae(&e.depth, &gt_at(&scene.views[e.view], e.final_scale())).unwrap();
        if s.evaluated > 0 {
            sum += s.mae_mm * s.evaluated as f64;
            n += s.evaluated;
        }
    }
    sum / n as f64
}

fn hyps_at(set: &HypothesisSet, x: usize, y: usize) -> Option<Vec<f64>> {
    let mut out = vec![0.0; set.count()];
    set.fill(x, y, &mut out).then_some(out)
}

/// Prior containment and missing-prior fallback at every stage-1 pixel,
/// with holes punched into the prior so both branches are exercised.
fn prior_invariants_hold(scene: &Scene, range: &PipelineConfig) -> bool {
    scene.views.iter().all(|view| {
        let mut view = view.clone();
        let prior = view.prior_depth.as_mut().unwrap();
        for y in 0..prior.height() {
            for x in 0..prior.width() {
                if (x * 7 + y * 3) % 5 == 0 {
                    prior.set(x, y, 0.0);
                }
            }
        }
        let (r, _) = first_stage_hypotheses(&view, range).unwrap();
        let (n, _) = first_stage_hypotheses(&view, &PipelineConfig::default()).unwrap();
        let prior = view.prior_depth.as_ref().unwrap();
        (0..prior.height()).all(|y| {
            (0..prior.width()).all(|x| {
                let h = hyps_at(&r, x, y).unwrap();
                let p = prior.get(x, y) as f64;
                if p > 0.0 {
                    h[0] <= p && p <= h[h.len() - 1]
                } else {
                    let g = hyps_at(&n, x, y).unwrap();
                    h.iter().zip(&g).all(|(a, b)| a.to_bits() == b.to_bits())
                }
            })
        })
    })
}

fn prior_improves_low_texture() -> Outcome {
    let (_, scene) = scene_with_priors(SceneSpec {
        texture_strength: 0.1,
        ..Default::default()
    });
    let run = |mode: PriorMode| {
        let config = PipelineConfig {
            prior_mode: mode,
            ..Default::default()
        };
        (reconstruct_scene(&scene, &config).unwrap().estimates, config)
    };
    let (none, _) = run(PriorMode::None);
    let (range, range_config) = run(PriorMode::Range);
    let (init, _) = run(PriorMode::Init);
    let (m_none, m_range, m_init) = (
        pooled_mae(&scene, &none),
        pooled_mae(&scene, &range),
        pooled_mae(&scene, &init),
    );
    let v0 = |e: &[DepthEstimate]| depth_mae(&e[0].depth, &gt_at(&scene.views[0], e[0].final_scale())).unwrap().mae_mm;
    let gain = 1.0 - m_range / m_none;
    let invariants = prior_invariants_hold(&scene, &range_config);
    check(
        gain >= 0.2 && invariants,
        format!(
            "MAE none {m_none:.3} mm, range {m_range:.3} mm: {:.1}% lower (>= 20%); init {m_init:.3} mm; \
             view 0 alone none {:.3} / range {:.3}; containment and fallback bitwise: {invariants}",
            100.0 * gain,
            v0(&none),
            v0(&range)
        ),
    )
}

fn stage_monotonicity() -> Outcome {
    let config = PipelineConfig::default();
    let (mut monotone, mut views) = (0, 0);
    for shape in [Shape::TexturedPlane, Shape::SphereOnPlane] {
        for seed in 0..3 {
            let scene = SyntheticScene::new(SceneSpec {
                shape,
                seed,
                ..Default::default()
            })
            .unwrap()
            .build()
            .unwrap();
            for e in reconstruct_scene(&scene, &config).unwrap().estimates {
                let maes: Vec<f64> = e
                    .stages
                    .iter()
                    .map(|s| depth_mae(&s.depth, &gt_at(&scene.views[e.view], s.scale)).unwrap().mae_mm)
                    .collect();
                monotone += maes.windows(2).all(|w| w[1] <= w[0]) as usize;
                views += 1;
            }
        }
    }
    let frac = monotone as f64 / views as f64;
    check(
        frac >= 0.9,
        format!("{monotone}/{views} views with non-increasing stage MAE ({:.1}%, >= 90%)", 100.0 * frac),
    )
}

// 7 -------------------------------------------------------------------------

fn gt_estimates(scene: &Scene) -> Vec<DepthEstimate> {
    scene
        .views
        .iter()
        .enumerate()
        .map(|(i, v)| DepthEstimate::from_depth(i, v.gt_depth.clone().unwrap(), 1))
        .collect()
}

fn fusion_sanity() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for shape in [Shape::TexturedPlane, Shape::SphereOnPlane] {
        let synth = SyntheticScene::new(SceneSpec {
            shape,
            ..Default::default()
        })
        .unwrap();
        let scene = synth.build().unwrap();
        let estimates = gt_estimates(&scene);
        let cloud = fuse(&estimates, &scene, &FusionParams::default()).unwrap();
        let dist: Vec<f64> = cloud.points.iter().map(|p| synth.surface_distance(&Vector3::from(*p))).collect();
        let worst = dist.iter().copied().fold(0.0, f64::max);
        let mean = dist.iter().sum::<f64>() / dist.len().max(1) as f64;
        let valid0 = scene.views[0].gt_depth.as_ref().unwrap().valid_count();
        let ratio = cloud.len() as f64 / valid0 as f64;
        let counts: Vec<usize> = (1..=4)
            .map(|m| {
                let p = FusionParams {
                    min_consistent_views: m,
                    ..Default::default()
                };
                fuse(&estimates, &scene, &p).unwrap().len()
            })
            .collect();
        let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
        ok &= !cloud.is_empty() && worst < 0.5 && ratio >= 0.5 && monotone;
        parts.push(format!(
            "{shape}: max dist {worst:.4} mm (< 0.5), mean {mean:.4}; {} points = {:.0}% of view-0 valid pixels (>= 50%); \
             count vs min views 1..4 {counts:?}",
            cloud.len(),
            100.0 * ratio
        ));
    }
    check(ok, parts.join("; "))
}

fn fusion_threshold_monotonicity() -> Outcome {
    let scene = SyntheticScene::new(SceneSpec {
        shape: Shape::SphereOnPlane,
        image_size: (96, 64),
        ..Default::default()
    })
    .unwrap()
    .build()
    .unwrap();
    let estimates = gt_estimates(&scene);
    let base = FusionParams {
        min_consistent_views: 1,
        ..Default::default()
    };
    let count = |p: FusionParams| fuse(&estimates, &scene, &p).unwrap().len();
    let reproj: Vec<usize> = [2.0, 1.0, 0.5, 0.25]
        .iter()
        .map(|&px| count(FusionParams { max_reproj_px: px, ..base }))
        .collect();
    let rel: Vec<usize> = [0.05, 0.01, 0.001, 0.0001]
        .iter()
        .map(|&r| count(FusionParams { max_rel_depth_diff: r, ..base }))
        .collect();
    let conf: Vec<usize> = [0.0, 0.5, 1.0]
        .iter()
        .map(|&c| count(FusionParams { min_confidence: c, ..base }))
        .collect();
    let mono = |v: &[usize]| v.windows(2).all(|w| w[1] <= w[0]);
    check(
        mono(&reproj) && mono(&rel) && mono(&conf),
        format!("counts while tightening: reproj px 2..0.25 {reproj:?}, rel depth 0.05..1e-4 {rel:?}, confidence {conf:?}"),
    )
}

// 8 -------------------------------------------------------------------------

fn loss_functionals() -> Outcome {
    let gt = DepthMapBuffer::from_fn(5, 2, |x, y| 500.0 + (x + 5 * y) as f32);
    let plus = |k: f32| DepthMapBuffer::from_fn(5, 2, |x, y| gt.get(x, y) + k);
    let l = fastmvs_loss(&plus(1.0), &plus(2.0), &gt).unwrap();
    let w = StagedLossWeights::default();
    let cas = combine_stage_losses(&[1.0, 1.0, 1.0], &w).unwrap();
    let zero = combine_stage_losses(&[0.0, 0.0, 0.0], &w).unwrap();
    let ok = (l.sum, l.mean, l.count) == (30.0, 3.0, 10) && cas == 3.5 && zero == 0.0 && w.0 == vec![0.5, 1.0, 2.0];
    check(
        ok,
        format!(
            "fastmvs sum {} mean {} over {} px (30 / 3); cas {} (3.5); weights {:?} ([0.5, 1, 2])",
            l.sum, l.mean, l.count, cas, w.0
        ),
    )
}

// 9 -------------------------------------------------------------------------

fn format_round_trips() -> Outcome {
    let cases = 256;
    let pfm = runner(cases).run(&depth_strategy(40), |d| {
        prop_assert_eq!(decode_pfm(&encode_pfm(&d), Path::new("mem")).unwrap(), d);
        Ok(())
    });
    let cam = runner(cases).run(&camera_strategy(), |c| {
        let back = parse_cam(&format_cam(&c), c.width(), c.height(), Path::new("mem")).unwrap();
        prop_assert_eq!(back, c);
        Ok(())
    });
    let pair = runner(cases).run(&pair_strategy(), |t| {
        prop_assert_eq!(parse_pair(&format_pair(&t), Path::new("mem")).unwrap(), t);
        Ok(())
    });
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.ply");
    let ply = runner(cases).run(
        &prop::collection::vec((prop::array::uniform3(-1e4f32..1e4), prop::array::uniform3(any::<u8>())), 0..200),
        |pts| {
            let cloud = PointCloud {
                points: pts.iter().map(|(p, _)| p.map(|v| v as f64)).collect(),
                colors: Some(pts.iter().map(|(_, c)| *c).collect()),
            };
            write_ply(&cloud, &path).unwrap();
            prop_assert_eq!(read_ply(&path).unwrap(), cloud);
            Ok(())
        },
    );
    let r = [pfm.is_ok(), cam.is_ok(), pair.is_ok(), ply.is_ok()];
    check(
        r.iter().all(|v| *v),
        format!("{cases} random instances each: pfm {} cam {} pair {} ply {}", r[0], r[1], r[2], r[3]),
    )
}

fn main() {
    let mut report = Report { failures: 0 };
    report.run("1", "corruption exactness", secs(1), corruption_exactness);
    report.run("2", "corruption statistics", secs(5), corruption_statistics);
    report.run("3", "geometry and gradient suite", secs(5), geometry_suite);
    report.run("4", "oracle equivalence", secs(10), oracle_equivalence);
    report.run("5", "end-to-end accuracy, textured plane, prior_mode=none", secs(60), end_to_end_accuracy);
    report.run("6", "range prior on low texture (texture 0.1)", secs(90), prior_improves_low_texture);
    report.run("6b", "stage-wise MAE non-increasing on textured scenes", None, stage_monotonicity);
    report.run("7", "fusion of exact depth", secs(30), fusion_sanity);
    report.run("7b", "fusion count under every tightened threshold", None, fusion_threshold_monotonicity);
    report.run("8", "loss functionals", None, loss_functionals);
    report.run("9", "format round trips", None, format_round_trips);
    println!("acceptance: {} failed", report.failures);
    if report.failures > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
