//! Per-pixel Gauss-Newton depth refinement against the photometric error
//! `E(p) = Σ_i ‖F_i(p_i'(d)) - F_0(p)‖²` over source views `i`.
//!
//! Depth is a scalar per pixel, so `JᵀJ` is a scalar and each update is
//! `δ = -Jᵀr / (JᵀJ + μ)` in millimetres, clamped to a multiple of the
//! camera depth interval and accepted only if it lowers the error (halving
//! up to three times otherwise).

use rayon::prelude::*;

use crate::dataio::DepthMapBuffer;
use crate::error::{Error, Result};
use crate::geometry::{Camera, PlaneSweep};
use crate::matcher::FeatureImage;
use crate::raster::Plane;

const BACKTRACK_STEPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GnParams {
    pub max_iters: usize,
    /// Damping `μ` added to `JᵀJ`.
    pub damping: f64,
    /// Largest step per iteration, in multiples of the depth interval.
    pub step_clamp: f64,
    pub min_valid_sources: usize,
    /// Residual weight of each feature channel.
    pub channel_weights: [f64; 3],
}

impl Default for GnParams {
    fn default() -> Self {
        GnParams {
            max_iters: 3,
            damping: 1e-3,
            step_clamp: 1.0,
            min_valid_sources: 1,
            channel_weights: [1.0, 0.5, 0.5],
        }
    }
}

impl GnParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.damping >= 0.0) {
            return Err(Error::Config("damping must be >= 0".into()));
        }
        if !(self.step_clamp > 0.0) {
            return Err(Error::Config("step_clamp must be > 0".into()));
        }
        if self.min_valid_sources < 1 {
            return Err(Error::Config("min_valid_sources must be >= 1".into()));
        }
        Ok(())
    }
}

/// Damped Gauss-Newton step for a scalar parameter from stacked residuals
/// and their derivatives.
pub fn gauss_newton_step(residuals: &[f64], jacobian: &[f64], damping: f64) -> f64 {
    let (mut g, mut h) = (0.0, 0.0);
    for (r, j) in residuals.iter().zip(jacobian) {
        g += j * r;
        h += j * j;
    }
    let denom = h + damping;
    if denom > 0.0 {
        -g / denom
    } else {
        0.0
    }
}

/// Minimizes `Σ r(x)²` over a scalar `x` with clamped, backtracked GN
/// steps. `eval` returns residuals and derivatives at `x`, or `None` where
/// the objective is undefined. Returns the final `x` and the errors before
/// and after.
pub fn refine_scalar<F>(x0: f64, params: &GnParams, clamp: f64, mut eval: F) -> Option<(f64, f64, f64)>
where
    F: FnMut(f64, &mut Vec<f64>, &mut Vec<f64>) -> bool,
{
    let (mut r, mut j) = (Vec::new(), Vec::new());
    if !eval(x0, &mut r, &mut j) {
        return None;
    }
    let energy = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();
    let e0 = energy(&r);
    let (mut x, mut e) = (x0, e0);
    for _ in 0..params.max_iters {
        let mut step = gauss_newton_step(&r, &j, params.damping).clamp(-clamp, clamp);
        let mut accepted = false;
        let (mut rt, mut jt) = (Vec::new(), Vec::new());
        for _ in 0..=BACKTRACK_STEPS {
            if step == 0.0 {
                break;
            }
            let xt = x + step;
            if eval(xt, &mut rt, &mut jt) {
                let et = energy(&rt);
                if et < e {
                    x = xt;
                    e = et;
                    std::mem::swap(&mut r, &mut rt);
                    std::mem::swap(&mut j, &mut jt);
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Some((x, e0, e))
}

/// Refined depth plus per-pixel photometric error before and after.
#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub depth: DepthMapBuffer,
    /// Error at the input depth; 0 where the pixel was not processed.
    pub initial_error: Plane,
    pub final_error: Plane,
    /// True where at least `min_valid_sources` sources were in bounds.
    pub processed: Vec<bool>,
}

impl RefineOutput {
    /// Fraction of processed pixels whose error strictly decreased.
    pub fn improved_fraction(&self) -> f64 {
        let n = self.processed.iter().filter(|p| **p).count();
        if n == 0 {
            return 0.0;
        }
        let better = self
            .processed
            .iter()
            .zip(self.initial_error.data.iter().zip(&self.final_error.data))
            .filter(|(p, (a, b))| **p && b < a)
            .count();
        better as f64 / n as f64
    }
}

pub fn gn_refine(
    depth: &DepthMapBuffer,
    reference: (&FeatureImage, &Camera),
    sources: &[(&FeatureImage, &Camera)],
    params: &GnParams,
) -> Result<RefineOutput> {
    params.validate()?;
    let (ref_feat, ref_cam) = reference;
    let (w, h) = (depth.width(), depth.height());
    if (ref_feat.width, ref_feat.height) != (w, h) || (ref_cam.width(), ref_cam.height()) != (w, h) {
        return Err(Error::Dimension("depth, reference features and camera must share a size".into()));
    }
    let channels = ref_feat.channels.len().min(params.channel_weights.len());
    for (f, c) in sources {
        if (f.width, f.height) != (c.width(), c.height()) || f.channels.len() < channels {
            return Err(Error::Dimension("source features and camera disagree".into()));
        }
    }
    let sweeps: Vec<PlaneSweep> = sources.iter().map(|(_, c)| PlaneSweep::new(ref_cam, c)).collect();
    let clamp = params.step_clamp * ref_cam.depth_interval;
    let weights = params.channel_weights;

    let results: Vec<(f32, f32, f32, bool)> = (0..w * h)
        .into_par_iter()
        .map(|i| {
            let (x, y) = (i % w, i / w);
            let d0 = depth.get(x, y) as f64;
            if d0 <= 0.0 {
                return (0.0, 0.0, 0.0, false);
            }
            let (u, v) = (x as f64, y as f64);
            let f0: Vec<f64> = (0..channels).map(|c| ref_feat.channels[c].get(x, y) as f64).collect();
            // Sources usable at the starting depth; the set stays fixed.
            let active: Vec<usize> = (0..sources.len())
                .filter(|&s| {
                    sweeps[s]
                        .map(u, v, d0)
                        .is_some_and(|(su, sv, _)| sources[s].0.channels[0].sample(su, sv).is_some())
                })
                .collect();
            if active.len() < params.min_valid_sources {
                return (d0 as f32, 0.0, 0.0, false);
            }
            let eval = |d: f64, r: &mut Vec<f64>, jac: &mut Vec<f64>| -> bool {
                r.clear();
                jac.clear();
                if d <= 0.0 {
                    return false;
                }
                for &si in &active {
                    let Some((p, dp)) = sweeps[si].map_with_derivative(u, v, d) else {
                        return false;
                    };
                    let feat = sources[si].0;
                    for c in 0..channels {
                        let Some((val, gx, gy)) = feat.channels[c].sample_with_gradient(p[0], p[1]) else {
                            return false;
                        };
                        r.push(weights[c] * (val - f0[c]));
                        jac.push(weights[c] * (gx * dp[0] + gy * dp[1]));
                    }
                }
                true
            };
            match refine_scalar(d0, params, clamp, eval) {
                Some((d, e0, e1)) => (d as f32, e0 as f32, e1 as f32, true),
                None => (d0 as f32, 0.0, 0.0, false),
            }
        })
        .collect();

    let depth = DepthMapBuffer::from_fn(w, h, |x, y| results[y * w + x].0);
    let initial_error = Plane::from_fn(w, h, |x, y| results[y * w + x].1);
    let final_error = Plane::from_fn(w, h, |x, y| results[y * w + x].2);
    let processed = results.iter().map(|r| r.3).collect();
    Ok(RefineOutput {
        depth,
        initial_error,
        final_error,
        processed,
    })
}
