//! Depth-map error statistics, the two loss functionals used as offline
//! quality scores, and point-cloud accuracy / completeness.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::dataio::DepthMapBuffer;
use crate::error::{Error, Result};
use crate::fusion::PointCloud;

pub const INLIER_THRESHOLDS_MM: [f64; 3] = [2.0, 4.0, 8.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthErrorStats {
    /// Mean absolute error over pixels valid in both maps; NaN when there
    /// are none.
    pub mae_mm: f64,
    /// Share of valid reference pixels that have a prediction.
    pub valid_fraction: f64,
    /// Share of evaluated pixels within 2, 4 and 8 mm.
    pub inlier_ratios: [f64; 3],
    pub evaluated: usize,
    pub reference_valid: usize,
}

/// Error of `pred` against `gt` over pixels where `gt` is valid. Pixels
/// the prediction leaves missing are excluded from the mean and show up
/// in `valid_fraction` instead.
pub fn depth_mae(pred: &DepthMapBuffer, gt: &DepthMapBuffer) -> Result<DepthErrorStats> {
    pred.check_same_size(gt, "prediction and ground truth")?;
    let (mut sum, mut n, mut reference_valid) = (0.0f64, 0usize, 0usize);
    let mut inliers = [0usize; 3];
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        if g <= 0.0 {
            continue;
        }
        reference_valid += 1;
        if p <= 0.0 {
            continue;
        }
        let e = (p as f64 - g as f64).abs();
        sum += e;
        n += 1;
        for (c, t) in inliers.iter_mut().zip(INLIER_THRESHOLDS_MM) {
            if e <= t {
                *c += 1;
            }
        }
    }
    let ratio = |c: usize| if n == 0 { 0.0 } else { c as f64 / n as f64 };
    Ok(DepthErrorStats {
        mae_mm: if n == 0 { f64::NAN } else { sum / n as f64 },
        valid_fraction: if reference_valid == 0 {
            0.0
        } else {
            n as f64 / reference_valid as f64
        },
        inlier_ratios: [ratio(inliers[0]), ratio(inliers[1]), ratio(inliers[2])],
        evaluated: n,
        reference_valid,
    })
}

/// A summed loss and its per-pixel mean over valid reference pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub sum: f64,
    pub mean: f64,
    pub count: usize,
}

impl LossValue {
    /// True when no reference pixel was valid.
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }
}

fn l1_sum(pred: &DepthMapBuffer, gt: &DepthMapBuffer) -> (f64, usize) {
    pred.values()
        .iter()
        .zip(gt.values())
        .filter(|(_, g)| **g > 0.0)
        .fold((0.0, 0), |(s, n), (p, g)| (s + (*p as f64 - *g as f64).abs(), n + 1))
}

/// `Σ_p |d̃(p) - d̂(p)| + |d̃_r(p) - d̂(p)|` over pixels with valid `d̂`.
/// Missing predictions count as depth 0.
pub fn fastmvs_loss(dense: &DepthMapBuffer, refined: &DepthMapBuffer, gt: &DepthMapBuffer) -> Result<LossValue> {
    dense.check_same_size(gt, "dense depth and ground truth")?;
    refined.check_same_size(gt, "refined depth and ground truth")?;
    let (a, n) = l1_sum(dense, gt);
    let (b, _) = l1_sum(refined, gt);
    if n == 0 {
        log::warn!("loss evaluated over an empty set of valid pixels");
    }
    let sum = a + b;
    Ok(LossValue {
        sum,
        mean: if n == 0 { 0.0 } else { sum / n as f64 },
        count: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct StagedLossWeights(pub Vec<f64>);

impl Default for StagedLossWeights {
    fn default() -> Self {
        StagedLossWeights(vec![0.5, 1.0, 2.0])
    }
}

impl StagedLossWeights {
    pub fn validate(&self) -> Result<()> {
        if self.0.is_empty() || !self.0.iter().all(|w| *w > 0.0 && w.is_finite()) {
            return Err(Error::Config("stage loss weights must be non-empty and positive".into()));
        }
        Ok(())
    }
}

/// One stage's estimate, optional refinement and matching ground truth.
#[derive(Debug, Clone, Copy)]
pub struct StageLossInput<'a> {
    pub depth: &'a DepthMapBuffer,
    pub refined: Option<&'a DepthMapBuffer>,
    pub gt: &'a DepthMapBuffer,
}

/// `Σ_p |d̃ - d̂|`, plus `|d̃_r - d̂|` when the stage has a refined map.
pub fn stage_loss(input: &StageLossInput<'_>) -> Result<f64> {
    input.depth.check_same_size(input.gt, "stage depth and ground truth")?;
    let (mut l, _) = l1_sum(input.depth, input.gt);
    if let Some(r) = input.refined {
        r.check_same_size(input.gt, "refined depth and ground truth")?;
        l += l1_sum(r, input.gt).0;
    }
    Ok(l)
}

/// Weighted sum of per-stage losses.
pub fn combine_stage_losses(losses: &[f64], weights: &StagedLossWeights) -> Result<f64> {
    weights.validate()?;
    if losses.len() != weights.0.len() {
        return Err(Error::Config(format!(
            "{} stage losses but {} weights",
            losses.len(),
            weights.0.len()
        )));
    }
    Ok(losses.iter().zip(&weights.0).map(|(l, w)| l * w).sum())
}

pub fn cas_loss(stages: &[StageLossInput<'_>], weights: &StagedLossWeights) -> Result<f64> {
    let losses: Vec<f64> = stages.iter().map(stage_loss).collect::<Result<_>>()?;
    combine_stage_losses(&losses, weights)
}

/// Static 3-d tree for exact nearest-neighbour queries.
#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<[f64; 3]>,
    /// Implicit balanced tree: the median of `order[lo..hi]` is the node.
    order: Vec<usize>,
    axes: Vec<u8>,
}

impl KdTree {
    pub fn new(points: &[[f64; 3]]) -> Self {
        let mut tree = KdTree {
            points: points.to_vec(),
            order: (0..points.len()).collect(),
            axes: vec![0; points.len()],
        };
        let n = points.len();
        tree.build(0, n);
        tree
    }

    fn build(&mut self, lo: usize, hi: usize) {
        if hi - lo <= 1 {
            return;
        }
        let slice = &self.order[lo..hi];
        let mut axis = 0;
        let mut best = -1.0;
        for a in 0..3 {
            let (mn, mx) = slice.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(mn, mx), &i| {
                let v = self.points[i][a];
                (mn.min(v), mx.max(v))
            });
            if mx - mn > best {
                best = mx - mn;
                axis = a;
            }
        }
        let mid = (lo + hi) / 2;
        let pts = &self.points;
        self.order[lo..hi].select_nth_unstable_by(mid - lo, |&a, &b| pts[a][axis].total_cmp(&pts[b][axis]));
        self.axes[mid] = axis as u8;
        self.build(lo, mid);
        self.build(mid + 1, hi);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index and squared distance of the nearest point.
    pub fn nearest(&self, q: &[f64; 3]) -> Option<(usize, f64)> {
        if self.points.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        self.search(q, 0, self.points.len(), &mut best);
        Some(best)
    }

    fn search(&self, q: &[f64; 3], lo: usize, hi: usize, best: &mut (usize, f64)) {
        if lo >= hi {
            return;
        }
        let mid = (lo + hi) / 2;
        let idx = self.order[mid];
        let p = &self.points[idx];
        let d2 = dist2(p, q);
        if d2 < best.1 || (d2 == best.1 && idx < best.0) {
            *best = (idx, d2);
        }
        if hi - lo == 1 {
            return;
        }
        let axis = self.axes[mid] as usize;
        let diff = q[axis] - p[axis];
        let (near, far) = if diff < 0.0 {
            ((lo, mid), (mid + 1, hi))
        } else {
            ((mid + 1, hi), (lo, mid))
        };
        self.search(q, near.0, near.1, best);
        if diff * diff <= best.1 {
            self.search(q, far.0, far.1, best);
        }
    }
}

#[inline]
fn dist2(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    let (dx, dy, dz) = (a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    dx * dx + dy * dy + dz * dz
}

/// Distance from each point of `from` to its nearest neighbour in `to`.
pub fn directed_distances(from: &PointCloud, to: &PointCloud) -> Vec<f64> {
    let tree = KdTree::new(&to.points);
    from.points
        .par_iter()
        .map(|p| tree.nearest(p).map_or(f64::INFINITY, |(_, d2)| d2.sqrt()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointMetrics {
    pub accuracy_mm: f64,
    pub completeness_mm: f64,
    pub overall_mm: f64,
    pub accuracy_inliers: usize,
    pub accuracy_outliers: usize,
    pub completeness_inliers: usize,
    pub completeness_outliers: usize,
    pub max_dist_mm: f64,
}

/// Mean of the distances not above `cap`, with inlier and outlier counts.
/// NaN when every distance is an outlier.
fn capped_mean(d: &[f64], cap: f64) -> (f64, usize, usize) {
    let mut kept: Vec<f64> = d.iter().copied().filter(|v| *v <= cap).collect();
    // Sorted summation keeps the result independent of point order.
    kept.sort_by(f64::total_cmp);
    let n = kept.len();
    let mean = if n == 0 {
        f64::NAN
    } else {
        kept.iter().sum::<f64>() / n as f64
    };
    (mean, n, d.len() - n)
}

/// Accuracy (reconstruction to reference), completeness (reference to
/// reconstruction) and their mean. Distances above `max_dist_mm` are left
/// out of the means and counted as outliers; pass infinity for no cap.
pub fn point_metrics(recon: &PointCloud, reference: &PointCloud, max_dist_mm: f64) -> Result<PointMetrics> {
    if recon.is_empty() {
        return Err(Error::EmptyCloud("reconstruction"));
    }
    if reference.is_empty() {
        return Err(Error::EmptyCloud("reference"));
    }
    if !(max_dist_mm > 0.0) {
        return Err(Error::Config("max_dist_mm must be > 0".into()));
    }
    let (acc, ai, ao) = capped_mean(&directed_distances(recon, reference), max_dist_mm);
    let (comp, ci, co) = capped_mean(&directed_distances(reference, recon), max_dist_mm);
    Ok(PointMetrics {
        accuracy_mm: acc,
        completeness_mm: comp,
        overall_mm: (acc + comp) / 2.0,
        accuracy_inliers: ai,
        accuracy_outliers: ao,
        completeness_inliers: ci,
        completeness_outliers: co,
        max_dist_mm,
    })
}

/// One line of a metrics report.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub value: f64,
    pub parameters: String,
}

impl MetricRow {
    fn new(metric: &str, value: f64, parameters: impl Into<String>) -> Self {
        MetricRow {
            metric: metric.to_string(),
            value,
            parameters: parameters.into(),
        }
    }
}

impl DepthErrorStats {
    pub fn rows(&self) -> Vec<MetricRow> {
        let mut rows = vec![
            MetricRow::new("mae_mm", self.mae_mm, ""),
            MetricRow::new("valid_fraction", self.valid_fraction, ""),
        ];
        for (t, r) in INLIER_THRESHOLDS_MM.iter().zip(self.inlier_ratios) {
            rows.push(MetricRow::new("inlier_ratio", r, format!("threshold_mm={t}")));
        }
        rows
    }
}

impl PointMetrics {
    pub fn rows(&self) -> Vec<MetricRow> {
        let cap = format!("max_dist_mm={}", self.max_dist_mm);
        vec![
            MetricRow::new("accuracy_mm", self.accuracy_mm, cap.clone()),
            MetricRow::new("completeness_mm", self.completeness_mm, cap.clone()),
            MetricRow::new("overall_mm", self.overall_mm, cap.clone()),
            MetricRow::new("accuracy_outliers", self.accuracy_outliers as f64, cap.clone()),
            MetricRow::new("completeness_outliers", self.completeness_outliers as f64, cap),
        ]
    }
}

/// CSV with header `metric,value,parameters`; parameters are quoted.
pub fn format_metrics_csv(rows: &[MetricRow]) -> String {
    let mut s = String::from("metric,value,parameters\n");
    for r in rows {
        let _ = writeln!(s, "{},{},\"{}\"", r.metric, r.value, r.parameters.replace('"', "\"\""));
    }
    s
}
