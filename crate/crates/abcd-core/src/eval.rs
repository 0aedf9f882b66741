//! Detection evaluation: greedy IoU matching, precision/recall/F1, average
//! precision by exact integration of the monotone precision envelope, the
//! thresholded mAP sweep, the cross-class confusion matrix, and a small
//! wall-clock throughput harness.

use std::collections::BTreeSet;
use std::time::Instant;

use crate::boxloss::{iou, BBox};
use crate::error::{Error, Result};

/// One scored prediction on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    pub image_id: String,
    pub class_id: usize,
    pub score: f64,
    pub bbox: BBox,
}

impl Detection {
    pub fn new(image_id: String, class_id: usize, score: f64, bbox: BBox) -> Result<Self> {
        if !score.is_finite() || !(0.0..=1.0).contains(&score) {
            return Err(Error::Input(format!("score must be in [0, 1], got {score}")));
        }
        Ok(Self { image_id, class_id, score, bbox })
    }
}

/// One labeled annotation on one image.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub image_id: String,
    pub class_id: usize,
    pub bbox: BBox,
}

impl GroundTruth {
    pub fn new(image_id: String, class_id: usize, bbox: BBox) -> Self {
        Self { image_id, class_id, bbox }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetFlag {
    TruePositive,
    FalsePositive,
}

/// Match flags aligned with the input orders of the detections and ground
/// truths they were computed from.
#[derive(Debug, Clone)]
pub struct MatchOutcome {
    pub det_flags: Vec<DetFlag>,
    pub gt_matched: Vec<bool>,
}

impl MatchOutcome {
    pub fn true_positives(&self) -> u64 {
        self.det_flags.iter().filter(|f| **f == DetFlag::TruePositive).count() as u64
    }

    pub fn false_positives(&self) -> u64 {
        self.det_flags.iter().filter(|f| **f == DetFlag::FalsePositive).count() as u64
    }

    pub fn false_negatives(&self) -> u64 {
        self.gt_matched.iter().filter(|m| !**m).count() as u64
    }
}

fn validate_unit_interval(value: f64, what: &str) -> Result<()> {
    if !value.is_finite() || !(0.0..=1.0).contains(&value) {
        return Err(Error::Config(format!("{what} must be in [0, 1], got {value}")));
    }
    Ok(())
}

/// Deterministic evaluation order: score descending, then image id, then the
/// position in the input slice. Used by every ranking in this module.
fn ranked_indices(dets: &[Detection]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        dets[b]
            .score
            .partial_cmp(&dets[a].score)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| dets[a].image_id.cmp(&dets[b].image_id))
            .then(a.cmp(&b))
    });
    order
}

/// Greedy score-descending matching. Each detection takes the unmatched
/// ground truth of the same image and class with the highest IoU at or above
/// the threshold (first index wins ties); matched detections are true
/// positives, the rest false positives, unmatched ground truths misses.
pub fn match_detections(
    dets: &[Detection],
    gts: &[GroundTruth],
    iou_threshold: f64,
) -> Result<MatchOutcome> {
    validate_unit_interval(iou_threshold, "iou threshold")?;
    let mut det_flags = vec![DetFlag::FalsePositive; dets.len()];
    let mut gt_matched = vec![false; gts.len()];

    for di in ranked_indices(dets) {
        let d = &dets[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if gt_matched[gi] || g.image_id != d.image_id || g.class_id != d.class_id {
                continue;
            }
            let overlap = iou(&d.bbox, &g.bbox);
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        if let Some((gi, _)) = best {
            det_flags[di] = DetFlag::TruePositive;
            gt_matched[gi] = true;
        }
    }
    Ok(MatchOutcome { det_flags, gt_matched })
}

/// `P = TP/(TP+FP)`, `R = TP/(TP+FN)`; zero when a denominator is zero.
pub fn precision_recall(tp: u64, fp: u64, fn_: u64) -> (f64, f64) {
    let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
    let r = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
    (p, r)
}

/// Harmonic mean of precision and recall; zero when both vanish.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrPoint {
    pub recall: f64,
    pub precision: f64,
}

/// Ranked precision/recall samples (one per detection, raw precision) plus
/// the area under the monotone precision envelope over recall.
#[derive(Debug, Clone, PartialEq)]
pub struct PrCurve {
    pub samples: Vec<PrPoint>,
    pub ap: f64,
}

/// Average precision for one class, or `None` when the class has no ground
/// truth (such classes are excluded from the mean instead of scoring zero).
pub fn average_precision(
    dets: &[Detection],
    gts: &[GroundTruth],
    class_id: usize,
    iou_threshold: f64,
) -> Result<Option<PrCurve>> {
    validate_unit_interval(iou_threshold, "iou threshold")?;
    let class_gts: Vec<GroundTruth> =
        gts.iter().filter(|g| g.class_id == class_id).cloned().collect();
    if class_gts.is_empty() {
        return Ok(None);
    }
    let class_dets: Vec<Detection> =
        dets.iter().filter(|d| d.class_id == class_id).cloned().collect();

    let outcome = match_detections(&class_dets, &class_gts, iou_threshold)?;
    let order = ranked_indices(&class_dets);

    let n_gt = class_gts.len() as f64;
    let mut tp = 0u64;
    let mut samples = Vec::with_capacity(order.len());
    for (rank, &di) in order.iter().enumerate() {
        if outcome.det_flags[di] == DetFlag::TruePositive {
            tp += 1;
        }
        samples.push(PrPoint {
            recall: tp as f64 / n_gt,
            precision: tp as f64 / (rank + 1) as f64,
        });
    }

    Ok(Some(PrCurve { ap: envelope_area(&samples), samples }))
}

/// Exact all-point integration: precision is replaced by its running maximum
/// from the right, then summed over recall increments.
fn envelope_area(samples: &[PrPoint]) -> f64 {
    let mut env: Vec<f64> = samples.iter().map(|s| s.precision).collect();
    for i in (0..env.len().saturating_sub(1)).rev() {
        env[i] = env[i].max(env[i + 1]);
    }
    let mut ap = 0.0;
    let mut prev_recall = 0.0;
    for (i, s) in samples.iter().enumerate() {
        ap += (s.recall - prev_recall) * env[i];
        prev_recall = s.recall;
    }
    ap
}

/// Mean AP over every class that appears in the ground truth.
pub fn mean_ap(dets: &[Detection], gts: &[GroundTruth], iou_threshold: f64) -> Result<f64> {
    let classes: BTreeSet<usize> = gts.iter().map(|g| g.class_id).collect();
    if classes.is_empty() {
        return Err(Error::Eval("no class has ground truth, mean AP is undefined".into()));
    }
    let mut sum = 0.0;
    for &class_id in &classes {
        let curve = average_precision(dets, gts, class_id, iou_threshold)?
            .expect("classes drawn from ground truth have at least one annotation");
        sum += curve.ap;
    }
    Ok(sum / classes.len() as f64)
}

/// Inclusive threshold sequence `lo, lo+step, ...` up to `hi`. Values are
/// built on a microunit grid (1e-6) so decimal thresholds like 0.60 compare
/// exactly against IoU ratios that round to the same decimal.
pub fn threshold_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    validate_unit_interval(lo, "sweep low end")?;
    validate_unit_interval(hi, "sweep high end")?;
    if lo > hi {
        return Err(Error::Config(format!("sweep range is empty: {lo} > {hi}")));
    }
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::Config(format!("sweep step must be positive, got {step}")));
    }
    let micro = |v: f64| (v * 1e6).round() as i64;
    let (lo_u, hi_u, step_u) = (micro(lo), micro(hi), micro(step));
    if step_u < 1 {
        return Err(Error::Config(format!("sweep step {step} is below the 1e-6 grid")));
    }
    Ok((0..=(hi_u - lo_u) / step_u)
        .map(|k| (lo_u + k * step_u) as f64 / 1e6)
        .collect())
}

/// Mean of `mean_ap` over the inclusive threshold sweep.
pub fn map_range(
    dets: &[Detection],
    gts: &[GroundTruth],
    lo: f64,
    hi: f64,
    step: f64,
) -> Result<f64> {
    let grid = threshold_grid(lo, hi, step)?;
    let mut sum = 0.0;
    for &t in &grid {
        sum += mean_ap(dets, gts, t)?;
    }
    Ok(sum / grid.len() as f64)
}

/// Class-by-class count table from class-agnostic localization matching.
/// Rows are ground-truth classes, columns predicted classes; the extra last
/// row/column is the background bucket (spurious detections / missed GT).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    class_names: Vec<String>,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    fn new(class_names: Vec<String>) -> Self {
        let k = class_names.len() + 1;
        Self { class_names, counts: vec![0; k * k] }
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn background_index(&self) -> usize {
        self.class_names.len()
    }

    pub fn count(&self, gt: usize, pred: usize) -> u64 {
        let k = self.class_names.len() + 1;
        self.counts[gt * k + pred]
    }

    fn bump(&mut self, gt: usize, pred: usize) {
        let k = self.class_names.len() + 1;
        self.counts[gt * k + pred] += 1;
    }

    pub fn row_sum(&self, gt: usize) -> u64 {
        (0..=self.class_names.len()).map(|p| self.count(gt, p)).sum()
    }

    /// Diagonal share of the class's row; zero when the class has no row mass.
    pub fn per_class_accuracy(&self, class_id: usize) -> f64 {
        let total = self.row_sum(class_id);
        if total == 0 {
            0.0
        } else {
            self.count(class_id, class_id) as f64 / total as f64
        }
    }

    /// CSV with labeled rows and columns; the background bucket is last.
    pub fn to_csv(&self) -> String {
        let mut header = String::from("gt\\pred");
        for name in &self.class_names {
            header.push(',');
            header.push_str(name);
        }
        header.push_str(",background\n");
        let mut out = header;
        for gt in 0..=self.class_names.len() {
            let label = if gt == self.background_index() {
                "background"
            } else {
                &self.class_names[gt]
            };
            out.push_str(label);
            for pred in 0..=self.class_names.len() {
                out.push(',');
                out.push_str(&self.count(gt, pred).to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Build the confusion matrix. Detections below `score_floor` are ignored;
/// the remainder match greedily (score descending) against unmatched ground
/// truths of the same image regardless of class, at `iou_threshold`.
pub fn confusion_matrix(
    dets: &[Detection],
    gts: &[GroundTruth],
    class_names: &[String],
    iou_threshold: f64,
    score_floor: f64,
) -> Result<ConfusionMatrix> {
    validate_unit_interval(iou_threshold, "iou threshold")?;
    validate_unit_interval(score_floor, "score floor")?;
    if class_names.is_empty() {
        return Err(Error::Config("confusion matrix needs at least one class".into()));
    }
    let k = class_names.len();
    for d in dets {
        if d.class_id >= k {
            return Err(Error::Config(format!(
                "detection class id {} outside the {k}-class table",
                d.class_id
            )));
        }
    }
    for g in gts {
        if g.class_id >= k {
            return Err(Error::Config(format!(
                "ground-truth class id {} outside the {k}-class table",
                g.class_id
            )));
        }
    }

    let scored: Vec<Detection> =
        dets.iter().filter(|d| d.score >= score_floor).cloned().collect();
    let mut matrix = ConfusionMatrix::new(class_names.to_vec());
    let mut gt_matched = vec![false; gts.len()];
    let mut det_matched_class: Vec<Option<usize>> = vec![None; scored.len()];

    for di in ranked_indices(&scored) {
        let d = &scored[di];
        let mut best: Option<(usize, f64)> = None;
        for (gi, g) in gts.iter().enumerate() {
            if gt_matched[gi] || g.image_id != d.image_id {
                continue;
            }
            let overlap = iou(&d.bbox, &g.bbox);
            if overlap >= iou_threshold && best.is_none_or(|(_, b)| overlap > b) {
                best = Some((gi, overlap));
            }
        }
        if let Some((gi, _)) = best {
            gt_matched[gi] = true;
            det_matched_class[di] = Some(gts[gi].class_id);
        }
    }

    for (di, matched) in det_matched_class.iter().enumerate() {
        match matched {
            Some(gt_class) => matrix.bump(*gt_class, scored[di].class_id),
            None => matrix.bump(matrix.background_index(), scored[di].class_id),
        }
    }
    for (gi, matched) in gt_matched.iter().enumerate() {
        if !matched {
            matrix.bump(gts[gi].class_id, matrix.background_index());
        }
    }
    Ok(matrix)
}

/// Wall-clock percentiles for a repeated operation, reported as throughput.
#[derive(Debug, Clone, Copy)]
pub struct FpsReport {
    pub median_s: f64,
    pub p10_s: f64,
    pub p90_s: f64,
    pub ops_per_s: f64,
}

/// Time `op` for `repetitions` runs over the same payload (the closure owns
/// it) and report median/p10/p90 seconds plus median throughput. Samples are
/// floored at one nanosecond so the throughput stays finite.
pub fn fps_benchmark<F: FnMut()>(repetitions: usize, mut op: F) -> Result<FpsReport> {
    if repetitions < 3 {
        return Err(Error::Config(format!(
            "benchmark needs at least 3 repetitions, got {repetitions}"
        )));
    }
    let mut secs: Vec<f64> = (0..repetitions)
        .map(|_| {
            let t0 = Instant::now();
            op();
            t0.elapsed().as_secs_f64().max(1e-9)
        })
        .collect();
    secs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));

    let pct = |q: f64| -> f64 {
        let pos = q * (secs.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 < secs.len() {
            secs[lo] * (1.0 - frac) + secs[lo + 1] * frac
        } else {
            secs[lo]
        }
    };
    let median = pct(0.5);
    Ok(FpsReport {
        median_s: median,
        p10_s: pct(0.1),
        p90_s: pct(0.9),
        ops_per_s: 1.0 / median,
    })
}
