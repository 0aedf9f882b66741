use std::collections::BTreeSet;
use std::path::PathBuf;

use abcd_core::boxloss::nms;
use abcd_core::dataio::{read_predictions_file, ClassTable};
use abcd_core::eval::{
    average_precision, f1, map_range, match_detections, precision_recall, threshold_grid,
    confusion_matrix, Detection, GroundTruth,
};
use anyhow::{Context, Result};
use clap::Args;

use super::load_annotation_dir;
use crate::svg;
use crate::CommonOpts;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory of VOC-style .xml annotations.
    annotations: PathBuf,

    /// Newline-delimited JSON prediction file.
    predictions: PathBuf,

    /// IoU threshold for matching and the confusion matrix.
    #[arg(long, default_value_t = 0.5)]
    iou: f64,

    /// Threshold sweep as LO:HI:STEP.
    #[arg(long, default_value = "0.50:0.90:0.05")]
    range: String,

    /// Score floor for the confusion matrix.
    #[arg(long = "score-floor", default_value_t = 0.25)]
    score_floor: f64,

    /// Apply class-wise NMS at this threshold before evaluating.
    #[arg(long)]
    nms: Option<f64>,

    /// Confidence floor applied before NMS.
    #[arg(long = "nms-floor", default_value_t = 0.01)]
    nms_floor: f64,

    /// Also render pr_<class>.svg plots.
    #[arg(long)]
    svg: bool,

    #[command(flatten)]
    common: CommonOpts,
}

pub fn parse_range(spec: &str) -> Result<(f64, f64, f64)> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        anyhow::bail!("range must be LO:HI:STEP, got {spec:?}");
    }
    let parse = |s: &str| {
        s.parse::<f64>()
            .with_context(|| format!("bad range component {s:?} in {spec:?}"))
    };
    Ok((parse(parts[0])?, parse(parts[1])?, parse(parts[2])?))
}

fn sanitize(name: &str) -> String {
    name.chars().map(|c| if c.is_ascii_alphanumeric() { c } else { '_' }).collect()
}

pub fn run(args: EvalArgs) -> Result<u8> {
    let classes = ClassTable::bccd();
    let annotations = load_annotation_dir(&args.annotations, &classes)?;
    let gts: Vec<GroundTruth> =
        annotations.iter().flat_map(|a| a.image.annotations.iter().cloned()).collect();
    let n_images = annotations.len();

    let mut dets: Vec<Detection> = read_predictions_file(&args.predictions, &classes)
        .with_context(|| format!("cannot read {}", args.predictions.display()))?;
    if dets.is_empty() {
        eprintln!("warning: prediction file is empty, every AP will be 0");
    }
    if let Some(threshold) = args.nms {
        dets.retain(|d| d.score >= args.nms_floor);
        dets = nms(&dets, threshold)?;
    }

    let (lo, hi, step) = parse_range(&args.range)?;
    threshold_grid(lo, hi, step)?; // validate early

    let class_ids: BTreeSet<usize> = gts.iter().map(|g| g.class_id).collect();
    if class_ids.is_empty() {
        anyhow::bail!("no annotations found in {}", args.annotations.display());
    }

    std::fs::create_dir_all(&args.common.out)?;

    // per-class table
    let name_width = class_ids
        .iter()
        .filter_map(|&c| classes.name_of(c))
        .map(|n| n.len())
        .max()
        .unwrap_or(5)
        .max("class".len());
    let mut report = String::new();
    report.push_str("detection evaluation report\n");
    report.push_str("===========================\n");
    report.push_str(&format!("images:         {n_images}\n"));
    report.push_str(&format!("ground truths:  {}\n", gts.len()));
    report.push_str(&format!("detections:     {}\n", dets.len()));
    report.push_str(&format!("iou threshold:  {:.2}\n", args.iou));
    report.push_str(&format!("score floor:    {:.2}\n", args.score_floor));
    report.push_str(&format!("sweep:          {}\n", args.range));
    report.push('\n');
    report.push_str(&format!(
        "{:<name_width$}  {:>4} {:>4} {:>4} {:>4}  {:>9} {:>9} {:>9} {:>9}\n",
        "class", "gt", "det", "tp", "fp", "precision", "recall", "f1", "ap"
    ));

    for &class_id in &class_ids {
        let name = classes
            .name_of(class_id)
            .map(str::to_owned)
            .unwrap_or_else(|| format!("class{class_id}"));
        let class_gts: Vec<GroundTruth> =
            gts.iter().filter(|g| g.class_id == class_id).cloned().collect();
        let class_dets: Vec<Detection> =
            dets.iter().filter(|d| d.class_id == class_id).cloned().collect();
        let outcome = match_detections(&class_dets, &class_gts, args.iou)?;
        let (tp, fp, fn_) =
            (outcome.true_positives(), outcome.false_positives(), outcome.false_negatives());
        let (p, r) = precision_recall(tp, fp, fn_);
        let curve = average_precision(&dets, &gts, class_id, args.iou)?
            .expect("class drawn from ground truth");

        report.push_str(&format!(
            "{name:<name_width$}  {:>4} {:>4} {:>4} {:>4}  {:>9.6} {:>9.6} {:>9.6} {:>9.6}\n",
            class_gts.len(),
            class_dets.len(),
            tp,
            fp,
            p,
            r,
            f1(p, r),
            curve.ap
        ));

        let mut csv = String::from("recall,precision\n");
        for s in &curve.samples {
            csv.push_str(&format!("{},{}\n", s.recall, s.precision));
        }
        let base = args.common.out.join(format!("pr_{}", sanitize(&name)));
        std::fs::write(base.with_extension("csv"), csv)?;
        if args.svg {
            std::fs::write(
                base.with_extension("svg"),
                svg::pr_curve(&curve, &format!("{name} (AP {:.4})", curve.ap)),
            )?;
        }
    }

    // micro counts over all detections and ground truths
    let outcome = match_detections(&dets, &gts, args.iou)?;
    let (tp, fp, fn_) =
        (outcome.true_positives(), outcome.false_positives(), outcome.false_negatives());
    let (p, r) = precision_recall(tp, fp, fn_);
    report.push('\n');
    report.push_str(&format!("micro precision: {p:.6}\n"));
    report.push_str(&format!("micro recall:    {r:.6}\n"));
    report.push_str(&format!("micro f1:        {:.6}\n", f1(p, r)));

    let map_at = abcd_core::eval::mean_ap(&dets, &gts, args.iou)?;
    let map_sweep = map_range(&dets, &gts, lo, hi, step)?;
    report.push_str(&format!("mAP@{:.2}:        {map_at:.6}\n", args.iou));
    report.push_str(&format!("mAP@{lo:.2}-{hi:.2}:   {map_sweep:.6}\n"));

    let matrix = confusion_matrix(&dets, &gts, classes.names(), args.iou, args.score_floor)?;
    std::fs::write(args.common.out.join("confusion.csv"), matrix.to_csv())?;
    std::fs::write(args.common.out.join("report.txt"), &report)?;
    print!("{report}");
    Ok(0)
}
