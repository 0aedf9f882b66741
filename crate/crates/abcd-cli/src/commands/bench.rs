use abcd_core::asff::{asff_fuse, AsffParams, PyramidFeatures, PyramidLevel};
use abcd_core::boxloss::{self, gradcheck, BBox};
use abcd_core::cbam::{cbam_apply, CbamParams};
use abcd_core::dataio::{augment, AugmentOp, ImageRgb};
use abcd_core::eval::{average_precision, fps_benchmark, Detection, GroundTruth};
use abcd_core::tensor::{conv2d, FeatureMap, Kernel2D};
use anyhow::Result;
use clap::Args;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CommonOpts;

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Repetitions per operation.
    #[arg(long, default_value_t = 30)]
    reps: usize,

    #[command(flatten)]
    common: CommonOpts,
}

pub fn run(args: BenchArgs) -> Result<u8> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed());
    let reps = args.reps;

    let map = FeatureMap::random_uniform(8, 32, 32, -1.0, 1.0, &mut rng)?;
    let kernel = Kernel2D::random_uniform(8, 8, 7, -0.2, 0.2, &mut rng)?;
    let cbam = CbamParams::random_uniform(8, 16, -0.5, 0.5, &mut rng)?;
    let pyramid = PyramidFeatures::new(
        FeatureMap::random_uniform(8, 8, 8, -1.0, 1.0, &mut rng)?,
        FeatureMap::random_uniform(8, 16, 16, -1.0, 1.0, &mut rng)?,
        FeatureMap::random_uniform(8, 32, 32, -1.0, 1.0, &mut rng)?,
    )?;
    let asff = AsffParams::random_uniform(8, -0.5, 0.5, &mut rng)?;

    let pairs: Vec<(BBox, BBox)> =
        (0..1000).map(|_| gradcheck::random_box_pair(&mut rng)).collect();

    let nms_dets: Vec<Detection> = (0..200)
        .map(|_| {
            let (b, _) = gradcheck::random_box_pair(&mut rng);
            Detection::new("img".into(), rng.gen_range(0..3), rng.gen_range(0.01..1.0), b)
                .unwrap()
        })
        .collect();

    let eval_gts: Vec<GroundTruth> = (0..300)
        .map(|i| {
            let (b, _) = gradcheck::random_box_pair(&mut rng);
            GroundTruth::new(format!("img{}", i % 20), 0, b)
        })
        .collect();
    let eval_dets: Vec<Detection> = (0..500)
        .map(|i| {
            let g = &eval_gts[i % eval_gts.len()];
            let jitter = rng.gen_range(-1.0..1.0);
            let b = BBox::new(
                g.bbox.xmin + jitter,
                g.bbox.ymin + jitter,
                g.bbox.xmax + jitter,
                g.bbox.ymax + jitter,
            )
            .unwrap();
            Detection::new(g.image_id.clone(), 0, rng.gen_range(0.01..1.0), b).unwrap()
        })
        .collect();

    let hue_pixels: Vec<u8> = (0..3 * 160 * 120).map(|_| rng.gen()).collect();
    let hue_img = ImageRgb::new(160, 120, hue_pixels)?;

    let mut rows: Vec<(String, abcd_core::eval::FpsReport)> = Vec::new();

    rows.push((
        "conv2d_7x7_8x32x32".into(),
        fps_benchmark(reps, || {
            conv2d(&map, &kernel).unwrap();
        })?,
    ));
    rows.push((
        "cbam_apply_8x32x32".into(),
        fps_benchmark(reps, || {
            cbam_apply(&map, &cbam).unwrap();
        })?,
    ));
    rows.push((
        "asff_fuse_l3_8x32x32".into(),
        fps_benchmark(reps, || {
            asff_fuse(&pyramid, &asff, PyramidLevel::L3).unwrap();
        })?,
    ));
    rows.push((
        "ciou_grad_1000_pairs".into(),
        fps_benchmark(reps, || {
            for (p, g) in &pairs {
                boxloss::ciou_grad(p, g).unwrap();
            }
        })?,
    ));
    rows.push((
        "nms_200_boxes".into(),
        fps_benchmark(reps, || {
            boxloss::nms(&nms_dets, 0.65).unwrap();
        })?,
    ));
    rows.push((
        "average_precision_500x300".into(),
        fps_benchmark(reps, || {
            average_precision(&eval_dets, &eval_gts, 0, 0.5).unwrap();
        })?,
    ));
    rows.push((
        "hue_shift_160x120".into(),
        fps_benchmark(reps, || {
            augment(&hue_img, &[], &AugmentOp::HueShift { degrees: 30.0 }).unwrap();
        })?,
    ));

    let mut csv = String::from("op,median_s,p10_s,p90_s,ops_per_s\n");
    println!("{:<28} {:>12} {:>12} {:>12} {:>12}", "op", "median_s", "p10_s", "p90_s", "ops/s");
    for (name, r) in &rows {
        csv.push_str(&format!(
            "{name},{:.9},{:.9},{:.9},{:.3}\n",
            r.median_s, r.p10_s, r.p90_s, r.ops_per_s
        ));
        println!(
            "{name:<28} {:>12.6} {:>12.6} {:>12.6} {:>12.1}",
            r.median_s, r.p10_s, r.p90_s, r.ops_per_s
        );
    }
    std::fs::create_dir_all(&args.common.out)?;
    std::fs::write(args.common.out.join("bench.csv"), csv)?;
    Ok(0)
}
