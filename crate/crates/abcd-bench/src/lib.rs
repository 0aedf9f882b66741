//! Seeded payload builders shared by the criterion benchmarks.

use abcd_core::asff::{AsffParams, PyramidFeatures};
use abcd_core::boxloss::{gradcheck, BBox};
use abcd_core::cbam::CbamParams;
use abcd_core::dataio::ImageRgb;
use abcd_core::eval::{Detection, GroundTruth};
use abcd_core::tensor::{FeatureMap, Kernel2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn feature_map(channels: usize, h: usize, w: usize, rng: &mut ChaCha8Rng) -> FeatureMap {
    FeatureMap::random_uniform(channels, h, w, -1.0, 1.0, rng).unwrap()
}

pub fn kernel(out: usize, inp: usize, size: usize, rng: &mut ChaCha8Rng) -> Kernel2D {
    Kernel2D::random_uniform(out, inp, size, -0.2, 0.2, rng).unwrap()
}

pub fn cbam_params(channels: usize, rng: &mut ChaCha8Rng) -> CbamParams {
    CbamParams::random_uniform(channels, 16, -0.5, 0.5, rng).unwrap()
}

pub fn pyramid(channels: usize, base: usize, rng: &mut ChaCha8Rng) -> PyramidFeatures {
    PyramidFeatures::new(
        feature_map(channels, base, base, rng),
        feature_map(channels, base * 2, base * 2, rng),
        feature_map(channels, base * 4, base * 4, rng),
    )
    .unwrap()
}

pub fn asff_params(channels: usize, rng: &mut ChaCha8Rng) -> AsffParams {
    AsffParams::random_uniform(channels, -0.5, 0.5, rng).unwrap()
}

pub fn box_pairs(n: usize, rng: &mut ChaCha8Rng) -> Vec<(BBox, BBox)> {
    (0..n).map(|_| gradcheck::random_box_pair(rng)).collect()
}

pub fn detection_set(n: usize, classes: usize, rng: &mut ChaCha8Rng) -> Vec<Detection> {
    (0..n)
        .map(|i| {
            let (b, _) = gradcheck::random_box_pair(rng);
            Detection::new(
                format!("img{}", i % 10),
                rng.gen_range(0..classes),
                rng.gen_range(0.01..1.0),
                b,
            )
            .unwrap()
        })
        .collect()
}

/// Detections jittered around the ground truths so matching does real work.
pub fn eval_instance(
    n_gt: usize,
    n_det: usize,
    rng: &mut ChaCha8Rng,
) -> (Vec<Detection>, Vec<GroundTruth>) {
    let gts: Vec<GroundTruth> = (0..n_gt)
        .map(|i| {
            let (b, _) = gradcheck::random_box_pair(rng);
            GroundTruth::new(format!("img{}", i % 20), 0, b)
        })
        .collect();
    let dets: Vec<Detection> = (0..n_det)
        .map(|i| {
            let g = &gts[i % gts.len()];
            let j = rng.gen_range(-1.0..1.0);
            let b = BBox::new(
                g.bbox.xmin + j,
                g.bbox.ymin + j,
                g.bbox.xmax + j,
                g.bbox.ymax + j,
            )
            .unwrap();
            Detection::new(g.image_id.clone(), 0, rng.gen_range(0.01..1.0), b).unwrap()
        })
        .collect();
    (dets, gts)
}

pub fn image(w: usize, h: usize, rng: &mut ChaCha8Rng) -> ImageRgb {
    let pixels = (0..3 * w * h).map(|_| rng.gen()).collect();
    ImageRgb::new(w, h, pixels).unwrap()
}
