use std::path::PathBuf;

use abcd_core::asff::{asff_fuse, fusion_weights, resize_level, AsffParams, PyramidFeatures, PyramidLevel};
use abcd_core::cbam::{cbam_apply, CbamParams};
use abcd_core::params::{
    asff_from_records, asff_records, cbam_from_records, cbam_records, feature_map_record,
    format_records, parse_records, TensorRecord,
};
use abcd_core::tensor::FeatureMap;
use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CommonOpts;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DemoMode {
    /// All-zero parameters: both attention gates are exactly one half.
    Zero,
    /// Zero fusion generators: every fusion weight is exactly one third.
    Equal,
    /// Seeded random parameters.
    Random,
}

#[derive(Args, Debug)]
pub struct DemoArgs {
    #[arg(long, value_enum, default_value_t = DemoMode::Random)]
    mode: DemoMode,

    /// Pyramid channel count.
    #[arg(long, default_value_t = 8)]
    channels: usize,

    /// Load attention/fusion parameters from a tensor-record file instead of
    /// generating them (records named cbam.* and asff.*).
    #[arg(long)]
    params: Option<PathBuf>,

    #[command(flatten)]
    common: CommonOpts,
}

fn fail(msg: &str) -> Result<u8> {
    eprintln!("demo invariant violated: {msg}");
    Ok(1)
}

pub fn run(args: DemoArgs) -> Result<u8> {
    let c = args.channels;
    let mut rng = ChaCha8Rng::seed_from_u64(args.common.seed());

    let pyramid = PyramidFeatures::new(
        FeatureMap::random_uniform(c, 8, 8, -1.0, 1.0, &mut rng)?,
        FeatureMap::random_uniform(c, 16, 16, -1.0, 1.0, &mut rng)?,
        FeatureMap::random_uniform(c, 32, 32, -1.0, 1.0, &mut rng)?,
    )?;

    let (cbam, asff) = match &args.params {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            let records = parse_records(&text)?;
            (cbam_from_records("cbam", &records)?, asff_from_records("asff", &records)?)
        }
        None => match args.mode {
            DemoMode::Zero => (CbamParams::zeros(c)?, AsffParams::zeros(c)?),
            DemoMode::Equal => (
                CbamParams::random_uniform(c, 16, -0.5, 0.5, &mut rng)?,
                AsffParams::zeros(c)?,
            ),
            DemoMode::Random => (
                CbamParams::random_uniform(c, 16, -0.5, 0.5, &mut rng)?,
                AsffParams::random_uniform(c, -0.5, 0.5, &mut rng)?,
            ),
        },
    };

    let mut records: Vec<TensorRecord> = Vec::new();
    records.extend(cbam_records("cbam", &cbam));
    records.extend(asff_records("asff", &asff));

    // attention over each level
    let mut attended = Vec::new();
    for level in PyramidLevel::ALL {
        let input = pyramid.level(level);
        records.push(feature_map_record(format!("input.l{}", level.number()), input));
        let out = cbam_apply(input, &cbam)?;
        if out.shape() != input.shape() {
            return fail("attention changed the map shape");
        }
        for (o, i) in out.data().iter().zip(input.data().iter()) {
            if o.abs() > i.abs() {
                return fail("attention amplified a value");
            }
            if args.mode == DemoMode::Zero && args.params.is_none() && (o - 0.25 * i).abs() > 1e-9
            {
                return fail("zero-parameter attention is not a quarter of the input");
            }
        }
        records.push(feature_map_record(format!("cbam.l{}.out", level.number()), &out));
        attended.push(out);
    }

    // fusion toward each target level
    for target in PyramidLevel::ALL {
        let target_map = pyramid.level(target);
        let resized = [
            resize_level(pyramid.level(PyramidLevel::L1), target_map)?,
            resize_level(pyramid.level(PyramidLevel::L2), target_map)?,
            resize_level(pyramid.level(PyramidLevel::L3), target_map)?,
        ];
        let weights = fusion_weights(&resized, &asff, target)?;
        let fused = asff_fuse(&pyramid, &asff, target)?;

        for y in 0..target_map.height() {
            for x in 0..target_map.width() {
                let sum: f64 = (0..3).map(|s| weights[s].get(0, y, x)).sum();
                if (sum - 1.0).abs() > 1e-6 {
                    return fail("fusion weights do not sum to one");
                }
                let equal_mode = args.mode != DemoMode::Random && args.params.is_none();
                if equal_mode && (0..3).any(|s| (weights[s].get(0, y, x) - 1.0 / 3.0).abs() > 1e-9)
                {
                    return fail("equal-logit fusion weights are not one third");
                }
                for ch in 0..c {
                    let vals = [
                        resized[0].get(ch, y, x),
                        resized[1].get(ch, y, x),
                        resized[2].get(ch, y, x),
                    ];
                    let lo = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
                    let hi = vals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
                    let f = fused.get(ch, y, x);
                    if f < lo - 1e-12 || f > hi + 1e-12 {
                        return fail("fused value left the convex hull of its sources");
                    }
                }
            }
        }

        let t = target.number();
        for (s, w) in weights.iter().enumerate() {
            records.push(feature_map_record(format!("asff.l{t}.weight{}", s + 1), w));
        }
        records.push(feature_map_record(format!("asff.l{t}.fused"), &fused));
    }

    std::fs::create_dir_all(&args.common.out)?;
    let path = args.common.out.join("demo.tensors");
    std::fs::write(&path, format_records(&records))?;
    println!(
        "demo ok: mode {:?}, {} channels, {} tensor records written to {}",
        args.mode,
        c,
        records.len(),
        path.display()
    );
    let _ = attended;
    Ok(0)
}
