use std::path::PathBuf;

use abcd_core::boxloss::BBox;
use abcd_core::dataio::{augment, load_image, save_image, write_voc_xml, AugmentOp, ClassTable};
use anyhow::{Context, Result};
use clap::Args;

use super::load_annotation_dir;
use crate::CommonOpts;

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Directory of VOC-style .xml annotations with sibling .ppm images.
    dataset: PathBuf,

    /// Comma-separated op specs: hflip, vflip, rot90:K, hue:DEG, exposure:F.
    #[arg(long, default_value = "hflip,vflip,rot90:1,hue:30,exposure:1.25")]
    ops: String,

    #[command(flatten)]
    common: CommonOpts,
}

pub fn run(args: AugmentArgs) -> Result<u8> {
    let ops: Vec<AugmentOp> = args
        .ops
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| AugmentOp::parse(s.trim()).map_err(anyhow::Error::from))
        .collect::<Result<_>>()?;
    if ops.is_empty() {
        anyhow::bail!("no augmentation ops given");
    }

    let classes = ClassTable::bccd();
    let annotations = load_annotation_dir(&args.dataset, &classes)?;
    if annotations.is_empty() {
        anyhow::bail!("no annotation files found in {}", args.dataset.display());
    }
    std::fs::create_dir_all(&args.common.out)?;

    let mut written = 0usize;
    for entry in &annotations {
        let id = &entry.image.image_id;
        let image_path = args.dataset.join(format!("{id}.ppm"));
        let image = if image_path.exists() {
            Some(load_image(&image_path).with_context(|| format!("cannot load {}", image_path.display()))?)
        } else {
            eprintln!("warning: no image for {id}, transforming annotations only");
            None
        };
        let boxes: Vec<BBox> = entry.image.annotations.iter().map(|a| a.bbox).collect();

        for op in &ops {
            let out_id = format!("{id}__{}", op.slug());
            let mut out_entry = entry.image.clone();
            out_entry.image_id = out_id.clone();
            for ann in &mut out_entry.annotations {
                ann.image_id = out_id.clone();
            }

            match &image {
                Some(img) => {
                    let (timg, tboxes) = augment(img, &boxes, op)?;
                    for (ann, b) in out_entry.annotations.iter_mut().zip(tboxes) {
                        ann.bbox = b;
                    }
                    out_entry.width = timg.width();
                    out_entry.height = timg.height();
                    save_image(&args.common.out.join(format!("{out_id}.ppm")), &timg)?;
                }
                None => {
                    // no pixels: run the same transform on a placeholder so the
                    // boxes and declared dims stay consistent
                    let blank = abcd_core::dataio::ImageRgb::filled(
                        out_entry.width,
                        out_entry.height,
                        [0, 0, 0],
                    )?;
                    let (timg, tboxes) = augment(&blank, &boxes, op)?;
                    for (ann, b) in out_entry.annotations.iter_mut().zip(tboxes) {
                        ann.bbox = b;
                    }
                    out_entry.width = timg.width();
                    out_entry.height = timg.height();
                }
            }

            let xml = write_voc_xml(&out_entry, &classes)?;
            std::fs::write(args.common.out.join(format!("{out_id}.xml")), xml)?;
            written += 1;
        }
    }
    println!("wrote {written} augmented variants for {} images", annotations.len());
    Ok(0)
}
