use std::path::PathBuf;

use abcd_core::dataio::{split_dataset, ClassTable, SplitSpec};
use anyhow::{Context, Result};
use clap::Args;

use super::load_annotation_dir;
use crate::CommonOpts;

#[derive(Args, Debug)]
pub struct SplitArgs {
    /// Directory of VOC-style .xml annotations.
    dataset: PathBuf,

    #[command(flatten)]
    common: CommonOpts,
}

pub fn run(args: SplitArgs) -> Result<u8> {
    let classes = ClassTable::bccd();
    let annotations = load_annotation_dir(&args.dataset, &classes)?;
    let ids: Vec<String> = annotations.iter().map(|a| a.image.image_id.clone()).collect();
    if ids.is_empty() {
        anyhow::bail!("no annotation files found in {}", args.dataset.display());
    }

    let spec = SplitSpec::seven_two_one(args.common.seed());
    let split = split_dataset(&ids, &spec)?;

    std::fs::create_dir_all(&args.common.out)?;
    for (name, part) in [("train", &split.train), ("val", &split.val), ("test", &split.test)] {
        let path = args.common.out.join(format!("{name}.txt"));
        let mut body = part.join("\n");
        if !body.is_empty() {
            body.push('\n');
        }
        std::fs::write(&path, body).with_context(|| format!("cannot write {}", path.display()))?;
        println!("{name}: {} ids", part.len());
    }
    Ok(0)
}
