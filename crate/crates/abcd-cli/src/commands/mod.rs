pub mod augment;
pub mod bench;
pub mod demo;
pub mod eval;
pub mod gradcheck;
pub mod split;

use std::path::Path;

use abcd_core::dataio::{parse_voc_xml, ClassTable, UnknownClass, VocAnnotation};
use anyhow::{Context, Result};

/// Load every `.xml` annotation in a directory, sorted by file stem. The
/// image id is the file stem, so predictions and annotations always agree.
pub fn load_annotation_dir(dir: &Path, classes: &ClassTable) -> Result<Vec<VocAnnotation>> {
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("cannot read annotation directory {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "xml"))
        .collect();
    paths.sort();

    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = std::fs::read_to_string(&path)
            .with_context(|| format!("cannot read {}", path.display()))?;
        let mut parsed = parse_voc_xml(&text, classes, UnknownClass::Skip)
            .with_context(|| format!("cannot parse {}", path.display()))?;
        for warning in &parsed.warnings {
            eprintln!("warning: {}: {warning}", path.display());
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        parsed.image.image_id = stem.clone();
        for ann in &mut parsed.image.annotations {
            ann.image_id = stem.clone();
        }
        out.push(parsed);
    }
    Ok(out)
}
