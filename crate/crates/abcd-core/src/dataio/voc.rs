//! VOC-style annotation XML: `size/width`, `size/height`, and zero or more
//! `object` entries carrying `name` and integer `bndbox` corners.

use crate::boxloss::BBox;
use crate::error::{Error, Result};
use crate::eval::GroundTruth;

use super::{AnnotatedImage, ClassTable, UnknownClass};

/// Parse result: the annotations plus any non-fatal warnings (clamped boxes,
/// skipped unknown classes).
#[derive(Debug, Clone)]
pub struct VocAnnotation {
    pub image: AnnotatedImage,
    pub warnings: Vec<String>,
}

fn parse_error(doc: Option<&roxmltree::Document>, pos: usize, msg: String) -> Error {
    let line = doc.map(|d| d.text_pos_at(pos).row as usize).unwrap_or(1);
    Error::Parse { line, msg }
}

fn child_text<'a>(
    doc: &roxmltree::Document,
    node: roxmltree::Node<'a, 'a>,
    name: &str,
) -> Result<&'a str> {
    let child = node.children().find(|c| c.has_tag_name(name)).ok_or_else(|| {
        parse_error(
            Some(doc),
            node.range().start,
            format!("<{}> is missing <{name}>", node.tag_name().name()),
        )
    })?;
    Ok(child.text().unwrap_or("").trim())
}

fn child_int(doc: &roxmltree::Document, node: roxmltree::Node, name: &str) -> Result<i64> {
    let text = child_text(doc, node, name)?;
    text.parse::<i64>().map_err(|_| {
        parse_error(
            Some(doc),
            node.range().start,
            format!("<{name}> must be an integer, got {text:?}"),
        )
    })
}

/// Strip one extension from a filename-ish string.
fn stem(name: &str) -> &str {
    match name.rfind('.') {
        Some(i) if i > 0 => &name[..i],
        _ => name,
    }
}

/// Parse one annotation file. The image id comes from the `<filename>` stem
/// when present. Boxes are clamped to the declared image bounds; unknown
/// class names are skipped with a warning or rejected, per `unknown`.
pub fn parse_voc_xml(
    text: &str,
    classes: &ClassTable,
    unknown: UnknownClass,
) -> Result<VocAnnotation> {
    let doc = roxmltree::Document::parse(text).map_err(|e| Error::Parse {
        line: e.pos().row as usize,
        msg: e.to_string(),
    })?;
    let root = doc.root_element();

    let size = root
        .children()
        .find(|c| c.has_tag_name("size"))
        .ok_or_else(|| parse_error(Some(&doc), root.range().start, "missing <size>".into()))?;
    let width = child_int(&doc, size, "width")?;
    let height = child_int(&doc, size, "height")?;
    if width <= 0 || height <= 0 {
        return Err(parse_error(
            Some(&doc),
            size.range().start,
            format!("image size must be positive, got {width}x{height}"),
        ));
    }

    let image_id = root
        .children()
        .find(|c| c.has_tag_name("filename"))
        .and_then(|c| c.text())
        .map(|t| stem(t.trim()).to_string())
        .unwrap_or_default();

    let mut warnings = Vec::new();
    let mut annotations = Vec::new();
    for object in root.children().filter(|c| c.has_tag_name("object")) {
        let name = child_text(&doc, object, "name")?;
        let class_id = match classes.id_of(name) {
            Some(id) => id,
            None => match unknown {
                UnknownClass::Skip => {
                    warnings.push(format!("skipping object with unknown class {name:?}"));
                    continue;
                }
                UnknownClass::Error => {
                    return Err(parse_error(
                        Some(&doc),
                        object.range().start,
                        format!("unknown class {name:?}"),
                    ));
                }
            },
        };

        let bndbox = object
            .children()
            .find(|c| c.has_tag_name("bndbox"))
            .ok_or_else(|| {
                parse_error(Some(&doc), object.range().start, "<object> is missing <bndbox>".into())
            })?;
        let xmin = child_int(&doc, bndbox, "xmin")?;
        let ymin = child_int(&doc, bndbox, "ymin")?;
        let xmax = child_int(&doc, bndbox, "xmax")?;
        let ymax = child_int(&doc, bndbox, "ymax")?;
        if xmax < xmin || ymax < ymin {
            return Err(parse_error(
                Some(&doc),
                bndbox.range().start,
                format!("box corners out of order: ({xmin}, {ymin}, {xmax}, {ymax})"),
            ));
        }

        let clamp = |v: i64, hi: i64| v.clamp(0, hi);
        let (cx0, cy0) = (clamp(xmin, width), clamp(ymin, height));
        let (cx1, cy1) = (clamp(xmax, width), clamp(ymax, height));
        if (cx0, cy0, cx1, cy1) != (xmin, ymin, xmax, ymax) {
            warnings.push(format!(
                "clamped box ({xmin}, {ymin}, {xmax}, {ymax}) to image bounds {width}x{height}"
            ));
        }

        annotations.push(GroundTruth::new(
            image_id.clone(),
            class_id,
            BBox::new(cx0 as f64, cy0 as f64, cx1 as f64, cy1 as f64)?,
        ));
    }

    Ok(VocAnnotation {
        image: AnnotatedImage {
            image_id,
            width: width as usize,
            height: height as usize,
            image: None,
            annotations,
        },
        warnings,
    })
}

/// Render annotations back to the same schema, e.g. after augmentation. Box
/// corners are rounded to integers as the schema requires.
pub fn write_voc_xml(image: &AnnotatedImage, classes: &ClassTable) -> Result<String> {
    let mut out = String::new();
    out.push_str("<annotation>\n");
    out.push_str(&format!("  <filename>{}.ppm</filename>\n", image.image_id));
    out.push_str("  <size>\n");
    out.push_str(&format!("    <width>{}</width>\n", image.width));
    out.push_str(&format!("    <height>{}</height>\n", image.height));
    out.push_str("    <depth>3</depth>\n");
    out.push_str("  </size>\n");
    for ann in &image.annotations {
        let name = classes.name_of(ann.class_id).ok_or_else(|| {
            Error::Config(format!("class id {} is not in the class table", ann.class_id))
        })?;
        out.push_str("  <object>\n");
        out.push_str(&format!("    <name>{name}</name>\n"));
        out.push_str("    <bndbox>\n");
        out.push_str(&format!("      <xmin>{}</xmin>\n", ann.bbox.xmin.round() as i64));
        out.push_str(&format!("      <ymin>{}</ymin>\n", ann.bbox.ymin.round() as i64));
        out.push_str(&format!("      <xmax>{}</xmax>\n", ann.bbox.xmax.round() as i64));
        out.push_str(&format!("      <ymax>{}</ymax>\n", ann.bbox.ymax.round() as i64));
        out.push_str("    </bndbox>\n");
        out.push_str("  </object>\n");
    }
    out.push_str("</annotation>\n");
    Ok(out)
}
