//! Prediction interchange: one JSON object per line,
//! `{"image_id": str, "class": str, "score": float, "bbox": [x0, y0, x1, y1]}`.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::boxloss::BBox;
use crate::error::{Error, Result};
use crate::eval::Detection;

use super::ClassTable;

#[derive(Debug, Serialize, Deserialize)]
struct Record {
    image_id: String,
    class: String,
    score: f64,
    bbox: [f64; 4],
}

/// Read newline-delimited prediction records, resolving class names against
/// the table. Any malformed or invalid line fails with its line number.
pub fn read_predictions<R: BufRead>(reader: R, classes: &ClassTable) -> Result<Vec<Detection>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let class_id = classes.id_of(&record.class).ok_or_else(|| Error::Parse {
            line: line_no,
            msg: format!("unknown class {:?}", record.class),
        })?;
        let [x0, y0, x1, y1] = record.bbox;
        let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| Error::Parse {
            line: line_no,
            msg: e.to_string(),
        })?;
        let det = Detection::new(record.image_id, class_id, record.score, bbox)
            .map_err(|e| Error::Parse { line: line_no, msg: e.to_string() })?;
        out.push(det);
    }
    Ok(out)
}

pub fn read_predictions_file(path: &Path, classes: &ClassTable) -> Result<Vec<Detection>> {
    read_predictions(BufReader::new(std::fs::File::open(path)?), classes)
}

/// Write records in input order; scores round-trip at full precision.
pub fn write_predictions<W: Write>(
    dets: &[Detection],
    classes: &ClassTable,
    mut writer: W,
) -> Result<()> {
    for det in dets {
        let class = classes.name_of(det.class_id).ok_or_else(|| {
            Error::Config(format!("class id {} is not in the class table", det.class_id))
        })?;
        let record = Record {
            image_id: det.image_id.clone(),
            class: class.to_string(),
            score: det.score,
            bbox: [det.bbox.xmin, det.bbox.ymin, det.bbox.xmax, det.bbox.ymax],
        };
        let json = serde_json::to_string(&record)
            .map_err(|e| Error::Format(format!("cannot serialize prediction: {e}")))?;
        writeln!(writer, "{json}")?;
    }
    Ok(())
}

pub fn write_predictions_file(dets: &[Detection], classes: &ClassTable, path: &Path) -> Result<()> {
    let mut file = std::fs::File::create(path)?;
    write_predictions(dets, classes, &mut file)
}
