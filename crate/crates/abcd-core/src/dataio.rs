//! Dataset ingestion and preparation: VOC-style XML annotations, binary PPM
//! images, the seeded train/val/test split, box-consistent augmentation, and
//! the prediction interchange format.

mod augment;
mod ppm;
mod predictions;
mod split;
mod voc;

pub use augment::{augment, AugmentOp};
pub use ppm::{decode_ppm, encode_ppm, load_image, save_image};
pub use predictions::{
    read_predictions, read_predictions_file, write_predictions, write_predictions_file,
};
pub use split::{split_dataset, DatasetSplit};
pub use voc::{parse_voc_xml, write_voc_xml, VocAnnotation};

use crate::error::{Error, Result};
use crate::eval::GroundTruth;

/// 8-bit RGB image, row-major, three bytes per pixel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Shape(format!(
                "image dims must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != 3 * width * height {
            return Err(Error::Shape(format!(
                "image {width}x{height} needs {} bytes, got {}",
                3 * width * height,
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let mut pixels = Vec::with_capacity(3 * width * height);
        for _ in 0..width * height {
            pixels.extend_from_slice(&rgb);
        }
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = 3 * (y * self.width + x);
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let i = 3 * (y * self.width + x);
        self.pixels[i..i + 3].copy_from_slice(&rgb);
    }
}

/// One dataset entry: declared size, optional pixels, annotations. The pixels
/// may be absent when only the annotations are being processed.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnotatedImage {
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    pub image: Option<ImageRgb>,
    pub annotations: Vec<GroundTruth>,
}

/// Class-name table mapping names to dense ids in declaration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassTable {
    names: Vec<String>,
}

impl ClassTable {
    pub fn new(names: Vec<String>) -> Result<Self> {
        if names.is_empty() {
            return Err(Error::Config("class table needs at least one class".into()));
        }
        for (i, name) in names.iter().enumerate() {
            if name.is_empty() {
                return Err(Error::Config("class names must be non-empty".into()));
            }
            if names[..i].contains(name) {
                return Err(Error::Config(format!("duplicate class name {name}")));
            }
        }
        Ok(Self { names })
    }

    /// The blood-cell default: RBC, WBC, Platelets.
    pub fn bccd() -> Self {
        Self::new(vec!["RBC".into(), "WBC".into(), "Platelets".into()])
            .expect("default table is valid")
    }

    pub fn id_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn name_of(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(|s| s.as_str())
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

impl Default for ClassTable {
    fn default() -> Self {
        Self::bccd()
    }
}

/// What to do with an annotation whose class name is not in the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnknownClass {
    /// Drop the annotation and record a warning.
    Skip,
    /// Fail the parse.
    Error,
}

/// Split ratios plus the shuffle seed. Ratios must be positive and sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, val: f64, test: f64, seed: u64) -> Result<Self> {
        for (name, v) in [("train", train), ("val", val), ("test", test)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Config(format!("{name} ratio must be positive, got {v}")));
            }
        }
        if ((train + val + test) - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "ratios must sum to 1, got {}",
                train + val + test
            )));
        }
        Ok(Self { train, val, test, seed })
    }

    /// The 7:2:1 protocol.
    pub fn seven_two_one(seed: u64) -> Self {
        Self::new(0.7, 0.2, 0.1, seed).expect("7:2:1 is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn image_validation() {
        assert!(matches!(ImageRgb::new(0, 1, vec![]), Err(Error::Shape(_))));
        assert!(matches!(ImageRgb::new(2, 2, vec![0; 11]), Err(Error::Shape(_))));
        let img = ImageRgb::filled(2, 2, [1, 2, 3]).unwrap();
        assert_eq!(img.pixel(1, 1), [1, 2, 3]);
    }

    #[test]
    fn class_table_lookup_and_validation() {
        let t = ClassTable::bccd();
        assert_eq!(t.id_of("RBC"), Some(0));
        assert_eq!(t.id_of("WBC"), Some(1));
        assert_eq!(t.id_of("Platelets"), Some(2));
        assert_eq!(t.id_of("nope"), None);
        assert_eq!(t.name_of(2), Some("Platelets"));
        assert!(matches!(ClassTable::new(vec![]), Err(Error::Config(_))));
        assert!(matches!(
            ClassTable::new(vec!["a".into(), "a".into()]),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn split_spec_validation() {
        assert!(SplitSpec::new(0.7, 0.2, 0.1, 0).is_ok());
        assert!(matches!(SplitSpec::new(0.7, 0.2, 0.2, 0), Err(Error::Config(_))));
        assert!(matches!(SplitSpec::new(0.0, 0.5, 0.5, 0), Err(Error::Config(_))));
    }
}
