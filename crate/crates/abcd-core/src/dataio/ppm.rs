//! Binary PPM (P6) codec, maxval 255 only. Header comments (`#` to end of
//! line) are accepted on read; the writer emits the canonical three-line
//! header.

use std::path::Path;

use crate::error::{Error, Result};

use super::ImageRgb;

struct HeaderScanner<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderScanner<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b' ' | b'\t' | b'\r' | b'\n' => self.pos += 1,
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&'a [u8]> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Format("truncated ppm header".into()));
        }
        Ok(&self.bytes[start..self.pos])
    }

    fn int(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        std::str::from_utf8(tok)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| Error::Format(format!("ppm {what} is not a number")))
    }
}

pub fn decode_ppm(bytes: &[u8]) -> Result<ImageRgb> {
    let mut scan = HeaderScanner { bytes, pos: 0 };
    let magic = scan.token()?;
    if magic != b"P6" {
        return Err(Error::Format(format!(
            "expected P6 magic, got {:?}",
            String::from_utf8_lossy(magic)
        )));
    }
    let width = scan.int("width")?;
    let height = scan.int("height")?;
    let maxval = scan.int("maxval")?;
    if maxval != 255 {
        return Err(Error::Format(format!("only maxval 255 is supported, got {maxval}")));
    }
    // exactly one whitespace byte separates the header from the raster
    if scan.pos >= bytes.len() || !bytes[scan.pos].is_ascii_whitespace() {
        return Err(Error::Format("missing separator after maxval".into()));
    }
    scan.pos += 1;

    let need = 3 * width * height;
    let raster = &bytes[scan.pos..];
    if raster.len() < need {
        return Err(Error::Format(format!(
            "truncated raster: need {need} bytes, have {}",
            raster.len()
        )));
    }
    ImageRgb::new(width, height, raster[..need].to_vec())
}

pub fn encode_ppm(image: &ImageRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend_from_slice(image.pixels());
    out
}

pub fn load_image(path: &Path) -> Result<ImageRgb> {
    decode_ppm(&std::fs::read(path)?)
}

pub fn save_image(path: &Path, image: &ImageRgb) -> Result<()> {
    std::fs::write(path, encode_ppm(image))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smallest_image_round_trips() {
        let bytes = b"P6\n1 1\n255\n\xff\x00\x00";
        let img = decode_ppm(bytes).unwrap();
        assert_eq!((img.width(), img.height()), (1, 1));
        assert_eq!(img.pixel(0, 0), [255, 0, 0]);
        assert_eq!(encode_ppm(&img), bytes);
    }

    #[test]
    fn header_comments_are_skipped() {
        let bytes = b"P6\n# made by hand\n2 1\n# another\n255\n\x01\x02\x03\x04\x05\x06";
        let img = decode_ppm(bytes).unwrap();
        assert_eq!(img.pixel(1, 0), [4, 5, 6]);
    }

    #[test]
    fn rejects_wrong_magic_maxval_and_truncation() {
        assert!(matches!(decode_ppm(b"P5\n1 1\n255\n\x00"), Err(Error::Format(_))));
        assert!(matches!(
            decode_ppm(b"P6\n1 1\n65535\n\x00\x00\x00"),
            Err(Error::Format(_))
        ));
        assert!(matches!(decode_ppm(b"P6\n2 2\n255\n\x00\x00"), Err(Error::Format(_))));
        assert!(matches!(decode_ppm(b"P6\n1 1\n255"), Err(Error::Format(_))));
    }

    #[test]
    fn encode_decode_is_identity() {
        let mut img = ImageRgb::filled(3, 2, [10, 20, 30]).unwrap();
        img.set_pixel(2, 1, [200, 100, 0]);
        assert_eq!(decode_ppm(&encode_ppm(&img)).unwrap(), img);
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.ppm");
        let img = ImageRgb::filled(4, 3, [9, 8, 7]).unwrap();
        save_image(&path, &img).unwrap();
        assert_eq!(load_image(&path).unwrap(), img);
    }
}
