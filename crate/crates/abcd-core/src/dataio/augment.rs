//! The four augmentation families with box-consistent transforms: flips and
//! quarter-turn rotations move pixels and boxes exactly; hue and exposure
//! touch pixels only.

use crate::boxloss::BBox;
use crate::error::{Error, Result};

use super::ImageRgb;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AugmentOp {
    HFlip,
    VFlip,
    /// Counterclockwise quarter turns, 1 to 3.
    Rot90 { quarter_turns: u8 },
    /// Hue rotation in degrees, [-180, 180].
    HueShift { degrees: f64 },
    /// Per-channel brightness scale, positive; clamps at 255.
    Exposure { factor: f64 },
}

impl AugmentOp {
    pub fn rot90(quarter_turns: u8) -> Result<Self> {
        if !(1..=3).contains(&quarter_turns) {
            return Err(Error::Config(format!(
                "rot90 takes 1 to 3 quarter turns, got {quarter_turns}"
            )));
        }
        Ok(AugmentOp::Rot90 { quarter_turns })
    }

    pub fn hue_shift(degrees: f64) -> Result<Self> {
        if !degrees.is_finite() || !(-180.0..=180.0).contains(&degrees) {
            return Err(Error::Config(format!(
                "hue shift must be within [-180, 180] degrees, got {degrees}"
            )));
        }
        Ok(AugmentOp::HueShift { degrees })
    }

    pub fn exposure(factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor <= 0.0 {
            return Err(Error::Config(format!(
                "exposure factor must be positive, got {factor}"
            )));
        }
        Ok(AugmentOp::Exposure { factor })
    }

    /// Parse a CLI-style spec: `hflip`, `vflip`, `rot90:K`, `hue:DEG`,
    /// `exposure:FACTOR`.
    pub fn parse(spec: &str) -> Result<Self> {
        let (head, arg) = match spec.split_once(':') {
            Some((h, a)) => (h, Some(a)),
            None => (spec, None),
        };
        let number = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::Config(format!("{head} needs an argument, e.g. {head}:{what}")))?
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("bad {head} argument {:?}", arg.unwrap())))
        };
        match head {
            "hflip" => Ok(AugmentOp::HFlip),
            "vflip" => Ok(AugmentOp::VFlip),
            "rot90" => AugmentOp::rot90(number("1")? as u8),
            "hue" => AugmentOp::hue_shift(number("30")?),
            "exposure" => AugmentOp::exposure(number("1.2")?),
            other => Err(Error::Config(format!("unknown augmentation {other:?}"))),
        }
    }

    /// Filesystem-safe tag for output naming.
    pub fn slug(&self) -> String {
        match self {
            AugmentOp::HFlip => "hflip".into(),
            AugmentOp::VFlip => "vflip".into(),
            AugmentOp::Rot90 { quarter_turns } => format!("rot{}", 90 * *quarter_turns as usize),
            AugmentOp::HueShift { degrees } => format!("hue{}", degrees.round() as i64),
            AugmentOp::Exposure { factor } => {
                format!("exp{}", (factor * 100.0).round() as i64)
            }
        }
    }
}

/// Round half up to an 8-bit channel; the input is already clamped.
fn quantize(value: f64) -> u8 {
    (value + 0.5).floor() as u8
}

/// Hexcone conversion; hue in [0, 360), saturation and value in [0, 1].
fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let r = rgb[0] as f64 / 255.0;
    let g = rgb[1] as f64 / 255.0;
    let b = rgb[2] as f64 / 255.0;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;

    let value = max;
    let saturation = if max == 0.0 { 0.0 } else { delta / max };
    let hue = if delta == 0.0 {
        0.0
    } else if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (hue, saturation, value)
}

fn hsv_to_rgb(hue: f64, saturation: f64, value: f64) -> [u8; 3] {
    let h = hue.rem_euclid(360.0) / 60.0;
    let c = value * saturation;
    let x = c * (1.0 - (h % 2.0 - 1.0).abs());
    let (r1, g1, b1) = match h as usize {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    let m = value - c;
    [
        quantize((r1 + m) * 255.0),
        quantize((g1 + m) * 255.0),
        quantize((b1 + m) * 255.0),
    ]
}

fn hflip(img: &ImageRgb, boxes: &[BBox]) -> (ImageRgb, Vec<BBox>) {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            out.set_pixel(w - 1 - x, y, img.pixel(x, y));
        }
    }
    let wf = w as f64;
    let boxes = boxes
        .iter()
        .map(|b| BBox { xmin: wf - b.xmax, ymin: b.ymin, xmax: wf - b.xmin, ymax: b.ymax })
        .collect();
    (out, boxes)
}

fn vflip(img: &ImageRgb, boxes: &[BBox]) -> (ImageRgb, Vec<BBox>) {
    let (w, h) = (img.width(), img.height());
    let mut out = img.clone();
    for y in 0..h {
        for x in 0..w {
            out.set_pixel(x, h - 1 - y, img.pixel(x, y));
        }
    }
    let hf = h as f64;
    let boxes = boxes
        .iter()
        .map(|b| BBox { xmin: b.xmin, ymin: hf - b.ymax, xmax: b.xmax, ymax: hf - b.ymin })
        .collect();
    (out, boxes)
}

/// One counterclockwise quarter turn: destination (x, y) reads source
/// (W-1-y, x); a box (x0, y0, x1, y1) becomes (y0, W-x1, y1, W-x0).
fn rot90_once(img: &ImageRgb, boxes: &[BBox]) -> (ImageRgb, Vec<BBox>) {
    let (w, h) = (img.width(), img.height());
    let mut pixels = vec![0u8; 3 * w * h];
    let mut out = ImageRgb::new(h, w, std::mem::take(&mut pixels)).expect("swapped dims are valid");
    for y in 0..w {
        for x in 0..h {
            out.set_pixel(x, y, img.pixel(w - 1 - y, x));
        }
    }
    let wf = w as f64;
    let boxes = boxes
        .iter()
        .map(|b| BBox { xmin: b.ymin, ymin: wf - b.xmax, xmax: b.ymax, ymax: wf - b.xmin })
        .collect();
    (out, boxes)
}

/// Apply one augmentation; returns the transformed image and boxes.
pub fn augment(img: &ImageRgb, boxes: &[BBox], op: &AugmentOp) -> Result<(ImageRgb, Vec<BBox>)> {
    match op {
        AugmentOp::HFlip => Ok(hflip(img, boxes)),
        AugmentOp::VFlip => Ok(vflip(img, boxes)),
        AugmentOp::Rot90 { quarter_turns } => {
            if !(1..=3).contains(quarter_turns) {
                return Err(Error::Config(format!(
                    "rot90 takes 1 to 3 quarter turns, got {quarter_turns}"
                )));
            }
            let mut state = (img.clone(), boxes.to_vec());
            for _ in 0..*quarter_turns {
                state = rot90_once(&state.0, &state.1);
            }
            Ok(state)
        }
        AugmentOp::HueShift { degrees } => {
            if !degrees.is_finite() || !(-180.0..=180.0).contains(degrees) {
                return Err(Error::Config(format!(
                    "hue shift must be within [-180, 180] degrees, got {degrees}"
                )));
            }
            let mut out = img.clone();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let (h, s, v) = rgb_to_hsv(img.pixel(x, y));
                    out.set_pixel(x, y, hsv_to_rgb(h + degrees, s, v));
                }
            }
            Ok((out, boxes.to_vec()))
        }
        AugmentOp::Exposure { factor } => {
            if !factor.is_finite() || *factor <= 0.0 {
                return Err(Error::Config(format!(
                    "exposure factor must be positive, got {factor}"
                )));
            }
            let mut out = img.clone();
            for y in 0..img.height() {
                for x in 0..img.width() {
                    let p = img.pixel(x, y);
                    out.set_pixel(
                        x,
                        y,
                        [
                            quantize((p[0] as f64 * factor).min(255.0)),
                            quantize((p[1] as f64 * factor).min(255.0)),
                            quantize((p[2] as f64 * factor).min(255.0)),
                        ],
                    );
                }
            }
            Ok((out, boxes.to_vec()))
        }
    }
}
