//! Adaptively spatial feature fusion: resize pyramid levels to a common size,
//! turn per-level 1x1-conv logits into per-location softmax weights, and take
//! the convex combination.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{conv2d, resize_nearest, FeatureMap, Kernel2D};

/// Pyramid level, ordered from largest receptive field / smallest spatial
/// dims (`L1`) to smallest receptive field / largest spatial dims (`L3`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PyramidLevel {
    L1,
    L2,
    L3,
}

impl PyramidLevel {
    pub const ALL: [PyramidLevel; 3] = [PyramidLevel::L1, PyramidLevel::L2, PyramidLevel::L3];

    pub fn index(self) -> usize {
        match self {
            PyramidLevel::L1 => 0,
            PyramidLevel::L2 => 1,
            PyramidLevel::L3 => 2,
        }
    }

    pub fn number(self) -> usize {
        self.index() + 1
    }

    pub fn from_number(n: usize) -> Result<Self> {
        match n {
            1 => Ok(PyramidLevel::L1),
            2 => Ok(PyramidLevel::L2),
            3 => Ok(PyramidLevel::L3),
            _ => Err(Error::Config(format!("pyramid level must be 1, 2 or 3, got {n}"))),
        }
    }
}

/// Three feature maps sharing a channel count, with spatial dims non-decreasing
/// from level 1 to level 3.
#[derive(Debug, Clone, PartialEq)]
pub struct PyramidFeatures {
    x1: FeatureMap,
    x2: FeatureMap,
    x3: FeatureMap,
}

impl PyramidFeatures {
    pub fn new(x1: FeatureMap, x2: FeatureMap, x3: FeatureMap) -> Result<Self> {
        if x1.channels() != x2.channels() || x2.channels() != x3.channels() {
            return Err(Error::Shape(format!(
                "pyramid levels must share a channel count, got {}, {}, {}",
                x1.channels(),
                x2.channels(),
                x3.channels()
            )));
        }
        let ordered = x1.height() <= x2.height()
            && x2.height() <= x3.height()
            && x1.width() <= x2.width()
            && x2.width() <= x3.width();
        if !ordered {
            return Err(Error::Shape(format!(
                "pyramid spatial dims must be non-decreasing from level 1 to 3, got {:?}, {:?}, {:?}",
                x1.shape(),
                x2.shape(),
                x3.shape()
            )));
        }
        Ok(Self { x1, x2, x3 })
    }

    pub fn level(&self, level: PyramidLevel) -> &FeatureMap {
        match level {
            PyramidLevel::L1 => &self.x1,
            PyramidLevel::L2 => &self.x2,
            PyramidLevel::L3 => &self.x3,
        }
    }

    pub fn channels(&self) -> usize {
        self.x1.channels()
    }
}

/// Fusion-weight generators: for each target level, one 1x1 single-output
/// kernel per source level, producing the logit map for that source.
#[derive(Debug, Clone, PartialEq)]
pub struct AsffParams {
    generators: Vec<Kernel2D>,
    channels: usize,
}

impl AsffParams {
    pub fn new(generators: [[Kernel2D; 3]; 3]) -> Result<Self> {
        let flat: Vec<Kernel2D> = generators.into_iter().flatten().collect();
        let channels = flat[0].in_channels();
        for g in &flat {
            if g.out_channels() != 1 || g.size() != 1 || g.in_channels() != channels {
                return Err(Error::Shape(format!(
                    "weight generator must be 1x{channels}x1x1, got {}x{}x{}x{}",
                    g.out_channels(),
                    g.in_channels(),
                    g.size(),
                    g.size()
                )));
            }
        }
        Ok(Self { generators: flat, channels })
    }

    /// All-zero generators: every logit is zero, so all weights are 1/3.
    pub fn zeros(channels: usize) -> Result<Self> {
        let make = || Kernel2D::zeros(1, channels, 1);
        Self::new([
            [make()?, make()?, make()?],
            [make()?, make()?, make()?],
            [make()?, make()?, make()?],
        ])
    }

    pub fn random_uniform<R: Rng>(
        channels: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let make = |rng: &mut R| Kernel2D::random_uniform(1, channels, 1, lo, hi, rng);
        Self::new([
            [make(rng)?, make(rng)?, make(rng)?],
            [make(rng)?, make(rng)?, make(rng)?],
            [make(rng)?, make(rng)?, make(rng)?],
        ])
    }

    pub fn generator(&self, target: PyramidLevel, source: PyramidLevel) -> &Kernel2D {
        &self.generators[target.index() * 3 + source.index()]
    }

    pub fn channels(&self) -> usize {
        self.channels
    }
}

/// Resample `src` to the spatial dims of `target` (nearest neighbor).
pub fn resize_level(src: &FeatureMap, target: &FeatureMap) -> Result<FeatureMap> {
    if src.channels() != target.channels() {
        return Err(Error::Shape(format!(
            "cannot resize level with {} channels to target with {}",
            src.channels(),
            target.channels()
        )));
    }
    resize_nearest(src, target.height(), target.width())
}

/// Per-location softmax weights over the three resized source maps. The three
/// outputs are single-channel maps that sum to one at every location.
pub fn fusion_weights(
    resized: &[FeatureMap; 3],
    params: &AsffParams,
    target: PyramidLevel,
) -> Result<[FeatureMap; 3]> {
    let (h, w) = (resized[0].height(), resized[0].width());
    for m in resized.iter() {
        if m.height() != h || m.width() != w {
            return Err(Error::Shape(format!(
                "resized maps must share spatial dims, got {:?} vs {h}x{w}",
                m.shape()
            )));
        }
    }
    let logits: Vec<FeatureMap> = PyramidLevel::ALL
        .iter()
        .enumerate()
        .map(|(s, &source)| conv2d(&resized[s], params.generator(target, source)))
        .collect::<Result<_>>()?;

    let mut weights = [vec![0.0; h * w], vec![0.0; h * w], vec![0.0; h * w]];
    for y in 0..h {
        for x in 0..w {
            let l = [logits[0].get(0, y, x), logits[1].get(0, y, x), logits[2].get(0, y, x)];
            let m = l.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let e = [(l[0] - m).exp(), (l[1] - m).exp(), (l[2] - m).exp()];
            let sum = e[0] + e[1] + e[2];
            for s in 0..3 {
                weights[s][y * w + x] = e[s] / sum;
            }
        }
    }
    let [w0, w1, w2] = weights;
    Ok([
        FeatureMap::new(1, h, w, w0)?,
        FeatureMap::new(1, h, w, w1)?,
        FeatureMap::new(1, h, w, w2)?,
    ])
}

/// Fuse the pyramid at `target`: every level is resized to the target's dims,
/// scaled by its weight map, and summed.
pub fn asff_fuse(
    pyramid: &PyramidFeatures,
    params: &AsffParams,
    target: PyramidLevel,
) -> Result<FeatureMap> {
    if pyramid.channels() != params.channels() {
        return Err(Error::Shape(format!(
            "fusion params built for {} channels, pyramid has {}",
            params.channels(),
            pyramid.channels()
        )));
    }
    let target_map = pyramid.level(target);
    let resized = [
        resize_level(pyramid.level(PyramidLevel::L1), target_map)?,
        resize_level(pyramid.level(PyramidLevel::L2), target_map)?,
        resize_level(pyramid.level(PyramidLevel::L3), target_map)?,
    ];
    let weights = fusion_weights(&resized, params, target)?;

    let (ch, h, w) = resized[0].shape();
    FeatureMap::from_fn(ch, h, w, |c, y, x| {
        (0..3)
            .map(|s| resized[s].get(c, y, x) * weights[s].get(0, y, x))
            .sum()
    })
}
