//! Minimal deterministic rank-3 array kernel: exactly the dense operations the
//! attention and fusion math needs, in f64, with no autodiff and no framework.

use rand::Rng;

use crate::error::{Error, Result};

/// Numerically stable logistic function.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolMode {
    Avg,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Sigmoid,
    Relu,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => sigmoid(x),
            Activation::Relu => relu(x),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElemOp {
    Mul,
    Add,
}

impl ElemOp {
    fn apply(self, a: f64, b: f64) -> f64 {
        match self {
            ElemOp::Mul => a * b,
            ElemOp::Add => a + b,
        }
    }
}

/// Dense rank-3 real array in row-major `(channel, row, column)` order.
///
/// Values are finite by construction: every constructor rejects NaN/Inf, so a
/// non-finite value appearing anywhere downstream is a bug, not bad data.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || height == 0 || width == 0 {
            return Err(Error::Shape(format!(
                "feature map dims must be positive, got {channels}x{height}x{width}"
            )));
        }
        let expected = channels * height * width;
        if data.len() != expected {
            return Err(Error::Shape(format!(
                "feature map {channels}x{height}x{width} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite value {bad} in feature map")));
        }
        Ok(Self { channels, height, width, data })
    }

    pub fn zeros(channels: usize, height: usize, width: usize) -> Result<Self> {
        Self::new(channels, height, width, vec![0.0; channels * height * width])
    }

    pub fn constant(channels: usize, height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(channels, height, width, vec![value; channels * height * width])
    }

    pub fn from_fn<F>(channels: usize, height: usize, width: usize, mut f: F) -> Result<Self>
    where
        F: FnMut(usize, usize, usize) -> f64,
    {
        let mut data = Vec::with_capacity(channels * height * width);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, y, x));
                }
            }
        }
        Self::new(channels, height, width, data)
    }

    /// Uniform values in `[lo, hi)` from the caller's generator.
    pub fn random_uniform<R: Rng>(
        channels: usize,
        height: usize,
        width: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let data = (0..channels * height * width)
            .map(|_| rng.gen_range(lo..hi))
            .collect();
        Self::new(channels, height, width, data)
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.height, self.width)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    fn idx(&self, c: usize, y: usize, x: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[self.idx(c, y, x)]
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(
            self.channels,
            self.height,
            self.width,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }
}

/// 2D convolution weights: `out_channels x in_channels x size x size` plus a
/// per-output-channel bias. Only odd sizes are accepted so zero padding of
/// `(size-1)/2` preserves spatial dims.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel2D {
    out_channels: usize,
    in_channels: usize,
    size: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl Kernel2D {
    pub fn new(
        out_channels: usize,
        in_channels: usize,
        size: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        if out_channels == 0 || in_channels == 0 || size == 0 {
            return Err(Error::Shape(format!(
                "kernel dims must be positive, got {out_channels}x{in_channels}x{size}x{size}"
            )));
        }
        if size.is_multiple_of(2) {
            return Err(Error::Config(format!("kernel size must be odd, got {size}")));
        }
        let expected = out_channels * in_channels * size * size;
        if weights.len() != expected {
            return Err(Error::Shape(format!(
                "kernel needs {expected} weights, got {}",
                weights.len()
            )));
        }
        if bias.len() != out_channels {
            return Err(Error::Shape(format!(
                "kernel needs {out_channels} bias values, got {}",
                bias.len()
            )));
        }
        if weights.iter().chain(bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite value in kernel".into()));
        }
        Ok(Self { out_channels, in_channels, size, weights, bias })
    }

    pub fn zeros(out_channels: usize, in_channels: usize, size: usize) -> Result<Self> {
        Self::new(
            out_channels,
            in_channels,
            size,
            vec![0.0; out_channels * in_channels * size * size],
            vec![0.0; out_channels],
        )
    }

    pub fn random_uniform<R: Rng>(
        out_channels: usize,
        in_channels: usize,
        size: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let weights = (0..out_channels * in_channels * size * size)
            .map(|_| rng.gen_range(lo..hi))
            .collect();
        let bias = (0..out_channels).map(|_| rng.gen_range(lo..hi)).collect();
        Self::new(out_channels, in_channels, size, weights, bias)
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    #[inline]
    fn weight(&self, o: usize, c: usize, ky: usize, kx: usize) -> f64 {
        self.weights[((o * self.in_channels + c) * self.size + ky) * self.size + kx]
    }
}

/// Two-layer bottleneck: `W1 * relu(W0 * v + b0) + b1`, with the hidden width
/// reduced by `reduction` (never below 1).
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp2 {
    in_dim: usize,
    reduction: usize,
    hidden: usize,
    w0: Vec<f64>,
    b0: Vec<f64>,
    w1: Vec<f64>,
    b1: Vec<f64>,
}

impl Mlp2 {
    pub fn hidden_dim(in_dim: usize, reduction: usize) -> usize {
        (in_dim / reduction).max(1)
    }

    pub fn new(
        in_dim: usize,
        reduction: usize,
        w0: Vec<f64>,
        b0: Vec<f64>,
        w1: Vec<f64>,
        b1: Vec<f64>,
    ) -> Result<Self> {
        if in_dim == 0 || reduction == 0 {
            return Err(Error::Shape(format!(
                "mlp dims must be positive, got in_dim {in_dim}, reduction {reduction}"
            )));
        }
        let hidden = Self::hidden_dim(in_dim, reduction);
        if w0.len() != hidden * in_dim {
            return Err(Error::Shape(format!(
                "w0 needs {} values ({hidden}x{in_dim}), got {}",
                hidden * in_dim,
                w0.len()
            )));
        }
        if b0.len() != hidden {
            return Err(Error::Shape(format!("b0 needs {hidden} values, got {}", b0.len())));
        }
        if w1.len() != in_dim * hidden {
            return Err(Error::Shape(format!(
                "w1 needs {} values ({in_dim}x{hidden}), got {}",
                in_dim * hidden,
                w1.len()
            )));
        }
        if b1.len() != in_dim {
            return Err(Error::Shape(format!("b1 needs {in_dim} values, got {}", b1.len())));
        }
        let all = w0.iter().chain(b0.iter()).chain(w1.iter()).chain(b1.iter());
        if all.into_iter().any(|v| !v.is_finite()) {
            return Err(Error::Input("non-finite value in mlp weights".into()));
        }
        Ok(Self { in_dim, reduction, hidden, w0, b0, w1, b1 })
    }

    pub fn zeros(in_dim: usize, reduction: usize) -> Result<Self> {
        let hidden = Self::hidden_dim(in_dim, reduction);
        Self::new(
            in_dim,
            reduction,
            vec![0.0; hidden * in_dim],
            vec![0.0; hidden],
            vec![0.0; in_dim * hidden],
            vec![0.0; in_dim],
        )
    }

    pub fn random_uniform<R: Rng>(
        in_dim: usize,
        reduction: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let hidden = Self::hidden_dim(in_dim, reduction);
        let mut draw = |n: usize| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<_>>();
        let w0 = draw(hidden * in_dim);
        let b0 = draw(hidden);
        let w1 = draw(in_dim * hidden);
        let b1 = draw(in_dim);
        Self::new(in_dim, reduction, w0, b0, w1, b1)
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn reduction(&self) -> usize {
        self.reduction
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn w0(&self) -> &[f64] {
        &self.w0
    }

    pub fn b0(&self) -> &[f64] {
        &self.b0
    }

    pub fn w1(&self) -> &[f64] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }
}

/// Cross-correlation with zero padding of `(size-1)/2`, so the output keeps
/// the input's spatial dims and has `kernel.out_channels` channels.
pub fn conv2d(input: &FeatureMap, kernel: &Kernel2D) -> Result<FeatureMap> {
    if kernel.in_channels != input.channels {
        return Err(Error::Shape(format!(
            "kernel expects {} input channels, map has {}",
            kernel.in_channels, input.channels
        )));
    }
    let (h, w) = (input.height, input.width);
    let pad = (kernel.size - 1) / 2;
    let mut out = vec![0.0; kernel.out_channels * h * w];
    for o in 0..kernel.out_channels {
        for y in 0..h {
            for x in 0..w {
                let mut acc = kernel.bias[o];
                for c in 0..input.channels {
                    for ky in 0..kernel.size {
                        let sy = y + ky;
                        if sy < pad || sy - pad >= h {
                            continue;
                        }
                        for kx in 0..kernel.size {
                            let sx = x + kx;
                            if sx < pad || sx - pad >= w {
                                continue;
                            }
                            acc += input.get(c, sy - pad, sx - pad) * kernel.weight(o, c, ky, kx);
                        }
                    }
                }
                out[(o * h + y) * w + x] = acc;
            }
        }
    }
    FeatureMap::new(kernel.out_channels, h, w, out)
}

/// Per-channel scalar over the spatial extent: mean for `Avg`, maximum for `Max`.
pub fn global_pool(input: &FeatureMap, mode: PoolMode) -> Vec<f64> {
    let area = (input.height * input.width) as f64;
    (0..input.channels)
        .map(|c| {
            let vals = (0..input.height)
                .flat_map(|y| (0..input.width).map(move |x| (y, x)))
                .map(|(y, x)| input.get(c, y, x));
            match mode {
                PoolMode::Avg => vals.sum::<f64>() / area,
                PoolMode::Max => vals.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

/// Per-pixel statistics across channels: channel 0 holds the mean, channel 1
/// the maximum. Spatial dims are preserved.
pub fn channel_stat_pool(input: &FeatureMap) -> FeatureMap {
    let (ch, h, w) = input.shape();
    let n = ch as f64;
    let mut data = vec![0.0; 2 * h * w];
    for y in 0..h {
        for x in 0..w {
            let mut sum = 0.0;
            let mut max = f64::NEG_INFINITY;
            for c in 0..ch {
                let v = input.get(c, y, x);
                sum += v;
                max = max.max(v);
            }
            data[y * w + x] = sum / n;
            data[(h + y) * w + x] = max;
        }
    }
    FeatureMap::new(2, h, w, data).expect("stat pool of a finite map is finite")
}

/// `W1 * relu(W0 * v + b0) + b1`.
pub fn dense2(v: &[f64], mlp: &Mlp2) -> Result<Vec<f64>> {
    if v.len() != mlp.in_dim {
        return Err(Error::Shape(format!(
            "mlp expects {} inputs, got {}",
            mlp.in_dim,
            v.len()
        )));
    }
    let hidden: Vec<f64> = (0..mlp.hidden)
        .map(|i| {
            let z: f64 = (0..mlp.in_dim).map(|j| mlp.w0[i * mlp.in_dim + j] * v[j]).sum();
            relu(z + mlp.b0[i])
        })
        .collect();
    Ok((0..mlp.in_dim)
        .map(|i| {
            let z: f64 = (0..mlp.hidden).map(|j| mlp.w1[i * mlp.hidden + j] * hidden[j]).sum();
            z + mlp.b1[i]
        })
        .collect())
}

pub fn activate(input: &FeatureMap, kind: Activation) -> FeatureMap {
    input
        .map(|v| kind.apply(v))
        .expect("activations of finite values are finite")
}

pub fn activate_vec(input: &[f64], kind: Activation) -> Vec<f64> {
    input.iter().map(|&v| kind.apply(v)).collect()
}

/// Nearest-neighbor resampling; the source index is `floor(dst * src_dim / dst_dim)`.
pub fn resize_nearest(input: &FeatureMap, new_h: usize, new_w: usize) -> Result<FeatureMap> {
    if new_h == 0 || new_w == 0 {
        return Err(Error::Shape(format!("resize dims must be positive, got {new_h}x{new_w}")));
    }
    let (ch, h, w) = input.shape();
    let mut data = Vec::with_capacity(ch * new_h * new_w);
    for c in 0..ch {
        for y in 0..new_h {
            let sy = y * h / new_h;
            for x in 0..new_w {
                let sx = x * w / new_w;
                data.push(input.get(c, sy, sx));
            }
        }
    }
    FeatureMap::new(ch, new_h, new_w, data)
}

/// Elementwise combine with broadcasting. `b` may be the same shape as `a`, a
/// per-channel `Cx1x1` map applied across the spatial extent, or a `1xHxW` map
/// applied across channels.
pub fn elementwise(op: ElemOp, a: &FeatureMap, b: &FeatureMap) -> Result<FeatureMap> {
    let (ch, h, w) = a.shape();
    if b.shape() == a.shape() {
        let data = a.data.iter().zip(b.data.iter()).map(|(&x, &y)| op.apply(x, y)).collect();
        return FeatureMap::new(ch, h, w, data);
    }
    if b.channels == ch && b.height == 1 && b.width == 1 {
        return elementwise_channels(op, a, &b.data);
    }
    if b.channels == 1 && b.height == h && b.width == w {
        return FeatureMap::from_fn(ch, h, w, |c, y, x| op.apply(a.get(c, y, x), b.get(0, y, x)));
    }
    Err(Error::Shape(format!(
        "cannot broadcast {:?} onto {:?}",
        b.shape(),
        a.shape()
    )))
}

/// Elementwise combine with one scalar per channel, broadcast over `HxW`.
pub fn elementwise_channels(op: ElemOp, a: &FeatureMap, per_channel: &[f64]) -> Result<FeatureMap> {
    if per_channel.len() != a.channels {
        return Err(Error::Shape(format!(
            "per-channel operand has {} values, map has {} channels",
            per_channel.len(),
            a.channels
        )));
    }
    FeatureMap::from_fn(a.channels, a.height, a.width, |c, y, x| {
        op.apply(a.get(c, y, x), per_channel[c])
    })
}
