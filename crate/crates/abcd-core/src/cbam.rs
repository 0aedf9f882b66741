//! Convolutional block attention: a per-channel gate from pooled statistics
//! through a shared bottleneck, then a per-location gate from cross-channel
//! statistics through a 7x7 convolution, applied serially and multiplicatively.

use rand::Rng;

use crate::error::{Error, Result};
use crate::tensor::{
    activate, activate_vec, channel_stat_pool, conv2d, dense2, elementwise, elementwise_channels,
    global_pool, Activation, ElemOp, FeatureMap, Kernel2D, Mlp2, PoolMode,
};

/// Bottleneck reduction ratio used when none is given.
pub const DEFAULT_REDUCTION: usize = 16;

/// Spatial gate kernel size; fixed, not configurable.
pub const SPATIAL_KERNEL_SIZE: usize = 7;

/// Parameters for one attention block over maps with a fixed channel count.
///
/// The bottleneck is shared by the average- and max-pool branches. The spatial
/// kernel always reads the 2-channel stat map and emits a single channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CbamParams {
    mlp: Mlp2,
    spatial_kernel: Kernel2D,
}

impl CbamParams {
    pub fn new(mlp: Mlp2, spatial_kernel: Kernel2D) -> Result<Self> {
        if spatial_kernel.in_channels() != 2
            || spatial_kernel.out_channels() != 1
            || spatial_kernel.size() != SPATIAL_KERNEL_SIZE
        {
            return Err(Error::Config(format!(
                "spatial kernel must be 1x2x{SPATIAL_KERNEL_SIZE}x{SPATIAL_KERNEL_SIZE}, got {}x{}x{}x{}",
                spatial_kernel.out_channels(),
                spatial_kernel.in_channels(),
                spatial_kernel.size(),
                spatial_kernel.size()
            )));
        }
        Ok(Self { mlp, spatial_kernel })
    }

    /// All-zero parameters: both gates become uniform 0.5.
    pub fn zeros(channels: usize) -> Result<Self> {
        Self::zeros_with_reduction(channels, DEFAULT_REDUCTION)
    }

    pub fn zeros_with_reduction(channels: usize, reduction: usize) -> Result<Self> {
        Self::new(
            Mlp2::zeros(channels, reduction)?,
            Kernel2D::zeros(1, 2, SPATIAL_KERNEL_SIZE)?,
        )
    }

    /// Uniform random parameters in `[lo, hi)` from the caller's generator.
    pub fn random_uniform<R: Rng>(
        channels: usize,
        reduction: usize,
        lo: f64,
        hi: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(
            Mlp2::random_uniform(channels, reduction, lo, hi, rng)?,
            Kernel2D::random_uniform(1, 2, SPATIAL_KERNEL_SIZE, lo, hi, rng)?,
        )
    }

    pub fn mlp(&self) -> &Mlp2 {
        &self.mlp
    }

    pub fn spatial_kernel(&self) -> &Kernel2D {
        &self.spatial_kernel
    }

    pub fn reduction(&self) -> usize {
        self.mlp.reduction()
    }

    pub fn channels(&self) -> usize {
        self.mlp.in_dim()
    }
}

/// Per-channel gate: `sigmoid(mlp(avgpool(F)) + mlp(maxpool(F)))`.
pub fn channel_attention(input: &FeatureMap, params: &CbamParams) -> Result<Vec<f64>> {
    if input.channels() != params.channels() {
        return Err(Error::Shape(format!(
            "attention params built for {} channels, map has {}",
            params.channels(),
            input.channels()
        )));
    }
    let avg = dense2(&global_pool(input, PoolMode::Avg), &params.mlp)?;
    let max = dense2(&global_pool(input, PoolMode::Max), &params.mlp)?;
    let summed: Vec<f64> = avg.iter().zip(max.iter()).map(|(a, m)| a + m).collect();
    Ok(activate_vec(&summed, Activation::Sigmoid))
}

/// Per-location gate: `sigmoid(conv7x7([mean; max] across channels))`, one channel.
pub fn spatial_attention(input: &FeatureMap, params: &CbamParams) -> Result<FeatureMap> {
    let stats = channel_stat_pool(input);
    let logits = conv2d(&stats, &params.spatial_kernel)?;
    Ok(activate(&logits, Activation::Sigmoid))
}

/// Serial application, channel gate first: `F'' = Ms(F') * F'` with `F' = Mc(F) * F`.
pub fn cbam_apply(input: &FeatureMap, params: &CbamParams) -> Result<FeatureMap> {
    let channel_gate = channel_attention(input, params)?;
    let gated = elementwise_channels(ElemOp::Mul, input, &channel_gate)?;
    let spatial_gate = spatial_attention(&gated, params)?;
    elementwise(ElemOp::Mul, &gated, &spatial_gate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_wrong_spatial_kernel() {
        let mlp = Mlp2::zeros(4, 2).unwrap();
        let bad = Kernel2D::zeros(1, 2, 3).unwrap();
        assert!(matches!(CbamParams::new(mlp, bad), Err(Error::Config(_))));
    }

    #[test]
    fn channel_attention_zero_params_is_half() {
        let params = CbamParams::zeros(3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let input = FeatureMap::random_uniform(3, 4, 4, -2.0, 2.0, &mut rng).unwrap();
        let w = channel_attention(&input, &params).unwrap();
        assert_eq!(w, vec![0.5; 3]);
    }

    #[test]
    fn channel_attention_constant_map_doubles_branch() {
        // constant map: avg and max pools coincide, so the gate is sigmoid(2 * mlp(pool))
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mlp = Mlp2::random_uniform(2, 1, -1.0, 1.0, &mut rng).unwrap();
        let params = CbamParams::new(mlp.clone(), Kernel2D::zeros(1, 2, 7).unwrap()).unwrap();
        let input = FeatureMap::constant(2, 3, 3, 1.5).unwrap();
        let got = channel_attention(&input, &params).unwrap();
        let branch = dense2(&global_pool(&input, PoolMode::Avg), &mlp).unwrap();
        let expected: Vec<f64> =
            activate_vec(&branch.iter().map(|v| 2.0 * v).collect::<Vec<_>>(), Activation::Sigmoid);
        assert_eq!(got, expected);
    }

    #[test]
    fn channel_attention_hand_value() {
        // C=1, r=1, W0=[1], W1=[1], zero biases, constant-1 input:
        // sigmoid(relu(1) + relu(1)) = sigmoid(2)
        let mlp = Mlp2::new(1, 1, vec![1.0], vec![0.0], vec![1.0], vec![0.0]).unwrap();
        let params = CbamParams::new(mlp, Kernel2D::zeros(1, 2, 7).unwrap()).unwrap();
        let input = FeatureMap::constant(1, 2, 2, 1.0).unwrap();
        let w = channel_attention(&input, &params).unwrap();
        assert!((w[0] - 0.8807970779778823).abs() < 1e-12);
    }

    #[test]
    fn channel_attention_shape_error() {
        let params = CbamParams::zeros(3).unwrap();
        let input = FeatureMap::zeros(2, 2, 2).unwrap();
        assert!(matches!(channel_attention(&input, &params), Err(Error::Shape(_))));
    }

    #[test]
    fn spatial_attention_zero_params_is_half() {
        let params = CbamParams::zeros(2).unwrap();
        let input = FeatureMap::constant(2, 3, 4, 2.0).unwrap();
        let att = spatial_attention(&input, &params).unwrap();
        assert_eq!(att.shape(), (1, 3, 4));
        assert!(att.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn spatial_attention_stays_in_unit_interval() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = CbamParams::random_uniform(3, 2, -1.0, 1.0, &mut rng).unwrap();
        let input = FeatureMap::random_uniform(3, 5, 5, -3.0, 3.0, &mut rng).unwrap();
        let att = spatial_attention(&input, &params).unwrap();
        assert!(att.data().iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn spatial_attention_interior_saturates_on_ones() {
        // constant-1 single channel: stat pool gives two constant-1 channels, so an
        // all-ones 7x7 kernel sums 98 at interior pixels and the gate saturates
        let mlp = Mlp2::zeros(1, 1).unwrap();
        let kernel = Kernel2D::new(1, 2, 7, vec![1.0; 98], vec![0.0]).unwrap();
        let params = CbamParams::new(mlp, kernel).unwrap();
        let input = FeatureMap::constant(1, 20, 20, 1.0).unwrap();
        let att = spatial_attention(&input, &params).unwrap();
        assert!((att.get(0, 10, 10) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn apply_zero_params_quarters_input() {
        let params = CbamParams::zeros(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let input = FeatureMap::random_uniform(2, 4, 4, -2.0, 2.0, &mut rng).unwrap();
        let out = cbam_apply(&input, &params).unwrap();
        for (o, i) in out.data().iter().zip(input.data().iter()) {
            assert_eq!(*o, 0.25 * i);
        }
    }

    #[test]
    fn apply_zero_input_stays_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let params = CbamParams::random_uniform(3, 2, -1.0, 1.0, &mut rng).unwrap();
        let input = FeatureMap::zeros(3, 3, 3).unwrap();
        let out = cbam_apply(&input, &params).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn apply_matches_explicit_two_step_composition() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..10 {
            let params = CbamParams::random_uniform(4, 2, -1.0, 1.0, &mut rng).unwrap();
            let input = FeatureMap::random_uniform(4, 5, 6, -2.0, 2.0, &mut rng).unwrap();

            let out = cbam_apply(&input, &params).unwrap();

            let mc = channel_attention(&input, &params).unwrap();
            let f1 = elementwise_channels(ElemOp::Mul, &input, &mc).unwrap();
            let ms = spatial_attention(&f1, &params).unwrap();
            let f2 = elementwise(ElemOp::Mul, &f1, &ms).unwrap();
            assert_eq!(out, f2);
        }
    }

    #[test]
    fn output_never_exceeds_input_magnitude() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..20 {
            let params = CbamParams::random_uniform(3, 2, -2.0, 2.0, &mut rng).unwrap();
            let input = FeatureMap::random_uniform(3, 4, 4, -5.0, 5.0, &mut rng).unwrap();
            let out = cbam_apply(&input, &params).unwrap();
            assert_eq!(out.shape(), input.shape());
            for (o, i) in out.data().iter().zip(input.data().iter()) {
                assert!(o.abs() <= i.abs());
            }
        }
    }

    #[test]
    fn serial_order_is_channel_then_spatial() {
        // applying the gates in the opposite order must produce a different map
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let params = CbamParams::random_uniform(3, 2, -1.0, 1.0, &mut rng).unwrap();
        let input = FeatureMap::random_uniform(3, 6, 6, -2.0, 2.0, &mut rng).unwrap();

        let serial = cbam_apply(&input, &params).unwrap();

        let ms = spatial_attention(&input, &params).unwrap();
        let g1 = elementwise(ElemOp::Mul, &input, &ms).unwrap();
        let mc = channel_attention(&g1, &params).unwrap();
        let swapped = elementwise_channels(ElemOp::Mul, &g1, &mc).unwrap();

        let max_diff = serial
            .data()
            .iter()
            .zip(swapped.data().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-9, "gate order made no difference: {max_diff}");
    }

    #[test]
    fn attention_is_not_positively_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let params = CbamParams::random_uniform(2, 1, -1.0, 1.0, &mut rng).unwrap();
        let input = FeatureMap::random_uniform(2, 3, 3, 0.5, 2.0, &mut rng).unwrap();
        let scale = 3.0;

        let out_scaled = cbam_apply(&input.map(|v| scale * v).unwrap(), &params).unwrap();
        let scaled_out = cbam_apply(&input, &params).unwrap().map(|v| scale * v).unwrap();
        let max_diff = out_scaled
            .data()
            .iter()
            .zip(scaled_out.data().iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(max_diff > 1e-9, "scaling commuted with attention: {max_diff}");
    }
}
