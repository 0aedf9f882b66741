//! Finite-difference verification harness for the analytic loss gradient.
//!
//! The reference derivative of each coordinate is a central difference of the
//! alpha-frozen loss, because the analytic gradient holds alpha constant. The
//! derivative of the full loss (alpha recomputed at every evaluation) is also
//! measured and reported; the two conventions differ by `v * d(alpha)` and
//! only the frozen comparison is held to the pass tolerance.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

use super::{ciou_grad, ciou_loss, ciou_loss_frozen_alpha, ciou_terms, BBox};

/// Pass threshold for the frozen-alpha comparison.
pub const TOLERANCE: f64 = 1e-4;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Minimum distance any sampled pair keeps from the loss's non-smooth points
/// (coordinate ties and grazing overlaps), so no difference straddles a kink.
const KINK_MARGIN: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct GradcheckReport {
    pub pairs: usize,
    /// Worst relative error against the frozen-alpha reference; this is the
    /// number the tolerance applies to.
    pub max_rel_err: f64,
    /// Worst relative error per predicted coordinate (xmin, ymin, xmax, ymax).
    pub per_coord_max: [f64; 4],
    /// Worst pair for the frozen comparison.
    pub worst_pair: (BBox, BBox),
    /// Worst relative error against the full loss with alpha recomputed;
    /// informational, expected to be large away from equal aspects.
    pub max_rel_err_full: f64,
}

impl GradcheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_err <= TOLERANCE
    }
}

/// Relative error with a floor that keeps near-zero components from blowing
/// up the ratio: `|a - b| / max(|a|, |b|, 1e-3)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-3)
}

/// One random box pair with centers in [0, 20)^2 and sides in [0.5, 8),
/// resampled until it clears the kink margin.
pub fn random_box_pair<R: Rng>(rng: &mut R) -> (BBox, BBox) {
    loop {
        let draw = |rng: &mut R| {
            let cx = rng.gen_range(0.0..20.0);
            let cy = rng.gen_range(0.0..20.0);
            let w = rng.gen_range(0.5..8.0);
            let h = rng.gen_range(0.5..8.0);
            BBox::new(cx - w / 2.0, cy - h / 2.0, cx + w / 2.0, cy + h / 2.0).unwrap()
        };
        let pred = draw(rng);
        let gt = draw(rng);

        let tie = (pred.xmin - gt.xmin)
            .abs()
            .min((pred.ymin - gt.ymin).abs())
            .min((pred.xmax - gt.xmax).abs())
            .min((pred.ymax - gt.ymax).abs());
        let iw = pred.xmax.min(gt.xmax) - pred.xmin.max(gt.xmin);
        let ih = pred.ymax.min(gt.ymax) - pred.ymin.max(gt.ymin);
        if tie > KINK_MARGIN && iw.abs() > KINK_MARGIN && ih.abs() > KINK_MARGIN {
            return (pred, gt);
        }
    }
}

fn perturbed(b: &BBox, coord: usize, delta: f64) -> BBox {
    let mut out = *b;
    match coord {
        0 => out.xmin += delta,
        1 => out.ymin += delta,
        2 => out.xmax += delta,
        _ => out.ymax += delta,
    }
    out
}

/// Run the sweep over `pairs` seeded random pairs. `corrupt` biases the
/// analytic gradient and must make the check fail; it exists so callers can
/// prove the harness actually detects wrong gradients.
pub fn run(seed: u64, pairs: usize, corrupt: bool) -> Result<GradcheckReport> {
    if pairs == 0 {
        return Err(Error::Config("gradcheck needs at least one pair".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradcheckReport {
        pairs,
        max_rel_err: 0.0,
        per_coord_max: [0.0; 4],
        worst_pair: (
            BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
            BBox::new(0.0, 0.0, 1.0, 1.0).unwrap(),
        ),
        max_rel_err_full: 0.0,
    };

    for _ in 0..pairs {
        let (pred, gt) = random_box_pair(&mut rng);
        let mut analytic = ciou_grad(&pred, &gt)?;
        if corrupt {
            analytic[0] += 0.5;
        }
        let alpha = ciou_terms(&pred, &gt)?.alpha;

        for coord in 0..4 {
            let hi = perturbed(&pred, coord, FD_STEP);
            let lo = perturbed(&pred, coord, -FD_STEP);

            let fd_frozen = (ciou_loss_frozen_alpha(&hi, &gt, alpha)?
                - ciou_loss_frozen_alpha(&lo, &gt, alpha)?)
                / (2.0 * FD_STEP);
            let err = relative_error(analytic[coord], fd_frozen);
            report.per_coord_max[coord] = report.per_coord_max[coord].max(err);
            if err > report.max_rel_err {
                report.max_rel_err = err;
                report.worst_pair = (pred, gt);
            }

            let fd_full = (ciou_loss(&hi, &gt)? - ciou_loss(&lo, &gt)?) / (2.0 * FD_STEP);
            report.max_rel_err_full =
                report.max_rel_err_full.max(relative_error(analytic[coord], fd_full));
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sweep_passes() {
        let report = run(2024, 1000, false).unwrap();
        assert!(report.passed(), "max rel err {}", report.max_rel_err);
        assert!(report.max_rel_err <= TOLERANCE);
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        let report = run(2024, 50, true).unwrap();
        assert!(!report.passed());
    }

    #[test]
    fn sampled_pairs_clear_the_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let (pred, gt) = random_box_pair(&mut rng);
            assert!(pred.width() > 0.0 && pred.height() > 0.0);
            assert!(gt.width() > 0.0 && gt.height() > 0.0);
            let tie = (pred.xmin - gt.xmin)
                .abs()
                .min((pred.ymin - gt.ymin).abs())
                .min((pred.xmax - gt.xmax).abs())
                .min((pred.ymax - gt.ymax).abs());
            assert!(tie > 1e-3);
        }
    }

    #[test]
    fn rejects_empty_sweep() {
        assert!(matches!(run(1, 0, false), Err(Error::Config(_))));
    }
}
