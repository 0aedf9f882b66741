use abcd_core::boxloss::gradcheck;
use anyhow::Result;
use clap::Args;

use crate::CommonOpts;

#[derive(Args, Debug)]
pub struct GradcheckArgs {
    /// Number of random box pairs to sweep.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,

    /// Bias the analytic gradient to prove the harness detects it.
    #[arg(long, hide = true)]
    corrupt: bool,

    #[command(flatten)]
    common: CommonOpts,
}

pub fn run(args: GradcheckArgs) -> Result<u8> {
    let report = gradcheck::run(args.common.seed(), args.pairs, args.corrupt)?;

    println!(
        "ciou gradient check: {} pairs, seed {}, central differences at step {:e}",
        report.pairs,
        args.common.seed(),
        gradcheck::FD_STEP
    );
    println!("coordinate  max relative error");
    for (name, err) in ["xmin", "ymin", "xmax", "ymax"].iter().zip(report.per_coord_max) {
        println!("{name:<10}  {err:.3e}");
    }
    println!(
        "worst pair: pred ({:.4}, {:.4}, {:.4}, {:.4}) vs gt ({:.4}, {:.4}, {:.4}, {:.4})",
        report.worst_pair.0.xmin,
        report.worst_pair.0.ymin,
        report.worst_pair.0.xmax,
        report.worst_pair.0.ymax,
        report.worst_pair.1.xmin,
        report.worst_pair.1.ymin,
        report.worst_pair.1.xmax,
        report.worst_pair.1.ymax,
    );
    println!(
        "alpha-recomputed reference: {:.3e} (informational; conventions differ away from equal aspects)",
        report.max_rel_err_full
    );
    let verdict = if report.passed() { "PASS" } else { "FAIL" };
    println!(
        "max relative error {:.3e} vs tolerance {:.1e}: {verdict}",
        report.max_rel_err,
        gradcheck::TOLERANCE
    );
    Ok(if report.passed() { 0 } else { 1 })
}
