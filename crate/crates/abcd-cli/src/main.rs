//! `abcd` command line: evaluation runs, dataset splits, augmentation jobs,
//! gradient checks, synthetic module demos, and throughput benchmarks.
//!
//! Exit codes: 0 success, 1 assertion or tolerance failure, 2 usage/IO error.

mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "abcd", version, about = "Detection-math toolkit for blood-cell imagery")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommonOpts {
    /// Seed for all randomized work; falls back to $ABCD_SEED, then 0.
    #[arg(long)]
    seed: Option<u64>,

    /// Output directory for generated files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

impl CommonOpts {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or_else(|| {
            std::env::var("ABCD_SEED").ok().and_then(|s| s.parse().ok()).unwrap_or(0)
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a prediction file against VOC-style annotations.
    Eval(commands::eval::EvalArgs),
    /// Split a dataset directory into train/val/test id lists (7:2:1).
    Split(commands::split::SplitArgs),
    /// Apply augmentations to a dataset directory, rewriting images and XML.
    Augment(commands::augment::AugmentArgs),
    /// Verify the analytic loss gradient against finite differences.
    Gradcheck(commands::gradcheck::GradcheckArgs),
    /// Exercise the attention and fusion modules on a synthetic pyramid.
    Demo(commands::demo::DemoArgs),
    /// Measure throughput of the core operations.
    Bench(commands::bench::BenchArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Eval(args) => commands::eval::run(args),
        Command::Split(args) => commands::split::run(args),
        Command::Augment(args) => commands::augment::run(args),
        Command::Gradcheck(args) => commands::gradcheck::run(args),
        Command::Demo(args) => commands::demo::run(args),
        Command::Bench(args) => commands::bench::run(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
