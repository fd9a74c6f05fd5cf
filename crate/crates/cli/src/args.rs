//! Command-line argument definitions.
//!
//! Every knob is optional on the command line; unset values fall back to
//! the key=value config file (`--config`), then to the defaults that
//! reproduce the baseline pipeline (8×8 grid, threshold 64, weights
//! 1/−0.75, no noise, seed 0). Flags always win over the file.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "camo", version, about = "Distributed camouflage pipeline simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Run the full pipeline on an image and write all artifacts.
    Run(RunArgs),
    /// Sweep noise rates and write the mean pixel differences.
    Sweep(SweepArgs),
    /// Run the pattern generator alone from a binarized image.
    Generate(GenerateArgs),
    /// Write a synthetic test image.
    Synth(SynthArgs),
}

/// Options shared by every subcommand.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// Input image (PGM, P2 or P5).
    #[arg(long)]
    pub image: Option<PathBuf>,

    /// Optional key=value config file; flags override its entries.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Output directory (created if missing).
    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Grid rows.
    #[arg(long)]
    pub rows: Option<usize>,

    /// Grid columns.
    #[arg(long)]
    pub cols: Option<usize>,

    /// Root seed for all randomness.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Probability a sensed color is replaced by a random one.
    #[arg(long = "rho-meas")]
    pub rho_meas: Option<f64>,

    /// Probability an individual message delivery is lost.
    #[arg(long = "rho-comm")]
    pub rho_comm: Option<f64>,

    /// Stripe-vs-mottled classification threshold.
    #[arg(long = "class-threshold")]
    pub class_threshold: Option<f64>,

    /// Black/white threshold for seeding the generator.
    #[arg(long = "binarize-threshold")]
    pub binarize_threshold: Option<f64>,

    /// Activator cell contribution (positive).
    #[arg(long)]
    pub w1: Option<f64>,

    /// Inhibitor cell contribution (negative).
    #[arg(long)]
    pub w2: Option<f64>,

    /// Generator iteration budget.
    #[arg(long)]
    pub iterations: Option<u32>,

    /// Enable TDMA slot collisions.
    #[arg(long)]
    pub tdma: bool,

    /// Kill an agent mid-run, as id@frame (repeatable).
    #[arg(long = "kill")]
    pub kills: Vec<String>,

    /// Consensus weight mode: loss-adapted or static-graph.
    #[arg(long)]
    pub consensus: Option<String>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Trials per sweep point.
    #[arg(long)]
    pub trials: Option<u32>,

    /// Comma-separated loss rates (default 0 to 0.5 in steps of 0.05).
    #[arg(long)]
    pub rhos: Option<String>,

    /// Comma-separated modes from meas-only, comm-only, both (default all).
    #[arg(long)]
    pub modes: Option<String>,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Pattern class: horizontal, vertical, or mottled.
    #[arg(long)]
    pub class: Option<String>,

    /// Override the activator extents, as "ax,ay".
    #[arg(long)]
    pub activator: Option<String>,

    /// Override the inhibitor extents, as "ix,iy".
    #[arg(long)]
    pub inhibitor: Option<String>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[command(flatten)]
    pub common: CommonArgs,

    /// Which image to write: hstripes, vstripes, or checker.
    #[arg(long)]
    pub pattern: Option<String>,

    /// Image width in pixels.
    #[arg(long)]
    pub width: Option<usize>,

    /// Image height in pixels.
    #[arg(long)]
    pub height: Option<usize>,

    /// Stripe band height / checker square size in pixels.
    #[arg(long)]
    pub band: Option<usize>,
}
