use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use regms_core::transforms::{DEFAULT_T1_OFFSET, DEFAULT_T1_SCALE, DEFAULT_T2_C0};
use regms_core::{GridSpec, Kernel, ResponseTransform};

#[derive(Debug, Parser)]
#[command(name = "regms", version, about = "Regression mean-shift mode seeking")]
pub struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition the samples by the mode their ascent reaches.
    Partition(PartitionArgs),
    /// Write only the estimated modes.
    Modes(FitArgs),
    /// Trace ridge points with the subspace-constrained iteration.
    Ridge(RidgeArgs),
    /// Select the bandwidth by gradient cross-validation.
    Bandwidth(BandwidthArgs),
    /// Draw a dataset from the bimodal benchmark model.
    Simulate(SimulateArgs),
    /// Monte Carlo experiments on the benchmark model.
    #[command(subcommand)]
    Experiment(ExperimentCommand),
}

#[derive(Debug, Subcommand)]
pub enum ExperimentCommand {
    /// Frequency of detecting exactly two modes.
    Modecount(ModecountArgs),
    /// Median Hausdorff distance to the true modes as n grows.
    Rate(RateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KernelArg {
    Biweight,
    Gaussian,
}

impl From<KernelArg> for Kernel {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::Biweight => Kernel::Biweight,
            KernelArg::Gaussian => Kernel::Gaussian,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum TransformArg {
    T1,
    T2,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "biweight")]
    pub kernel: KernelArg,

    #[arg(long, value_enum, default_value = "t1")]
    pub transform: TransformArg,

    #[arg(long, default_value_t = DEFAULT_T1_SCALE)]
    pub t1_scale: f64,

    #[arg(long, default_value_t = DEFAULT_T1_OFFSET)]
    pub t1_offset: f64,

    #[arg(long, default_value_t = DEFAULT_T2_C0)]
    pub t2_c0: f64,
}

impl ModelArgs {
    pub fn transform(&self) -> ResponseTransform {
        match self.transform {
            TransformArg::T1 => ResponseTransform::T1 {
                scale: self.t1_scale,
                offset: self.t1_offset,
            },
            TransformArg::T2 => ResponseTransform::T2 { c0: self.t2_c0 },
        }
    }

    pub fn kernel(&self) -> Kernel {
        self.kernel.into()
    }
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Cross-validation grid `min:max:count[:log|lin]`.
    #[arg(long)]
    pub h_grid: Option<GridSpec>,

    /// Grid for the pilot regression bandwidth.
    #[arg(long)]
    pub pilot_grid: Option<GridSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct BandwidthChoice {
    /// Fixed bandwidth.
    #[arg(long, conflicts_with = "auto_h", required_unless_present = "auto_h")]
    pub h: Option<f64>,

    /// Choose the bandwidth by cross-validation.
    #[arg(long)]
    pub auto_h: bool,

    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// CSV with header `x1,...,xd,y`.
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub bandwidth: BandwidthChoice,
}

#[derive(Debug, Clone, Args)]
pub struct PartitionArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Also write every ascent path.
    #[arg(long)]
    pub trajectories: bool,
}

#[derive(Debug, Clone, Args)]
pub struct RidgeArgs {
    #[command(flatten)]
    pub fit: FitArgs,

    /// Subspace index, `2 <= s <= d`.
    #[arg(long, default_value_t = 2)]
    pub s: usize,
}

#[derive(Debug, Clone, Args)]
pub struct BandwidthArgs {
    #[arg(long)]
    pub input: PathBuf,

    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentBandwidth {
    /// Fixed bandwidth for every replicate.
    #[arg(long, conflicts_with = "auto_h")]
    pub h: Option<f64>,

    /// Cross-validated bandwidth per replicate (the default).
    #[arg(long)]
    pub auto_h: bool,

    #[command(flatten)]
    pub grids: GridArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ModecountArgs {
    #[arg(long, default_value_t = 200)]
    pub n: usize,

    #[arg(long, default_value_t = 200)]
    pub reps: usize,

    /// Base seed; replicate `r` uses `seed + r`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub bandwidth: ExperimentBandwidth,

    /// Count modes over a bandwidth grid `min:max:count[:log|lin]` instead.
    #[arg(long, conflicts_with_all = ["h", "auto_h"])]
    pub sweep: Option<GridSpec>,
}

#[derive(Debug, Clone, Args)]
pub struct RateArgs {
    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "200,500,1000")]
    pub sizes: Vec<usize>,

    #[arg(long, default_value_t = 200)]
    pub reps: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, default_value = ".")]
    pub output_dir: PathBuf,

    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub bandwidth: ExperimentBandwidth,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definitions_are_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn fixed_and_auto_conflict() {
        let r = Cli::try_parse_from(["regms", "modes", "--input", "a.csv", "--h", "1", "--auto-h"]);
        assert!(r.is_err());
        let r = Cli::try_parse_from(["regms", "modes", "--input", "a.csv"]);
        assert!(r.is_err());
    }

    #[test]
    fn grid_flag_parses() {
        let cli = Cli::try_parse_from([
            "regms", "bandwidth", "--input", "a.csv", "--h-grid", "0.5:2:4", "--transform", "t2",
        ])
        .unwrap();
        let Command::Bandwidth(b) = cli.command else {
            panic!("wrong subcommand")
        };
        assert_eq!(b.grids.h_grid.unwrap().count, 4);
        assert!(matches!(b.model.transform(), ResponseTransform::T2 { .. }));
    }
}
