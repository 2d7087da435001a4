//! Monte Carlo drivers over the bimodal benchmark model.
//!
//! Replicate `r` draws its data with seed `base_seed + r`. Replicates may run
//! in parallel; results are collected in replicate order, so reports do not
//! depend on scheduling.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{select_bandwidth, GridSpec};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{DensityFloor, FittedModel};
use crate::kernels::Kernel;
use crate::modeseek::{hausdorff, partition_samples, IterationConfig, Partition};
use crate::simulation::{simulate_bimodal, SimulationSpec};
use crate::transforms::ResponseTransform;

/// Grid resolution used to locate the true modes of the benchmark surface.
pub const TRUE_MODE_RESOLUTION: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum BandwidthPolicy {
    /// Gradient cross-validation; `None` grids fall back to the data-driven
    /// default.
    Auto {
        grid: Option<GridSpec>,
        pilot_grid: Option<GridSpec>,
    },
    Fixed { h: f64 },
}

impl BandwidthPolicy {
    pub fn auto() -> Self {
        BandwidthPolicy::Auto {
            grid: None,
            pilot_grid: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub transform: ResponseTransform,
    pub kernel: Kernel,
    pub policy: BandwidthPolicy,
    pub density_floor: DensityFloor,
}

impl PipelineConfig {
    pub fn new(transform: ResponseTransform, kernel: Kernel, policy: BandwidthPolicy) -> Self {
        Self {
            transform,
            kernel,
            policy,
            density_floor: DensityFloor::default(),
        }
    }
}

/// Resolve the bandwidth for `data` under `policy`.
pub fn choose_bandwidth(data: &Dataset, cfg: &PipelineConfig) -> Result<f64> {
    match &cfg.policy {
        BandwidthPolicy::Fixed { h } => Ok(*h),
        BandwidthPolicy::Auto { grid, pilot_grid } => {
            let default = GridSpec::default_for(data);
            let grid = grid.unwrap_or(default).values()?;
            let pilot = pilot_grid.unwrap_or(default).values()?;
            Ok(select_bandwidth(data, &cfg.transform, cfg.kernel, &grid, &pilot)?.selected)
        }
    }
}

/// Fit at `h` and partition the samples with the default iteration settings.
pub fn partition_at(data: &Dataset, cfg: &PipelineConfig, h: f64) -> Result<Partition> {
    let model = FittedModel::fit(data, &cfg.transform, cfg.kernel, h, cfg.density_floor)?;
    partition_samples(&model, &IterationConfig::for_bandwidth(h))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateOutcome {
    pub replicate: usize,
    pub seed: u64,
    pub bandwidth: f64,
    pub mode_count: usize,
    pub modes: Vec<Vec<f64>>,
    /// Hausdorff distance from the estimated modes to the true mode set.
    pub hausdorff: Option<f64>,
}

pub fn run_replicate(
    sim: &SimulationSpec,
    cfg: &PipelineConfig,
    replicate: usize,
    truth: &[Vec<f64>],
) -> Result<ReplicateOutcome> {
    let seed = sim.seed.wrapping_add(replicate as u64);
    let data = simulate_bimodal(&sim.with_seed(seed))?;
    let h = choose_bandwidth(&data, cfg)?;
    let part = partition_at(&data, cfg, h)?;
    let dh = if part.modes.is_empty() || truth.is_empty() {
        None
    } else {
        Some(hausdorff(&part.modes, truth)?)
    };
    Ok(ReplicateOutcome {
        replicate,
        seed,
        bandwidth: h,
        mode_count: part.mode_count(),
        modes: part.modes,
        hausdorff: dh,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCountReport {
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub config: PipelineConfig,
    pub replicates: Vec<ReplicateOutcome>,
    /// Number of replicates per detected mode count.
    pub count_distribution: BTreeMap<usize, usize>,
    pub two_mode_frequency: f64,
    pub selected_bandwidths: Vec<f64>,
}

/// Repeat the full pipeline `reps` times and tally detected mode counts.
pub fn modecount_experiment(
    sim: &SimulationSpec,
    cfg: &PipelineConfig,
    reps: usize,
) -> Result<ModeCountReport> {
    if reps == 0 {
        return Err(Error::Config("reps must be at least 1".into()));
    }
    let truth = sim.true_modes(TRUE_MODE_RESOLUTION);
    let replicates: Vec<ReplicateOutcome> = (0..reps)
        .into_par_iter()
        .map(|r| run_replicate(sim, cfg, r, &truth))
        .collect::<Result<_>>()?;
    let mut count_distribution = BTreeMap::new();
    for r in &replicates {
        *count_distribution.entry(r.mode_count).or_insert(0) += 1;
    }
    let two = count_distribution.get(&2).copied().unwrap_or(0);
    Ok(ModeCountReport {
        n: sim.n,
        reps,
        base_seed: sim.seed,
        config: cfg.clone(),
        selected_bandwidths: replicates.iter().map(|r| r.bandwidth).collect(),
        replicates,
        count_distribution,
        two_mode_frequency: two as f64 / reps as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub replicate: usize,
    pub mode_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub n: usize,
    pub reps: usize,
    pub base_seed: u64,
    pub bandwidths: Vec<f64>,
    pub rows: Vec<SweepRow>,
    /// Fraction of replicates with exactly two modes, per bandwidth.
    pub two_mode_frequency: Vec<f64>,
}

/// Mode counts for every `(h, replicate)` pair; the same dataset is reused
/// across bandwidths within a replicate.
pub fn sweep_experiment(
    sim: &SimulationSpec,
    transform: ResponseTransform,
    kernel: Kernel,
    bandwidths: &[f64],
    reps: usize,
) -> Result<SweepReport> {
    if reps == 0 || bandwidths.is_empty() {
        return Err(Error::Config("sweep needs at least one replicate and bandwidth".into()));
    }
    let per_rep: Vec<Vec<usize>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = simulate_bimodal(&sim.with_seed(sim.seed.wrapping_add(r as u64)))?;
            bandwidths
                .iter()
                .map(|&h| {
                    let cfg = PipelineConfig::new(transform, kernel, BandwidthPolicy::Fixed { h });
                    Ok(partition_at(&data, &cfg, h)?.mode_count())
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::with_capacity(reps * bandwidths.len());
    let mut freq = vec![0.0; bandwidths.len()];
    for (hi, &h) in bandwidths.iter().enumerate() {
        for (r, counts) in per_rep.iter().enumerate() {
            rows.push(SweepRow {
                h,
                replicate: r,
                mode_count: counts[hi],
            });
            if counts[hi] == 2 {
                freq[hi] += 1.0;
            }
        }
        freq[hi] /= reps as f64;
    }
    Ok(SweepReport {
        n: sim.n,
        reps,
        base_seed: sim.seed,
        bandwidths: bandwidths.to_vec(),
        rows,
        two_mode_frequency: freq,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub reps: usize,
    pub median_hausdorff: f64,
}

/// Median Hausdorff distance between estimated and true modes for each `n`.
pub fn rate_experiment(
    base: &SimulationSpec,
    cfg: &PipelineConfig,
    sizes: &[usize],
    reps: usize,
) -> Result<Vec<RateRow>> {
    if reps == 0 || sizes.is_empty() {
        return Err(Error::Config("rate experiment needs sizes and reps".into()));
    }
    let truth = base.true_modes(TRUE_MODE_RESOLUTION);
    sizes
        .iter()
        .map(|&n| {
            let sim = SimulationSpec { n, ..base.clone() };
            let mut dists: Vec<f64> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let out = run_replicate(&sim, cfg, r, &truth)?;
                    Ok(out.hausdorff.unwrap_or(f64::INFINITY))
                })
                .collect::<Result<_>>()?;
            Ok(RateRow {
                n,
                reps,
                median_hausdorff: median(&mut dists),
            })
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.sort_by(|a, b| a.total_cmp(b));
    let m = values.len() / 2;
    if values.len() % 2 == 1 {
        values[m]
    } else {
        0.5 * (values[m - 1] + values[m])
    }
}
