use std::path::Path;

use anyhow::{bail, Context, Result};
use log::info;
use regms_core::experiment::{
    modecount_experiment, rate_experiment, sweep_experiment, BandwidthPolicy, PipelineConfig,
};
use regms_core::modeseek::partition_with_trajectories;
use regms_core::{
    scms_iterate, select_bandwidth, simulate_bimodal, BandwidthGrid, Dataset, DensityFloor,
    FittedModel, GridSpec, IterationConfig, Kernel, Partition, ResponseTransform, RidgeConfig,
    SimulationSpec,
};
use serde::Serialize;

use crate::args::{
    BandwidthArgs, BandwidthChoice, ExperimentBandwidth, FitArgs, GridArgs, ModecountArgs,
    PartitionArgs, RateArgs, RidgeArgs, SimulateArgs,
};
use crate::output::{coord_header, floats, prepare_dir, write_json, Table};

#[derive(Debug, Serialize)]
struct RunConfig {
    input: String,
    kernel: Kernel,
    transform: ResponseTransform,
    bandwidth: f64,
    bandwidth_selected: bool,
    step_tol: f64,
    max_iter: usize,
    merge_radius: f64,
}

#[derive(Debug, Serialize)]
struct PartitionReport<'a> {
    labels: &'a [i64],
    modes: &'a [Vec<f64>],
    counts: &'a [usize],
    config: RunConfig,
}

fn load(path: &Path) -> Result<Dataset> {
    Dataset::load_csv(path).with_context(|| format!("reading {}", path.display()))
}

fn run_selection(
    data: &Dataset,
    transform: &ResponseTransform,
    kernel: Kernel,
    grids: &GridArgs,
) -> Result<BandwidthGrid> {
    let default = GridSpec::default_for(data);
    let grid = grids.h_grid.unwrap_or(default).values()?;
    let pilot = grids.pilot_grid.unwrap_or(default).values()?;
    Ok(select_bandwidth(data, transform, kernel, &grid, &pilot)?)
}

/// Resolve `--h`/`--auto-h`; the selection curve is written when computed.
fn resolve_bandwidth(
    data: &Dataset,
    fit: &FitArgs,
    choice: &BandwidthChoice,
) -> Result<(f64, bool)> {
    if let Some(h) = choice.h {
        if !(h > 0.0 && h.is_finite()) {
            bail!("--h must be positive, got {h}");
        }
        return Ok((h, false));
    }
    let sel = run_selection(data, &fit.model.transform(), fit.model.kernel(), &choice.grids)?;
    let path = write_json(&fit.output_dir, "bandwidth.json", &sel)?;
    info!("selected h = {} ({})", sel.selected, path.display());
    Ok((sel.selected, true))
}

fn fit_model(fit: &FitArgs) -> Result<(Dataset, FittedModel, RunConfig)> {
    prepare_dir(&fit.output_dir)?;
    let data = load(&fit.input)?;
    let (h, selected) = resolve_bandwidth(&data, fit, &fit.bandwidth)?;
    let transform = fit.model.transform();
    let kernel = fit.model.kernel();
    let model = FittedModel::fit(&data, &transform, kernel, h, DensityFloor::default())?;
    let it = IterationConfig::for_bandwidth(h);
    let config = RunConfig {
        input: fit.input.display().to_string(),
        kernel,
        transform,
        bandwidth: h,
        bandwidth_selected: selected,
        step_tol: it.step_tol,
        max_iter: it.max_iter,
        merge_radius: it.merge_radius,
    };
    Ok((data, model, config))
}

fn write_modes(dir: &Path, part: &Partition, d: usize) -> Result<()> {
    let mut t = Table::create(dir, "modes.csv", &coord_header(&["mode"], d, &["count"]))?;
    for (i, (m, c)) in part.modes.iter().zip(&part.counts).enumerate() {
        let mut row = vec![i.to_string()];
        row.extend(floats(m));
        row.push(c.to_string());
        t.row(row)?;
    }
    t.finish()?;
    Ok(())
}

pub fn partition(args: &PartitionArgs) -> Result<()> {
    let (data, model, config) = fit_model(&args.fit)?;
    let it = IterationConfig::for_bandwidth(config.bandwidth);
    let (part, runs) = partition_with_trajectories(&model, &it)?;
    let dir = &args.fit.output_dir;
    let report = PartitionReport {
        labels: &part.labels,
        modes: &part.modes,
        counts: &part.counts,
        config,
    };
    write_json(dir, "partition.json", &report)?;
    write_modes(dir, &part, data.d())?;
    if args.trajectories {
        let mut t = Table::create(dir, "trajectories.csv", &coord_header(&["start_index", "step"], data.d(), &[]))?;
        for (i, run) in runs.iter().enumerate() {
            for (step, z) in run.trajectory.iter().enumerate() {
                let mut row = vec![i.to_string(), step.to_string()];
                row.extend(floats(z));
                t.row(row)?;
            }
        }
        t.finish()?;
    }
    let unassigned = part.labels.iter().filter(|&&l| l < 0).count();
    println!(
        "{} modes at h = {} ({} unassigned samples)",
        part.mode_count(),
        model.h(),
        unassigned
    );
    Ok(())
}

pub fn modes(args: &FitArgs) -> Result<()> {
    let (data, model, config) = fit_model(args)?;
    let part = regms_core::partition_samples(&model, &IterationConfig::for_bandwidth(config.bandwidth))?;
    write_modes(&args.output_dir, &part, data.d())?;
    println!("{} modes at h = {}", part.mode_count(), model.h());
    Ok(())
}

pub fn ridge(args: &RidgeArgs) -> Result<()> {
    let (data, model, config) = fit_model(&args.fit)?;
    let cfg = RidgeConfig::new(args.s, config.bandwidth);
    cfg.validate(data.d())?;
    let d = data.d();
    let lambdas: Vec<String> = (1..=d).map(|i| format!("lambda{i}")).collect();
    let lambda_refs: Vec<&str> = lambdas.iter().map(String::as_str).collect();
    let mut suffix = vec!["converged", "iterations", "projected_step_norm"];
    suffix.extend(lambda_refs);
    let mut t = Table::create(&args.fit.output_dir, "ridge.csv", &coord_header(&["start_index"], d, &suffix))?;
    let mut converged = 0;
    for i in 0..data.n() {
        let rp = scms_iterate(&model, data.point(i), &cfg)?;
        converged += rp.converged as usize;
        let mut row = vec![i.to_string()];
        row.extend(floats(&rp.point));
        row.push(rp.converged.to_string());
        row.push(rp.iterations.to_string());
        row.extend(floats(&[rp.projected_step_norm]));
        row.extend(floats(&rp.eigenvalues));
        t.row(row)?;
    }
    t.finish()?;
    println!("{converged}/{} starts converged to ridge points", data.n());
    Ok(())
}

pub fn bandwidth(args: &BandwidthArgs) -> Result<()> {
    prepare_dir(&args.output_dir)?;
    let data = load(&args.input)?;
    let sel = run_selection(&data, &args.model.transform(), args.model.kernel(), &args.grids)?;
    write_json(&args.output_dir, "bandwidth.json", &sel)?;
    println!("selected h = {} (pilot h = {})", sel.selected, sel.pilot_bandwidth);
    Ok(())
}

pub fn simulate(args: &SimulateArgs) -> Result<()> {
    prepare_dir(&args.output_dir)?;
    let data = simulate_bimodal(&SimulationSpec::new(args.n, args.seed))?;
    let path = args.output_dir.join("simulated.csv");
    data.save_csv(&path)?;
    println!("wrote {} samples to {}", data.n(), path.display());
    Ok(())
}

fn policy(b: &ExperimentBandwidth) -> Result<BandwidthPolicy> {
    match b.h {
        Some(h) if h > 0.0 && h.is_finite() => Ok(BandwidthPolicy::Fixed { h }),
        Some(h) => bail!("--h must be positive, got {h}"),
        None => Ok(BandwidthPolicy::Auto {
            grid: b.grids.h_grid,
            pilot_grid: b.grids.pilot_grid,
        }),
    }
}

pub fn modecount(args: &ModecountArgs) -> Result<()> {
    prepare_dir(&args.output_dir)?;
    let sim = SimulationSpec::new(args.n, args.seed);
    let transform = args.model.transform();
    let kernel = args.model.kernel();
    if let Some(grid) = args.sweep {
        let hs = grid.values()?;
        let report = sweep_experiment(&sim, transform, kernel, &hs, args.reps)?;
        write_json(&args.output_dir, "sweep.json", &report)?;
        let mut t = Table::create(
            &args.output_dir,
            "sweep.csv",
            &["h".into(), "replicate".into(), "mode_count".into()],
        )?;
        for r in &report.rows {
            let mut row: Vec<String> = floats(&[r.h]).collect();
            row.push(r.replicate.to_string());
            row.push(r.mode_count.to_string());
            t.row(row)?;
        }
        t.finish()?;
        for (h, f) in report.bandwidths.iter().zip(&report.two_mode_frequency) {
            println!("h = {h:.4}: two-mode frequency {f:.3}");
        }
        return Ok(());
    }
    let cfg = PipelineConfig::new(transform, kernel, policy(&args.bandwidth)?);
    let report = modecount_experiment(&sim, &cfg, args.reps)?;
    write_json(&args.output_dir, "modecount.json", &report)?;
    println!(
        "n = {}, reps = {}: two-mode frequency {:.3}",
        report.n, report.reps, report.two_mode_frequency
    );
    Ok(())
}

pub fn rate(args: &RateArgs) -> Result<()> {
    prepare_dir(&args.output_dir)?;
    let base = SimulationSpec::new(0, args.seed);
    let cfg = PipelineConfig::new(args.model.transform(), args.model.kernel(), policy(&args.bandwidth)?);
    let rows = rate_experiment(&base, &cfg, &args.sizes, args.reps)?;
    let mut t = Table::create(
        &args.output_dir,
        "rate.csv",
        &["n".into(), "reps".into(), "median_hausdorff".into()],
    )?;
    for r in &rows {
        let mut row = vec![r.n.to_string(), r.reps.to_string()];
        row.extend(floats(&[r.median_hausdorff]));
        t.row(row)?;
        println!("n = {}: median d_H {:.4}", r.n, r.median_hausdorff);
    }
    t.finish()?;
    Ok(())
}
