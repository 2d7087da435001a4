//! Regression mean-shift iteration and basin partitioning.
//!
//! Starting from `z₀`, the iteration `z_{j+1} = z_j + m*(z_j)` climbs `r*`
//! monotonically for any convex non-increasing profile. Every step is audited:
//! a drop of `r*` beyond rounding slack aborts the run with
//! [`Error::AscentViolation`].

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::FittedModel;
use crate::sq_dist;

/// Relative slack allowed when auditing `r*(z_{j+1}) >= r*(z_j)`.
pub const ASCENT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationConfig {
    pub step_tol: f64,
    pub max_iter: usize,
    pub merge_radius: f64,
}

impl IterationConfig {
    /// `step_tol = 1e-6·h`, `max_iter = 2000`, `merge_radius = h/4`.
    pub fn for_bandwidth(h: f64) -> Self {
        Self {
            step_tol: 1e-6 * h,
            max_iter: 2000,
            merge_radius: h / 4.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step_tol > 0.0) || self.max_iter == 0 || !(self.merge_radius > 0.0) {
            return Err(Error::Config(format!("invalid iteration config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StallReason {
    None,
    NoActiveWeights,
    MaxIter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeSeekResult {
    /// `z₀, z₁, …, z_J`.
    pub trajectory: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
    pub final_point: Vec<f64>,
    /// `r*(z_j)` for every point in the trajectory.
    pub rstar_values: Vec<f64>,
    pub stall_reason: StallReason,
}

/// One mean-shift step, `z + m*(z)`.
pub fn ms_step(model: &FittedModel, z: &[f64]) -> Result<Vec<f64>> {
    let shift = model.mean_shift(z)?;
    Ok(z.iter().zip(&shift).map(|(a, b)| a + b).collect())
}

/// Iterate from `z0` until consecutive points are closer than `step_tol`.
pub fn ms_iterate(model: &FittedModel, z0: &[f64], config: &IterationConfig) -> Result<ModeSeekResult> {
    iterate_inner(model, z0, config, true)
}

fn iterate_inner(
    model: &FittedModel,
    z0: &[f64],
    config: &IterationConfig,
    keep_trajectory: bool,
) -> Result<ModeSeekResult> {
    if z0.len() != model.d() || z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("starting point must be finite with model dimension".into()));
    }
    let tol2 = config.step_tol * config.step_tol;
    let mut z = z0.to_vec();
    let mut eval = model.shift_eval(&z);
    let mut trajectory = vec![z.clone()];
    let mut rstar_values = vec![eval.rstar];
    let mut iterations = 0;
    let mut converged = false;
    let mut stall = StallReason::None;

    loop {
        let Some(shift) = eval.shift.take() else {
            stall = StallReason::NoActiveWeights;
            break;
        };
        if iterations >= config.max_iter {
            stall = StallReason::MaxIter;
            break;
        }
        let step2: f64 = shift.iter().map(|s| s * s).sum();
        for (zc, s) in z.iter_mut().zip(&shift) {
            *zc += s;
        }
        iterations += 1;
        let before = *rstar_values.last().unwrap();
        eval = model.shift_eval(&z);
        if eval.rstar < before - ASCENT_SLACK * before.abs() {
            return Err(Error::AscentViolation {
                step: iterations,
                before,
                after: eval.rstar,
            });
        }
        if keep_trajectory {
            trajectory.push(z.clone());
            rstar_values.push(eval.rstar);
        } else {
            rstar_values[0] = eval.rstar;
        }
        if step2 < tol2 {
            converged = true;
            break;
        }
    }

    if !keep_trajectory {
        trajectory = vec![z.clone()];
    }
    Ok(ModeSeekResult {
        trajectory,
        converged,
        iterations,
        final_point: z,
        rstar_values,
        stall_reason: stall,
    })
}

/// Per-sample outcome kept in a [`Partition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleOutcome {
    pub final_point: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stall_reason: StallReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    /// Basin index per sample, `-1` for unassigned.
    pub labels: Vec<i64>,
    pub modes: Vec<Vec<f64>>,
    pub counts: Vec<usize>,
    pub results: Vec<SampleOutcome>,
}

impl Partition {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }
}

/// Run the iteration from every sample and group limits into basins.
pub fn partition_samples(model: &FittedModel, config: &IterationConfig) -> Result<Partition> {
    let (partition, _) = partition_impl(model, config, false)?;
    Ok(partition)
}

/// As [`partition_samples`], also returning every trajectory.
pub fn partition_with_trajectories(
    model: &FittedModel,
    config: &IterationConfig,
) -> Result<(Partition, Vec<ModeSeekResult>)> {
    partition_impl(model, config, true)
}

fn partition_impl(
    model: &FittedModel,
    config: &IterationConfig,
    keep: bool,
) -> Result<(Partition, Vec<ModeSeekResult>)> {
    config.validate()?;
    let runs: Vec<ModeSeekResult> = (0..model.n())
        .into_par_iter()
        .map(|i| iterate_inner(model, model.point(i), config, keep))
        .collect::<Result<_>>()?;

    let finals: Vec<Option<&[f64]>> = runs
        .iter()
        .map(|r| r.converged.then_some(r.final_point.as_slice()))
        .collect();
    let (labels, modes, counts) = merge_points(&finals, model.d(), config.merge_radius);

    let results = runs
        .iter()
        .map(|r| SampleOutcome {
            final_point: r.final_point.clone(),
            iterations: r.iterations,
            converged: r.converged,
            stall_reason: r.stall_reason,
        })
        .collect();
    let partition = Partition {
        labels,
        modes,
        counts,
        results,
    };
    Ok((partition, if keep { runs } else { Vec::new() }))
}

/// Single-linkage grouping of points at threshold `radius`. `None` entries are
/// labelled `-1`. Groups are numbered in lexicographic order of their smallest
/// member, each represented by the mean of its members; representatives that
/// land within `radius` of each other are merged again.
pub fn merge_points(
    points: &[Option<&[f64]>],
    d: usize,
    radius: f64,
) -> (Vec<i64>, Vec<Vec<f64>>, Vec<usize>) {
    let mut order: Vec<usize> = (0..points.len()).filter(|&i| points[i].is_some()).collect();
    order.sort_by(|&a, &b| lex_cmp(points[a].unwrap(), points[b].unwrap()).then(a.cmp(&b)));

    let r2 = radius * radius;
    let mut uf = UnionFind::new(points.len());
    // Points are sorted by first coordinate, so the scan can stop once the gap
    // in that coordinate alone exceeds the radius.
    for (pos, &i) in order.iter().enumerate() {
        let pi = points[i].unwrap();
        for &j in &order[pos + 1..] {
            let pj = points[j].unwrap();
            if pj[0] - pi[0] > radius {
                break;
            }
            if sq_dist(pi, pj) <= r2 {
                uf.union(i, j);
            }
        }
    }

    let mut group_of_root = std::collections::HashMap::new();
    let mut members: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        let root = uf.find(i);
        let g = *group_of_root.entry(root).or_insert_with(|| {
            members.push(Vec::new());
            members.len() - 1
        });
        members[g].push(i);
    }

    // Fold together groups whose representatives ended up within the radius.
    loop {
        let reps: Vec<Vec<f64>> = members.iter().map(|m| mean_of(points, m, d)).collect();
        let mut merged = None;
        'outer: for a in 0..reps.len() {
            for b in (a + 1)..reps.len() {
                if sq_dist(&reps[a], &reps[b]) <= r2 {
                    merged = Some((a, b));
                    break 'outer;
                }
            }
        }
        match merged {
            Some((a, b)) => {
                let moved = members.remove(b);
                members[a].extend(moved);
            }
            None => {
                let mut labels = vec![-1i64; points.len()];
                for (g, m) in members.iter().enumerate() {
                    for &i in m {
                        labels[i] = g as i64;
                    }
                }
                let counts = members.iter().map(Vec::len).collect();
                return (labels, reps, counts);
            }
        }
    }
}

fn mean_of(points: &[Option<&[f64]>], idx: &[usize], d: usize) -> Vec<f64> {
    let mut acc = vec![0.0; d];
    for &i in idx {
        for (a, v) in acc.iter_mut().zip(points[i].unwrap()) {
            *a += v;
        }
    }
    let k = idx.len() as f64;
    acc.iter_mut().for_each(|a| *a /= k);
    acc
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            other => return other,
        }
    }
    std::cmp::Ordering::Equal
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut i: usize) -> usize {
        while self.parent[i] != i {
            self.parent[i] = self.parent[self.parent[i]];
            i = self.parent[i];
        }
        i
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Hausdorff distance between two non-empty point sets.
pub fn hausdorff(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptySet);
    }
    let directed = |p: &[Vec<f64>], q: &[Vec<f64>]| {
        p.iter()
            .map(|x| {
                q.iter()
                    .map(|y| sq_dist(x, y))
                    .fold(f64::INFINITY, f64::min)
            })
            .fold(0.0f64, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::DensityFloor;
    use crate::kernels::Kernel;
    use approx::assert_abs_diff_eq;

    fn model(x: Vec<f64>, d: usize, y: Vec<f64>, kernel: Kernel, h: f64) -> FittedModel {
        FittedModel::from_transformed(x, d, y, kernel, h, DensityFloor::default()).unwrap()
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![vec![0.0, 0.0], vec![1.0, 1.0]];
        assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff(&[vec![0.0]], &[vec![3.0]]).unwrap(), 3.0);
        let a = vec![vec![0.0], vec![10.0]];
        let b = vec![vec![1.0]];
        assert_eq!(hausdorff(&a, &b).unwrap(), 9.0);
        assert_eq!(hausdorff(&b, &a).unwrap(), 9.0);
        assert!(matches!(hausdorff(&[], &b), Err(Error::EmptySet)));
    }

    #[test]
    fn symmetric_pair_is_a_fixed_point() {
        let m = model(vec![-0.5, 0.5], 1, vec![1.0, 1.0], Kernel::Gaussian, 1.0);
        let cfg = IterationConfig::for_bandwidth(1.0);
        assert_eq!(ms_step(&m, &[0.0]).unwrap(), vec![0.0]);
        let res = ms_iterate(&m, &[0.0], &cfg).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 1);
        assert!(res.trajectory.len() <= 2);
        assert_eq!(res.final_point, vec![0.0]);
    }

    #[test]
    fn single_active_sample_reached_in_one_step() {
        let m = model(vec![0.0, 0.0, 10.0, 0.0], 2, vec![1.0, 1.0], Kernel::Biweight, 1.0);
        assert_eq!(ms_step(&m, &[0.3, -0.2]).unwrap(), vec![0.0, 0.0]);
        let res = ms_iterate(&m, &[0.3, -0.2], &IterationConfig::for_bandwidth(1.0)).unwrap();
        assert!(res.converged);
        assert_eq!(res.final_point, vec![0.0, 0.0]);
    }

    #[test]
    fn stall_outside_support() {
        let m = model(vec![0.0, 0.1], 1, vec![1.0, 1.0], Kernel::Biweight, 0.5);
        let res = ms_iterate(&m, &[5.0], &IterationConfig::for_bandwidth(0.5)).unwrap();
        assert!(!res.converged);
        assert_eq!(res.stall_reason, StallReason::NoActiveWeights);
        assert!(ms_step(&m, &[5.0]).is_err());
    }

    #[test]
    fn max_iter_reported() {
        let m = model(vec![0.0, 1.0, 2.5], 1, vec![1.0, 2.0, 1.5], Kernel::Gaussian, 1.0);
        let cfg = IterationConfig {
            step_tol: 1e-300,
            max_iter: 3,
            merge_radius: 0.25,
        };
        let res = ms_iterate(&m, &[0.0], &cfg).unwrap();
        assert!(!res.converged);
        assert_eq!(res.stall_reason, StallReason::MaxIter);
        assert_eq!(res.iterations, 3);
        assert_eq!(res.trajectory.len(), 4);
        assert_eq!(res.rstar_values.len(), 4);
    }

    #[test]
    fn merge_groups_and_ignores_missing() {
        let pts = [vec![0.0, 0.0], vec![0.01, 0.0], vec![1.0, 1.0], vec![1.0, 1.02]];
        let mut refs: Vec<Option<&[f64]>> = pts.iter().map(|p| Some(p.as_slice())).collect();
        refs.push(None);
        let (labels, modes, counts) = merge_points(&refs, 2, 0.1);
        assert_eq!(labels, vec![0, 0, 1, 1, -1]);
        assert_eq!(counts, vec![2, 2]);
        assert_abs_diff_eq!(modes[0][0], 0.005, epsilon = 1e-15);
        assert_abs_diff_eq!(modes[1][1], 1.01, epsilon = 1e-15);
    }

    #[test]
    fn merge_chains_single_linkage() {
        let pts: Vec<Vec<f64>> = (0..5).map(|i| vec![i as f64 * 0.08]).collect();
        let refs: Vec<Option<&[f64]>> = pts.iter().map(|p| Some(p.as_slice())).collect();
        let (labels, modes, _) = merge_points(&refs, 1, 0.1);
        assert!(labels.iter().all(|&l| l == 0));
        assert_eq!(modes.len(), 1);
    }

    #[test]
    fn partition_bimodal_line() {
        // responses peak at -2 and +2 on a dense line; n is even so no sample
        // sits on the saddle at 0, which is itself a fixed point
        let n = 80;
        let x: Vec<f64> = (0..n).map(|i| -4.0 + 8.0 * i as f64 / (n - 1) as f64).collect();
        let y: Vec<f64> = x
            .iter()
            .map(|v| (-(v - 2.0f64).powi(2)).exp() + (-(v + 2.0f64).powi(2)).exp() + 0.1)
            .collect();
        let m = model(x, 1, y, Kernel::Gaussian, 0.5);
        let p = partition_samples(&m, &IterationConfig::for_bandwidth(0.5)).unwrap();
        assert_eq!(p.mode_count(), 2, "{:?} {:?}", p.modes, p.counts);
        assert!((p.modes[0][0] + 2.0).abs() < 0.2);
        assert!((p.modes[1][0] - 2.0).abs() < 0.2);
        assert_eq!(p.labels[0], 0);
        assert_eq!(p.labels[n - 1], 1);
        assert_eq!(p.counts.iter().sum::<usize>(), n);
    }
}
