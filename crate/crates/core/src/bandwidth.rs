//! Gradient-based leave-one-out bandwidth selection.
//!
//! The score for a bandwidth `h` is
//!
//! ```text
//! CV(h) = (1/n) Σⱼ ‖∇r†(Xⱼ) − ∇r*₍₋ⱼ₎(Xⱼ)‖²
//! ```
//!
//! where `∇r†` is a Nadaraya–Watson pilot gradient computed once on the full
//! sample and `∇r*₍₋ⱼ₎` is the regression gradient refitted without sample `j`,
//! including its own contribution to `f̂`. The pilot bandwidth is the
//! leave-one-out optimum for NW regression, inflated by `n^{1/((d+4)(d+6))}`.

use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::estimators::{DensityFloor, NwEstimator};
use crate::kernels::{Kernel, Profile};
use crate::sq_dist;
use crate::transforms::ResponseTransform;

/// Grid description `min:max:count[:log]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub min: f64,
    pub max: f64,
    pub count: usize,
    pub log: bool,
}

impl GridSpec {
    /// 20 log-spaced values over `[0.1·σ̂, diam/2]`, `σ̂` being the mean
    /// per-coordinate standard deviation of the inputs. Larger bandwidths
    /// flatten the gradient towards zero, and the cross-validation score of
    /// that trivial fit can undercut the interior minimum.
    pub fn default_for(data: &Dataset) -> Self {
        let sd = data.mean_coordinate_sd();
        let diam = data.diameter();
        let min = if sd > 0.0 { 0.1 * sd } else { 0.1 };
        let max = if diam / 2.0 > min { diam / 2.0 } else { 10.0 * min };
        Self {
            min,
            max,
            count: 20,
            log: true,
        }
    }

    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.min > 0.0) || !(self.max >= self.min) || !self.max.is_finite() || self.count == 0 {
            return Err(Error::Config(format!("invalid bandwidth grid {self:?}")));
        }
        if self.count == 1 {
            return Ok(vec![self.min]);
        }
        let steps = (self.count - 1) as f64;
        let vals: Vec<f64> = (0..self.count)
            .map(|i| {
                let f = i as f64 / steps;
                if self.log {
                    (self.min.ln() + f * (self.max.ln() - self.min.ln())).exp()
                } else {
                    self.min + f * (self.max - self.min)
                }
            })
            .collect();
        if vals.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("bandwidth grid must be strictly increasing".into()));
        }
        Ok(vals)
    }
}

impl FromStr for GridSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::Config(format!("grid '{s}' is not min:max:count[:log]"));
        if parts.len() < 3 || parts.len() > 4 {
            return Err(bad());
        }
        let min: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let max: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let log = match parts.get(3).map(|p| p.trim()) {
            None | Some("lin") | Some("linear") => false,
            Some("log") => true,
            Some(_) => return Err(bad()),
        };
        let spec = Self { min, max, count, log };
        spec.values()?;
        Ok(spec)
    }
}

/// Factor `n^{1/((d+4)(d+6))}` taking a regression-optimal bandwidth to a
/// gradient-estimation bandwidth.
pub fn pilot_scaling_factor(n: usize, d: usize) -> f64 {
    (n as f64).powf(1.0 / (((d + 4) * (d + 6)) as f64))
}

/// Leave-one-out predictive squared error of NW regression at bandwidth `h`;
/// `+∞` when some sample has no neighbours.
pub fn nw_loo_score(x: &[f64], y: &[f64], d: usize, kernel: Kernel, h: f64) -> Result<f64> {
    let n = y.len();
    let nw = NwEstimator::new(x, y, d, h, kernel)?;
    let mut total = 0.0;
    for j in 0..n {
        let xj = &x[j * d..(j + 1) * d];
        match nw.leave_out(j).regress(xj) {
            Ok(pred) => total += (y[j] - pred).powi(2),
            Err(Error::NoActiveWeights) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        }
    }
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSelection {
    pub grid: Vec<f64>,
    pub scores: Vec<f64>,
    /// NW regression bandwidth before scaling.
    pub nw_bandwidth: f64,
    pub scaling_factor: f64,
    /// Scaled bandwidth used for the pilot gradient.
    pub bandwidth: f64,
}

fn argmin_smallest(values: &[f64], scores: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, s) in scores.iter().enumerate() {
        if !s.is_finite() {
            continue;
        }
        match best {
            Some(b) if scores[b] <= *s => {}
            _ => best = Some(i),
        }
    }
    debug_assert!(best.is_none_or(|b| b < values.len()));
    best
}

/// Pick the NW regression bandwidth by leave-one-out error over `grid`, then
/// scale it for gradient estimation.
pub fn pilot_nw_bandwidth(
    data: &Dataset,
    transform: &ResponseTransform,
    kernel: Kernel,
    grid: &[f64],
) -> Result<PilotSelection> {
    if grid.is_empty() {
        return Err(Error::Config("pilot grid is empty".into()));
    }
    let y = transform.apply(data.y())?.y_tilde;
    let scores: Vec<f64> = grid
        .par_iter()
        .map(|&h| nw_loo_score(data.x(), &y, data.d(), kernel, h))
        .collect::<Result<_>>()?;
    let best = argmin_smallest(grid, &scores).ok_or(Error::AllScoresInfinite)?;
    let factor = pilot_scaling_factor(data.n(), data.d());
    Ok(PilotSelection {
        grid: grid.to_vec(),
        scores,
        nw_bandwidth: grid[best],
        scaling_factor: factor,
        bandwidth: grid[best] * factor,
    })
}

/// Score at one bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub h: f64,
    pub score: f64,
    /// Left-out points with no active neighbours (zero gradient used).
    pub isolated: usize,
}

/// Shared state for evaluating `CV(h)` over many bandwidths on one sample.
pub struct CvContext {
    x: Vec<f64>,
    d: usize,
    n: usize,
    y: Vec<f64>,
    kernel: Kernel,
    floor: DensityFloor,
    /// Pairwise squared distances, row-major `n × n`.
    sqdist: Vec<f64>,
    pilot: Vec<f64>,
    pilot_h: f64,
}

impl CvContext {
    pub fn new(
        data: &Dataset,
        transform: &ResponseTransform,
        kernel: Kernel,
        pilot_h: f64,
        floor: DensityFloor,
    ) -> Result<Self> {
        let n = data.n();
        if n < 3 {
            return Err(Error::TooFewSamples { needed: 3, got: n });
        }
        let y = transform.apply(data.y())?.y_tilde;
        let d = data.d();
        let x = data.x().to_vec();
        let nw = NwEstimator::new(&x, &y, d, pilot_h, kernel)?;
        let mut pilot = Vec::with_capacity(n * d);
        for j in 0..n {
            pilot.extend(nw.grad(&x[j * d..(j + 1) * d])?);
        }
        let mut sqdist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let v = sq_dist(&x[i * d..(i + 1) * d], &x[j * d..(j + 1) * d]);
                sqdist[i * n + j] = v;
                sqdist[j * n + i] = v;
            }
        }
        Ok(Self {
            x,
            d,
            n,
            y,
            kernel,
            floor,
            sqdist,
            pilot,
            pilot_h,
        })
    }

    pub fn pilot_bandwidth(&self) -> f64 {
        self.pilot_h
    }

    /// Pilot gradient at sample `j`.
    pub fn pilot_gradient(&self, j: usize) -> &[f64] {
        &self.pilot[j * self.d..(j + 1) * self.d]
    }

    pub fn score(&self, h: f64) -> Result<CvScore> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(h));
        }
        let (n, d) = (self.n, self.d);
        let inv_h2 = 1.0 / (h * h);
        let kernel = self.kernel;
        let c_k = kernel.normalization(d, Profile::K)?;
        let hd = h.powi(d as i32);

        // kernel matrix and full-sample row sums (self term included)
        let mut kmat = vec![0.0; n * n];
        let mut gmat = vec![0.0; n * n];
        let mut rowsum = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let t = self.sqdist[i * n + j] * inv_h2;
                let (kv, gv) = kernel.k_and_g(t);
                kmat[i * n + j] = kv;
                gmat[i * n + j] = gv;
                rowsum[i] += kv;
            }
        }
        let full_fhat: Vec<f64> = rowsum.iter().map(|s| c_k * s / (n as f64 * hd)).collect();
        let floor = match self.floor {
            DensityFloor::Relative(frac) => frac * full_fhat.iter().copied().fold(0.0, f64::max),
            DensityFloor::Absolute(v) => v,
        };

        let loo_scale = c_k / ((n - 1) as f64 * hd);
        let grad_scale = 2.0 * c_k / ((n - 1) as f64 * hd * h * h);
        let mut total = 0.0;
        let mut isolated = 0;
        let mut grad = vec![0.0; d];
        for j in 0..n {
            let xj = &self.x[j * d..(j + 1) * d];
            grad.iter_mut().for_each(|v| *v = 0.0);
            let mut active = false;
            for i in 0..n {
                if i == j {
                    continue;
                }
                let gv = gmat[i * n + j];
                if gv == 0.0 {
                    continue;
                }
                active = true;
                let fhat = (loo_scale * (rowsum[i] - kmat[i * n + j])).max(floor);
                let w = self.y[i] * gv / fhat;
                let xi = &self.x[i * d..(i + 1) * d];
                for c in 0..d {
                    grad[c] += w * (xi[c] - xj[c]);
                }
            }
            if !active {
                isolated += 1;
            }
            let pilot = self.pilot_gradient(j);
            total += grad
                .iter()
                .zip(pilot)
                .map(|(g, p)| (p - grad_scale * g).powi(2))
                .sum::<f64>();
        }
        if isolated > 0 {
            log::debug!("h={h}: {isolated} left-out points had no active neighbours");
        }
        let score = if isolated == n {
            f64::INFINITY
        } else {
            total / n as f64
        };
        Ok(CvScore { h, score, isolated })
    }
}

/// `CV(h)` for a single bandwidth with pilot gradients at `pilot_h`.
pub fn cv_gradient(
    data: &Dataset,
    transform: &ResponseTransform,
    kernel: Kernel,
    h: f64,
    pilot_h: f64,
) -> Result<f64> {
    let ctx = CvContext::new(data, transform, kernel, pilot_h, DensityFloor::default())?;
    Ok(ctx.score(h)?.score)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandwidthGrid {
    pub values: Vec<f64>,
    pub cv_scores: Vec<f64>,
    pub isolated: Vec<usize>,
    pub selected: f64,
    pub pilot_bandwidth: f64,
    pub pilot: PilotSelection,
}

/// Evaluate `CV` over `grid` and pick the minimiser, breaking ties toward the
/// smaller bandwidth.
pub fn select_bandwidth(
    data: &Dataset,
    transform: &ResponseTransform,
    kernel: Kernel,
    grid: &[f64],
    pilot_grid: &[f64],
) -> Result<BandwidthGrid> {
    if grid.is_empty() {
        return Err(Error::Config("bandwidth grid is empty".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) || grid[0] <= 0.0 {
        return Err(Error::Config("bandwidth grid must be positive and strictly increasing".into()));
    }
    let pilot = pilot_nw_bandwidth(data, transform, kernel, pilot_grid)?;
    let ctx = CvContext::new(data, transform, kernel, pilot.bandwidth, DensityFloor::default())?;
    let scores: Vec<CvScore> = grid
        .par_iter()
        .map(|&h| ctx.score(h))
        .collect::<Result<_>>()?;
    let cv_scores: Vec<f64> = scores.iter().map(|s| s.score).collect();
    let best = argmin_smallest(grid, &cv_scores).ok_or(Error::AllScoresInfinite)?;
    Ok(BandwidthGrid {
        values: grid.to_vec(),
        cv_scores,
        isolated: scores.iter().map(|s| s.isolated).collect(),
        selected: grid[best],
        pilot_bandwidth: pilot.bandwidth,
        pilot,
    })
}
