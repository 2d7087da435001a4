//! Bimodal benchmark model.
//!
//! `Y = φ(X; μ₁, Σ₁) + φ(X; μ₂, Σ₂) + ε` with `X ~ N(μ₃, Σ₃)` truncated to
//! `[−2, 2]²` and `ε ~ N(0, σ²)`. Sampling uses ChaCha20 seeded from a `u64`,
//! so a seed pins the dataset bit for bit.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub n: usize,
    pub seed: u64,
    pub mu1: [f64; 2],
    pub mu2: [f64; 2],
    pub mu3: [f64; 2],
    /// Diagonal variances.
    pub sigma1: [f64; 2],
    pub sigma2: [f64; 2],
    pub sigma3: [f64; 2],
    pub noise_var: f64,
    /// Inputs are kept inside `[-box_half_width, box_half_width]²`.
    pub box_half_width: f64,
}

impl SimulationSpec {
    pub fn new(n: usize, seed: u64) -> Self {
        Self {
            n,
            seed,
            mu1: [1.0, 1.0],
            mu2: [-1.0, -1.0],
            mu3: [0.0, 0.0],
            sigma1: [0.5, 0.5],
            sigma2: [0.3, 0.9],
            sigma3: [1.5, 1.5],
            noise_var: 0.01,
            box_half_width: 2.0,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let variances = self
            .sigma1
            .iter()
            .chain(&self.sigma2)
            .chain(&self.sigma3)
            .chain(std::iter::once(&self.noise_var));
        for v in variances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("variance {v} must be positive")));
            }
        }
        if !(self.box_half_width > 0.0) {
            return Err(Error::Config("truncation box must have positive width".into()));
        }
        if self.n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: self.n });
        }
        Ok(())
    }

    /// Noiseless regression function `r(x) = φ₁(x) + φ₂(x)`.
    pub fn regression(&self, x: &[f64]) -> f64 {
        diag_normal_pdf(x, &self.mu1, &self.sigma1) + diag_normal_pdf(x, &self.mu2, &self.sigma2)
    }

    pub fn in_box(&self, x: &[f64]) -> bool {
        x.iter().all(|v| v.abs() <= self.box_half_width)
    }

    /// Strict local maxima of `r` on a square grid over the truncation box
    /// (8-neighbourhood, interior nodes only).
    pub fn true_modes(&self, resolution: f64) -> Vec<Vec<f64>> {
        let w = self.box_half_width;
        let m = (2.0 * w / resolution).round() as usize + 1;
        let coord = |i: usize| -w + i as f64 * resolution;
        let mut vals = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                vals[i * m + j] = self.regression(&[coord(i), coord(j)]);
            }
        }
        let mut modes = Vec::new();
        for i in 1..m - 1 {
            for j in 1..m - 1 {
                let v = vals[i * m + j];
                let is_max = (-1i64..=1).all(|di| {
                    (-1i64..=1).all(|dj| {
                        (di == 0 && dj == 0)
                            || v > vals[(i as i64 + di) as usize * m + (j as i64 + dj) as usize]
                    })
                });
                if is_max {
                    modes.push(vec![coord(i), coord(j)]);
                }
            }
        }
        modes
    }
}

pub fn diag_normal_pdf(x: &[f64], mu: &[f64; 2], var: &[f64; 2]) -> f64 {
    let q: f64 = x
        .iter()
        .zip(mu)
        .zip(var)
        .map(|((xi, m), v)| (xi - m).powi(2) / v)
        .sum();
    (-0.5 * q).exp() / (2.0 * PI * (var[0] * var[1]).sqrt())
}

/// Draw a dataset from the bimodal model.
pub fn simulate_bimodal(spec: &SimulationSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let sd3 = [spec.sigma3[0].sqrt(), spec.sigma3[1].sqrt()];
    let noise_sd = spec.noise_var.sqrt();
    let mut x = Vec::with_capacity(2 * spec.n);
    let mut y = Vec::with_capacity(spec.n);
    while y.len() < spec.n {
        let a: f64 = rng.sample(StandardNormal);
        let b: f64 = rng.sample(StandardNormal);
        let p = [spec.mu3[0] + sd3[0] * a, spec.mu3[1] + sd3[1] * b];
        if !spec.in_box(&p) {
            continue;
        }
        let eps: f64 = rng.sample(StandardNormal);
        y.push(spec.regression(&p) + noise_sd * eps);
        x.extend(p);
    }
    Dataset::new(x, y, 2)
}
