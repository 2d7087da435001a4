//! Subspace-constrained regression mean shift for ridge extraction.
//!
//! Each step projects the mean shift onto the span of the Hessian eigenvectors
//! belonging to the `d − s + 1` smallest eigenvalues of `∇²r*`. The Gaussian
//! kernel is the better choice here: the biweight's `k''` jumps at the support
//! boundary, which makes Hessian estimates noisy.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::FittedModel;
use crate::modeseek::StallReason;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RidgeConfig {
    /// Subspace index, `2 <= s <= d`.
    pub s: usize,
    pub step_tol: f64,
    pub max_iter: usize,
}

impl RidgeConfig {
    pub fn new(s: usize, h: f64) -> Self {
        Self {
            s,
            step_tol: 1e-6 * h,
            max_iter: 2000,
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        if self.s < 2 || self.s > d {
            return Err(Error::Config(format!(
                "subspace index s={} must satisfy 2 <= s <= d={}",
                self.s, d
            )));
        }
        if !(self.step_tol > 0.0) || self.max_iter == 0 {
            return Err(Error::Config(format!("invalid ridge config {self:?}")));
        }
        Ok(())
    }
}

/// Hessian eigen-decomposition at one point.
#[derive(Debug, Clone)]
pub struct Eigenframe {
    /// Eigenvalues in descending order.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub hessian: DMatrix<f64>,
}

impl Eigenframe {
    pub fn at(model: &FittedModel, z: &[f64]) -> Self {
        let hessian = model.rstar_hessian(z);
        let eig = SymmetricEigen::new(hessian.clone());
        let d = hessian.nrows();
        let mut order: Vec<usize> = (0..d).collect();
        // descending eigenvalue; ties by lexicographic eigenvector so the
        // ordering does not depend on the solver's internal permutation
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .total_cmp(&eig.eigenvalues[a])
                .then_with(|| {
                    let va = eig.eigenvectors.column(a);
                    let vb = eig.eigenvectors.column(b);
                    va.iter()
                        .zip(vb.iter())
                        .map(|(x, y)| x.total_cmp(y))
                        .find(|o| o.is_ne())
                        .unwrap_or(std::cmp::Ordering::Equal)
                })
        });
        let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut eigenvectors = DMatrix::zeros(d, d);
        for (col, &i) in order.iter().enumerate() {
            eigenvectors.set_column(col, &eig.eigenvectors.column(i));
        }
        Self {
            eigenvalues,
            eigenvectors,
            hessian,
        }
    }

    /// Columns `v_s, …, v_d` (1-based), i.e. the `d − s + 1` trailing ones.
    pub fn trailing(&self, s: usize) -> DMatrix<f64> {
        let d = self.eigenvalues.len();
        self.eigenvectors.columns(s - 1, d - s + 1).into_owned()
    }

    /// Whether `λ_{s-1}` and `λ_s` are too close to separate the subspace.
    pub fn degenerate_gap(&self, s: usize) -> bool {
        let norm = self.hessian.norm();
        (self.eigenvalues[s - 2] - self.eigenvalues[s - 1]).abs() < 1e-12 * norm
    }
}

#[derive(Debug, Clone)]
pub struct ScmsStep {
    pub next: Vec<f64>,
    pub projected_shift: Vec<f64>,
    pub frame: Eigenframe,
    pub degenerate_gap: bool,
}

/// One projected step `z + V Vᵀ m*(z)`.
pub fn scms_step(model: &FittedModel, z: &[f64], s: usize) -> Result<ScmsStep> {
    let d = model.d();
    if s < 2 || s > d {
        return Err(Error::Config(format!("subspace index s={s} must satisfy 2 <= s <= d={d}")));
    }
    let shift = DVector::from_vec(model.mean_shift(z)?);
    let frame = Eigenframe::at(model, z);
    let v = frame.trailing(s);
    let projected = &v * (v.transpose() * &shift);
    let degenerate_gap = frame.degenerate_gap(s);
    if degenerate_gap {
        log::debug!("near-degenerate eigengap at {z:?}");
    }
    let next = z.iter().zip(projected.iter()).map(|(a, b)| a + b).collect();
    Ok(ScmsStep {
        next,
        projected_shift: projected.iter().copied().collect(),
        frame,
        degenerate_gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    pub point: Vec<f64>,
    pub projected_step_norm: f64,
    /// Hessian eigenvalues at `point`, descending.
    pub eigenvalues: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub stall_reason: StallReason,
}

/// Iterate projected steps until the projected shift is shorter than
/// `step_tol`.
pub fn scms_iterate(model: &FittedModel, z0: &[f64], config: &RidgeConfig) -> Result<RidgePoint> {
    config.validate(model.d())?;
    if z0.len() != model.d() || z0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Shape("starting point must be finite with model dimension".into()));
    }
    let mut z = z0.to_vec();
    let mut iterations = 0;
    loop {
        let step = match scms_step(model, &z, config.s) {
            Ok(step) => step,
            Err(Error::NoActiveWeights) => {
                let frame = Eigenframe::at(model, &z);
                return Ok(RidgePoint {
                    point: z,
                    projected_step_norm: f64::NAN,
                    eigenvalues: frame.eigenvalues,
                    iterations,
                    converged: false,
                    stall_reason: StallReason::NoActiveWeights,
                });
            }
            Err(e) => return Err(e),
        };
        let norm = step.projected_shift.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < config.step_tol || iterations >= config.max_iter {
            let converged = norm < config.step_tol;
            return Ok(RidgePoint {
                point: z,
                projected_step_norm: norm,
                eigenvalues: step.frame.eigenvalues,
                iterations,
                converged,
                stall_reason: if converged {
                    StallReason::None
                } else {
                    StallReason::MaxIter
                },
            });
        }
        z = step.next;
        iterations += 1;
    }
}
