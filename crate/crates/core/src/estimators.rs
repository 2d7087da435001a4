//! Kernel estimators built on the Mack–Müller regression form.
//!
//! With transformed responses `Ỹᵢ > 0` and the KDE `f̂`, the fitted regression
//! surface is
//!
//! ```text
//! r*(x) = c_{k,d}/(n hᵈ) Σ Ỹᵢ k(‖x−Xᵢ‖²/h²) / f̂(Xᵢ)
//! ```
//!
//! Derivatives only touch the numerator, which gives the regression mean shift
//! `m*(x) = Σ wᵢỸᵢXᵢ / Σ wᵢỸᵢ − x` with `wᵢ = g(‖x−Xᵢ‖²/h²)/f̂(Xᵢ)`, and the
//! identity `∇r*(x) = 2c_{k,d}/(h² c_{g,d}) · r*_g(x) · m*(x)`.

use nalgebra::DMatrix;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::kernels::{Kernel, Profile};
use crate::sq_dist;
use crate::transforms::ResponseTransform;

/// Lower bound applied to `f̂(Xᵢ)` before it is used as a divisor.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum DensityFloor {
    /// Fraction of the largest `f̂(Xᵢ)` on the sample.
    Relative(f64),
    Absolute(f64),
}

impl Default for DensityFloor {
    fn default() -> Self {
        DensityFloor::Relative(1e-8)
    }
}

impl DensityFloor {
    fn resolve(self, fhat: &[f64]) -> Result<f64> {
        let v = match self {
            DensityFloor::Relative(frac) => {
                frac * fhat.iter().copied().fold(0.0f64, f64::max)
            }
            DensityFloor::Absolute(v) => v,
        };
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Config(format!("density floor must be positive, got {v}")))
        }
    }
}

/// Immutable fitted state shared by every estimator evaluation.
#[derive(Debug, Clone)]
pub struct FittedModel {
    x: Vec<f64>,
    d: usize,
    n: usize,
    y_tilde: Vec<f64>,
    fhat: Vec<f64>,
    /// Ỹᵢ / f̂(Xᵢ)
    coef: Vec<f64>,
    /// 1 / f̂(Xᵢ)
    inv_fhat: Vec<f64>,
    h: f64,
    kernel: Kernel,
    density_floor: f64,
    shift_applied: f64,
    c_k: f64,
    c_g: f64,
}

impl FittedModel {
    /// Transform the responses, compute `f̂` at every sample (self term
    /// included) and freeze the result.
    pub fn fit(
        data: &Dataset,
        transform: &ResponseTransform,
        kernel: Kernel,
        h: f64,
        floor: DensityFloor,
    ) -> Result<Self> {
        if data.n() < 2 {
            return Err(Error::TooFewSamples {
                needed: 2,
                got: data.n(),
            });
        }
        let tr = transform.apply(data.y())?;
        let mut model =
            Self::from_transformed(data.x().to_vec(), data.d(), tr.y_tilde, kernel, h, floor)?;
        model.shift_applied = tr.shift_applied;
        Ok(model)
    }

    /// Fit from responses that are already positive.
    pub fn from_transformed(
        x: Vec<f64>,
        d: usize,
        y_tilde: Vec<f64>,
        kernel: Kernel,
        h: f64,
        floor: DensityFloor,
    ) -> Result<Self> {
        let n = y_tilde.len();
        if n < 2 {
            return Err(Error::TooFewSamples { needed: 2, got: n });
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(h));
        }
        if d == 0 || x.len() != n * d {
            return Err(Error::Shape(format!(
                "{} coordinates for {} points in dimension {}",
                x.len(),
                n,
                d
            )));
        }
        for (row, pt) in x.chunks_exact(d).enumerate() {
            if pt.iter().any(|v| !v.is_finite()) || !y_tilde[row].is_finite() {
                return Err(Error::NonFinite { row });
            }
            if y_tilde[row] <= 0.0 {
                return Err(Error::Config(format!(
                    "transformed response at row {row} is not positive"
                )));
            }
        }
        let c_k = kernel.normalization(d, Profile::K)?;
        let c_g = kernel.normalization(d, Profile::G)?;
        let raw = raw_kde_at_samples(&x, d, kernel, h, c_k);
        Self::from_parts(x, d, y_tilde, raw, kernel, h, floor, c_k, c_g)
    }

    #[allow(clippy::too_many_arguments)]
    fn from_parts(
        x: Vec<f64>,
        d: usize,
        y_tilde: Vec<f64>,
        raw_fhat: Vec<f64>,
        kernel: Kernel,
        h: f64,
        floor: DensityFloor,
        c_k: f64,
        c_g: f64,
    ) -> Result<Self> {
        let n = y_tilde.len();
        let density_floor = floor.resolve(&raw_fhat)?;
        let fhat: Vec<f64> = raw_fhat.iter().map(|&f| f.max(density_floor)).collect();
        let inv_fhat: Vec<f64> = fhat.iter().map(|&f| 1.0 / f).collect();
        let coef = y_tilde.iter().zip(&fhat).map(|(y, f)| y / f).collect();
        Ok(Self {
            x,
            d,
            n,
            y_tilde,
            fhat,
            coef,
            inv_fhat,
            h,
            kernel,
            density_floor,
            shift_applied: 0.0,
            c_k,
            c_g,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn d(&self) -> usize {
        self.d
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn kernel(&self) -> Kernel {
        self.kernel
    }
    pub fn x(&self) -> &[f64] {
        &self.x
    }
    pub fn point(&self, i: usize) -> &[f64] {
        &self.x[i * self.d..(i + 1) * self.d]
    }
    pub fn y_tilde(&self) -> &[f64] {
        &self.y_tilde
    }
    /// Floored `f̂(Xᵢ)`.
    pub fn fhat_at_samples(&self) -> &[f64] {
        &self.fhat
    }
    pub fn density_floor(&self) -> f64 {
        self.density_floor
    }
    pub fn shift_applied(&self) -> f64 {
        self.shift_applied
    }
    pub fn c_k(&self) -> f64 {
        self.c_k
    }
    pub fn c_g(&self) -> f64 {
        self.c_g
    }

    /// Same samples and `f̂`, responses multiplied by `lambda`.
    pub fn with_scaled_responses(&self, lambda: f64) -> Self {
        let mut out = self.clone();
        for (y, c) in out.y_tilde.iter_mut().zip(out.coef.iter_mut()) {
            *y *= lambda;
            *c *= lambda;
        }
        out
    }

    /// Squared scaled distances `‖x−Xᵢ‖²/h²` for samples inside the kernel
    /// support, paired with their index.
    #[inline]
    fn active<'a>(&'a self, x: &'a [f64]) -> impl Iterator<Item = (usize, &'a [f64], f64)> + 'a {
        let inv_h2 = 1.0 / (self.h * self.h);
        let compact = self.kernel.support_radius().is_finite();
        self.x
            .chunks_exact(self.d)
            .enumerate()
            .filter_map(move |(i, xi)| {
                let t = sq_dist(x, xi) * inv_h2;
                if compact && t >= 1.0 {
                    None
                } else {
                    Some((i, xi, t))
                }
            })
    }

    fn scale(&self, c: f64, extra_h_power: i32) -> f64 {
        c / (self.n as f64 * self.h.powi(self.d as i32 + extra_h_power))
    }

    fn check_dim(&self, x: &[f64]) {
        assert_eq!(x.len(), self.d, "evaluation point has wrong dimension");
    }

    fn weighted_k_sum(&self, x: &[f64], weights: &[f64]) -> f64 {
        self.check_dim(x);
        let s: f64 = self
            .active(x)
            .map(|(i, _, t)| weights[i] * self.kernel.k(t))
            .sum();
        self.scale(self.c_k, 0) * s
    }

    /// Kernel density estimate `f̂(x)`.
    pub fn kde_at(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        let s: f64 = self.active(x).map(|(_, _, t)| self.kernel.k(t)).sum();
        self.scale(self.c_k, 0) * s
    }

    /// Transformed regression estimate `r*(x)`.
    pub fn rstar(&self, x: &[f64]) -> f64 {
        self.weighted_k_sum(x, &self.coef)
    }

    /// `r*` with profile `k` replaced by `g` (and `c_{k,d}` by `c_{g,d}`).
    pub fn rstar_g(&self, x: &[f64]) -> f64 {
        self.check_dim(x);
        let s: f64 = self
            .active(x)
            .map(|(i, _, t)| self.coef[i] * self.kernel.g(t))
            .sum();
        self.scale(self.c_g, 0) * s
    }

    /// Estimator of unity, `(nhᵈ)⁻¹ Σ K_h(x−Xᵢ)/f̂(Xᵢ)`.
    pub fn t_hat(&self, x: &[f64]) -> f64 {
        self.weighted_k_sum(x, &self.inv_fhat)
    }

    /// Analytic gradient of `r*`.
    pub fn rstar_grad(&self, x: &[f64]) -> Vec<f64> {
        self.check_dim(x);
        let mut grad = vec![0.0; self.d];
        for (i, xi, t) in self.active(x) {
            let w = self.coef[i] * self.kernel.g(t);
            for c in 0..self.d {
                grad[c] += w * (xi[c] - x[c]);
            }
        }
        let s = 2.0 * self.scale(self.c_k, 2);
        grad.iter_mut().for_each(|v| *v *= s);
        grad
    }

    /// Analytic Hessian of `r*`.
    pub fn rstar_hessian(&self, x: &[f64]) -> DMatrix<f64> {
        self.check_dim(x);
        let d = self.d;
        let two_over_h2 = 2.0 / (self.h * self.h);
        let mut hess = DMatrix::<f64>::zeros(d, d);
        let mut diff = vec![0.0; d];
        for (i, xi, t) in self.active(x) {
            let a = self.coef[i];
            let outer = a * two_over_h2 * self.kernel.d2k(t);
            let diag = a * self.kernel.dk(t);
            for c in 0..d {
                diff[c] = x[c] - xi[c];
            }
            for r in 0..d {
                for c in r..d {
                    hess[(r, c)] += outer * diff[r] * diff[c];
                }
                hess[(r, r)] += diag;
            }
        }
        let s = 2.0 * self.scale(self.c_k, 2);
        for r in 0..d {
            for c in r..d {
                let v = hess[(r, c)] * s;
                hess[(r, c)] = v;
                hess[(c, r)] = v;
            }
        }
        hess
    }

    /// Regression mean shift `m*(x)`.
    pub fn mean_shift(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x);
        let mut num = vec![0.0; self.d];
        let mut den = 0.0;
        for (i, xi, t) in self.active(x) {
            let w = self.coef[i] * self.kernel.g(t);
            den += w;
            for c in 0..self.d {
                num[c] += w * xi[c];
            }
        }
        if den <= 0.0 {
            return Err(Error::NoActiveWeights);
        }
        Ok(num.iter().zip(x).map(|(s, xc)| s / den - xc).collect())
    }

    /// One pass that yields `r*(x)`, `m*(x)` and the `g`-weight total.
    pub(crate) fn shift_eval(&self, x: &[f64]) -> ShiftEval {
        let mut num = vec![0.0; self.d];
        let mut den = 0.0;
        let mut ksum = 0.0;
        for (i, xi, t) in self.active(x) {
            let (kv, gv) = self.kernel.k_and_g(t);
            let a = self.coef[i];
            ksum += a * kv;
            let w = a * gv;
            den += w;
            for c in 0..self.d {
                num[c] += w * xi[c];
            }
        }
        let rstar = self.scale(self.c_k, 0) * ksum;
        let shift = if den > 0.0 {
            Some(num.iter().zip(x).map(|(s, xc)| s / den - xc).collect())
        } else {
            None
        };
        ShiftEval { rstar, shift }
    }

    /// Factor `2c_{k,d}/(h² c_{g,d})` linking `∇r*` to `r*_g · m*`.
    pub fn gradient_identity_factor(&self) -> f64 {
        2.0 * self.c_k / (self.h * self.h * self.c_g)
    }
}

pub(crate) struct ShiftEval {
    pub rstar: f64,
    pub shift: Option<Vec<f64>>,
}

/// Unfloored `f̂(Xᵢ)` including the self term.
fn raw_kde_at_samples(x: &[f64], d: usize, kernel: Kernel, h: f64, c_k: f64) -> Vec<f64> {
    let n = x.len() / d;
    let inv_h2 = 1.0 / (h * h);
    let scale = c_k / (n as f64 * h.powi(d as i32));
    let mut sums = vec![0.0; n];
    let self_term = kernel.k(0.0);
    for i in 0..n {
        sums[i] += self_term;
        let xi = &x[i * d..(i + 1) * d];
        for j in (i + 1)..n {
            let kv = kernel.k(sq_dist(xi, &x[j * d..(j + 1) * d]) * inv_h2);
            sums[i] += kv;
            sums[j] += kv;
        }
    }
    sums.iter().map(|s| s * scale).collect()
}

/// Nadaraya–Watson estimator on `(Xᵢ, Ỹᵢ)`, used as the pilot gradient for
/// bandwidth selection. Optionally skips one sample (leave-one-out).
#[derive(Debug, Clone, Copy)]
pub struct NwEstimator<'a> {
    x: &'a [f64],
    y: &'a [f64],
    d: usize,
    h: f64,
    kernel: Kernel,
    skip: Option<usize>,
}

impl<'a> NwEstimator<'a> {
    pub fn new(x: &'a [f64], y: &'a [f64], d: usize, h: f64, kernel: Kernel) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidBandwidth(h));
        }
        if d == 0 || x.len() != y.len() * d {
            return Err(Error::Shape("NW inputs do not match".into()));
        }
        Ok(Self {
            x,
            y,
            d,
            h,
            kernel,
            skip: None,
        })
    }

    pub fn leave_out(mut self, j: usize) -> Self {
        self.skip = Some(j);
        self
    }

    fn terms<'b>(&'b self, x: &'b [f64]) -> impl Iterator<Item = (usize, &'b [f64], f64)> + 'b {
        let inv_h2 = 1.0 / (self.h * self.h);
        self.x
            .chunks_exact(self.d)
            .enumerate()
            .filter(move |(i, _)| Some(*i) != self.skip)
            .map(move |(i, xi)| (i, xi, sq_dist(x, xi) * inv_h2))
    }

    pub fn regress(&self, x: &[f64]) -> Result<f64> {
        let (mut num, mut den) = (0.0, 0.0);
        for (i, _, t) in self.terms(x) {
            let k = self.kernel.k(t);
            num += self.y[i] * k;
            den += k;
        }
        if den <= 0.0 {
            return Err(Error::NoActiveWeights);
        }
        Ok(num / den)
    }

    /// Quotient-rule gradient
    /// `(2/h²)[Σ wᵢ* Xᵢ − Σ wᵢ* x] / (Σ wᵢᵏ)²` with
    /// `wᵢ* = Ỹᵢ wᵢᵍ Σ wᵏ − wᵢᵍ Σ Ỹ wᵏ`.
    pub fn grad(&self, x: &[f64]) -> Result<Vec<f64>> {
        let (mut sk, mut syk) = (0.0, 0.0);
        for (i, _, t) in self.terms(x) {
            let k = self.kernel.k(t);
            sk += k;
            syk += self.y[i] * k;
        }
        if sk <= 0.0 {
            return Err(Error::NoActiveWeights);
        }
        let mut acc = vec![0.0; self.d];
        for (i, xi, t) in self.terms(x) {
            let g = self.kernel.g(t);
            let w_star = self.y[i] * g * sk - g * syk;
            for c in 0..self.d {
                acc[c] += w_star * (xi[c] - x[c]);
            }
        }
        let s = 2.0 / (self.h * self.h * sk * sk);
        Ok(acc.into_iter().map(|v| v * s).collect())
    }
}
