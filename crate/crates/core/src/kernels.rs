//! Spherically symmetric kernel profiles.
//!
//! A kernel on ℝᵈ is written `K(x) = c_{k,d} k(‖x‖²)` where `k` is the profile.
//! The mean-shift weights use `g = -k'`. Two profiles are shipped:
//!
//! - `Gaussian`: `k(t) = exp(-t/2)`. Infinite support, `k' < 0` everywhere, so
//!   the monotone-ascent guarantee of the regression mean shift holds without
//!   qualification. Every sample contributes to every evaluation.
//! - `Biweight`: `k(t) = ½(1-t)²₊`. Its `g` is the Epanechnikov profile
//!   `(1-t)₊`. Compact support makes evaluations cheaper, but `k' = 0` outside
//!   the unit ball, so isolated points may stall.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which of the two profiles a normalization constant refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    K,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Gaussian,
    Biweight,
}

impl Kernel {
    pub fn name(self) -> &'static str {
        match self {
            Kernel::Gaussian => "gaussian",
            Kernel::Biweight => "biweight",
        }
    }

    /// Radius in ‖x‖ outside of which the profile vanishes.
    pub fn support_radius(self) -> f64 {
        match self {
            Kernel::Gaussian => f64::INFINITY,
            Kernel::Biweight => 1.0,
        }
    }

    /// Profile `k(t)` with a domain check on `t`.
    pub fn profile_k(self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.k(t))
    }

    /// Profile `g(t) = -k'(t)` with a domain check on `t`.
    pub fn profile_g(self, t: f64) -> Result<f64> {
        check_arg(t)?;
        Ok(self.g(t))
    }

    /// Unchecked `k(t)`; callers guarantee `t >= 0`.
    #[inline]
    pub fn k(self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            Kernel::Gaussian => (-0.5 * t).exp(),
            Kernel::Biweight => {
                if t < 1.0 {
                    let u = 1.0 - t;
                    0.5 * u * u
                } else {
                    0.0
                }
            }
        }
    }

    #[inline]
    pub fn dk(self, t: f64) -> f64 {
        -self.g(t)
    }

    #[inline]
    pub fn g(self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            Kernel::Gaussian => 0.5 * (-0.5 * t).exp(),
            Kernel::Biweight => {
                if t < 1.0 {
                    1.0 - t
                } else {
                    0.0
                }
            }
        }
    }

    /// Second derivative `k''(t)`. For the biweight the jump at `t = 1` is
    /// resolved to the right limit, `k''(1) = 0`.
    #[inline]
    pub fn d2k(self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        match self {
            Kernel::Gaussian => 0.25 * (-0.5 * t).exp(),
            Kernel::Biweight => {
                if t < 1.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `k(t)` and `g(t)` evaluated together.
    #[inline]
    pub(crate) fn k_and_g(self, t: f64) -> (f64, f64) {
        match self {
            Kernel::Gaussian => {
                let e = (-0.5 * t).exp();
                (e, 0.5 * e)
            }
            Kernel::Biweight => {
                if t < 1.0 {
                    let u = 1.0 - t;
                    (0.5 * u * u, u)
                } else {
                    (0.0, 0.0)
                }
            }
        }
    }

    /// Constant `c` with `c ∫_{ℝᵈ} p(‖x‖²) dx = 1` for `p ∈ {k, g}`.
    ///
    /// Gaussian `k` uses the closed form `(2π)^{-d/2}`. Everything else goes
    /// through radial adaptive quadrature, `c⁻¹ = S_{d-1} ∫₀^∞ r^{d-1} p(r²) dr`.
    pub fn normalization(self, d: usize, which: Profile) -> Result<f64> {
        if !(1..=10).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        if self == Kernel::Gaussian && which == Profile::K {
            return Ok((2.0 * PI).powf(-(d as f64) / 2.0));
        }
        let p = |t: f64| match which {
            Profile::K => self.k(t),
            Profile::G => self.g(t),
        };
        let upper = match self {
            Kernel::Biweight => 1.0,
            // exp(-r²/2) is below 1e-300 past r = 38
            Kernel::Gaussian => 40.0,
        };
        let dm1 = (d - 1) as i32;
        let integrand = |r: f64| r.powi(dm1) * p(r * r);
        // unit panels so the first bisection cannot miss a narrow bump
        let radial: f64 = (0..upper as usize)
            .map(|i| adaptive_simpson(&integrand, i as f64, i as f64 + 1.0, 1e-15, 60))
            .sum();
        let total = unit_sphere_area(d) * radial;
        if !total.is_finite() || total <= 0.0 {
            return Err(Error::NotIntegrable(d));
        }
        Ok(1.0 / total)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(Kernel::Gaussian),
            "biweight" | "epanechnikov" => Ok(Kernel::Biweight),
            other => Err(Error::Config(format!("unknown kernel '{other}'"))),
        }
    }
}

fn check_arg(t: f64) -> Result<()> {
    if t < 0.0 || t.is_nan() {
        Err(Error::NegativeArgument(t))
    } else {
        Ok(())
    }
}

/// Surface area of the unit sphere in ℝᵈ, `2π^{d/2}/Γ(d/2)`.
pub fn unit_sphere_area(d: usize) -> f64 {
    2.0 * PI.powf(d as f64 / 2.0) / gamma_half(d)
}

/// Γ(m/2) for positive integer m, by the half-integer recurrence.
fn gamma_half(m: usize) -> f64 {
    let (mut value, mut arg) = if m.is_multiple_of(2) {
        (1.0, 1.0)
    } else {
        (PI.sqrt(), 0.5)
    };
    let target = m as f64 / 2.0;
    while arg < target {
        value *= arg;
        arg += 1.0;
    }
    value
}

fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
