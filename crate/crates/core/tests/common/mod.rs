#![allow(dead_code)]

//! Independent reference implementations shared by the integration tests.
//! Nothing here calls into the library's estimator code.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use regms_core::{Dataset, Kernel, Profile};

/// `Γ(m/2)` by the half-integer recursion.
pub fn gamma_half(m: usize) -> f64 {
    let mut v = if m.is_multiple_of(2) { 1.0 } else { PI.sqrt() };
    let mut a = if m.is_multiple_of(2) { 1.0 } else { 0.5 };
    while 2.0 * a < m as f64 - 1e-9 {
        v *= a;
        a += 1.0;
    }
    v
}

/// Closed-form `c_{k,d}` and `c_{g,d}` from Beta/Gamma integrals.
pub fn closed_form_normalization(kernel: Kernel, d: usize, which: Profile) -> f64 {
    let pd = PI.powf(d as f64 / 2.0);
    match (kernel, which) {
        (Kernel::Gaussian, Profile::K) => (2.0 * PI).powf(-(d as f64) / 2.0),
        (Kernel::Gaussian, Profile::G) => 2.0 * (2.0 * PI).powf(-(d as f64) / 2.0),
        // ½∫(1−‖x‖²)² = π^{d/2}/Γ(d/2+3)
        (Kernel::Biweight, Profile::K) => gamma_half(d + 6) / pd,
        // ∫(1−‖x‖²) = π^{d/2}/Γ(d/2+2)
        (Kernel::Biweight, Profile::G) => gamma_half(d + 4) / pd,
    }
}

pub fn ref_k(kernel: Kernel, t: f64) -> f64 {
    match kernel {
        Kernel::Gaussian => (-t / 2.0).exp(),
        Kernel::Biweight => {
            if t < 1.0 {
                0.5 * (1.0 - t) * (1.0 - t)
            } else {
                0.0
            }
        }
    }
}

pub fn ref_dk(kernel: Kernel, t: f64) -> f64 {
    match kernel {
        Kernel::Gaussian => -0.5 * (-t / 2.0).exp(),
        Kernel::Biweight => {
            if t < 1.0 {
                t - 1.0
            } else {
                0.0
            }
        }
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for c in 0..a.len() {
        s += (a[c] - b[c]).powi(2);
    }
    s
}

/// NW regression gradient written as `(N'D − ND')/D²`.
pub fn ref_nw_grad(x: &[Vec<f64>], y: &[f64], kernel: Kernel, h: f64, at: &[f64]) -> Vec<f64> {
    let d = at.len();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut dnum = vec![0.0; d];
    let mut dden = vec![0.0; d];
    for (xi, yi) in x.iter().zip(y) {
        let t = dist2(at, xi) / (h * h);
        let k = ref_k(kernel, t);
        let dk = ref_dk(kernel, t);
        num += yi * k;
        den += k;
        for c in 0..d {
            let dt = 2.0 * (at[c] - xi[c]) / (h * h);
            dnum[c] += yi * dk * dt;
            dden[c] += dk * dt;
        }
    }
    (0..d)
        .map(|c| (dnum[c] * den - num * dden[c]) / (den * den))
        .collect()
}

/// Leave-one-out gradient cross-validation by direct refits: for every `j`
/// the `n − 1` remaining points get a fresh density estimate and a fresh
/// regression gradient.
pub fn brute_force_cv(
    x: &[Vec<f64>],
    y_tilde: &[f64],
    kernel: Kernel,
    h: f64,
    pilot_h: f64,
    floor_frac: f64,
) -> f64 {
    let n = x.len();
    let d = x[0].len();
    let ck = closed_form_normalization(kernel, d, Profile::K);
    let hd = h.powi(d as i32);

    let mut full_max: f64 = 0.0;
    for i in 0..n {
        let mut s = 0.0;
        for l in 0..n {
            s += ref_k(kernel, dist2(&x[i], &x[l]) / (h * h));
        }
        full_max = full_max.max(ck * s / (n as f64 * hd));
    }
    let floor = floor_frac * full_max;

    let mut total = 0.0;
    for j in 0..n {
        let pilot = ref_nw_grad(x, y_tilde, kernel, pilot_h, &x[j]);
        let keep: Vec<usize> = (0..n).filter(|&i| i != j).collect();
        let m = keep.len() as f64;
        let mut grad = vec![0.0; d];
        for &i in &keep {
            let mut f = 0.0;
            for &l in &keep {
                f += ref_k(kernel, dist2(&x[i], &x[l]) / (h * h));
            }
            let f = (ck * f / (m * hd)).max(floor);
            let t = dist2(&x[j], &x[i]) / (h * h);
            let dk = ref_dk(kernel, t);
            for c in 0..d {
                // ∂/∂x_c of k(‖x−Xᵢ‖²/h²) at x = X_j
                grad[c] += ck / (m * hd) * y_tilde[i] / f * dk * 2.0 * (x[j][c] - x[i][c]) / (h * h);
            }
        }
        for c in 0..d {
            total += (pilot[c] - grad[c]).powi(2);
        }
    }
    total / n as f64
}

/// Uniform inputs on a box with `y = f(x)`.
pub fn uniform_dataset(
    n: usize,
    lo: &[f64],
    hi: &[f64],
    seed: u64,
    f: impl Fn(&[f64]) -> f64,
) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let d = lo.len();
    let mut x = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let p: Vec<f64> = (0..d).map(|c| rng.random_range(lo[c]..hi[c])).collect();
        y.push(f(&p));
        x.extend(p);
    }
    Dataset::new(x, y, d).unwrap()
}

/// Symmetric square grid of side `m` centred on `centre` with spacing `step`.
pub fn centred_grid(m: usize, centre: [f64; 2], step: f64, f: impl Fn(&[f64]) -> f64) -> Dataset {
    let half = (m as f64 - 1.0) / 2.0;
    let mut x = Vec::new();
    let mut y = Vec::new();
    for i in 0..m {
        for j in 0..m {
            let p = [
                centre[0] + (i as f64 - half) * step,
                centre[1] + (j as f64 - half) * step,
            ];
            y.push(f(&p));
            x.extend(p);
        }
    }
    Dataset::new(x, y, 2).unwrap()
}

pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let scale: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / scale.max(f64::MIN_POSITIVE)
}

/// Maximum of `f` over a square grid, used as a mode oracle.
pub fn grid_argmax(lo: f64, hi: f64, steps: usize, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut best = (f64::NEG_INFINITY, vec![0.0, 0.0]);
    for i in 0..=steps {
        for j in 0..=steps {
            let p = vec![
                lo + (hi - lo) * i as f64 / steps as f64,
                lo + (hi - lo) * j as f64 / steps as f64,
            ];
            let v = f(&p);
            if v > best.0 {
                best = (v, p);
            }
        }
    }
    best.1
}

/// Straight filament `y = exp(−x₂²)` with ridge `x₂ = 0`: one uniform point in
/// each cell of a 50×20 grid over `[−2.5, 2.5]×[−1, 1]`. Stratifying keeps the
/// design density flat, which an i.i.d. design at this size does not.
pub fn filament(seed: u64) -> Dataset {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mx, my) = (50, 20);
    let (w1, w2) = (2.5, 1.0);
    let mut x = Vec::with_capacity(2 * mx * my);
    let mut y = Vec::with_capacity(mx * my);
    for i in 0..mx {
        for j in 0..my {
            let a: f64 = rng.random();
            let b: f64 = rng.random();
            let p = [
                -w1 + (i as f64 + a) * 2.0 * w1 / mx as f64,
                -w2 + (j as f64 + b) * 2.0 * w2 / my as f64,
            ];
            y.push((-p[1] * p[1]).exp());
            x.extend(p);
        }
    }
    Dataset::new(x, y, 2).unwrap()
}

/// Starts inside the ridge's basin: away from the strip ends and where the
/// cross-filament curvature of `exp(−x₂²)` is negative.
pub fn in_filament_basin(p: &[f64]) -> bool {
    p[0].abs() <= 1.5 && p[1].abs() < 0.7
}
