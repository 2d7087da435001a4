mod common;

use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use regms_core::{
    simulate_bimodal, DensityFloor, FittedModel, Kernel, NwEstimator, Profile, ResponseTransform,
    SimulationSpec,
};

#[test]
fn normalization_matches_gamma_closed_forms() {
    for kernel in [Kernel::Gaussian, Kernel::Biweight] {
        for which in [Profile::K, Profile::G] {
            for d in 1..=3 {
                let got = kernel.normalization(d, which).unwrap();
                let want = closed_form_normalization(kernel, d, which);
                assert!(
                    ((got - want) / want).abs() < 1e-9,
                    "{kernel} {which:?} d={d}: {got} vs {want}"
                );
            }
        }
    }
}

#[test]
fn biweight_one_dimensional_constants() {
    assert!((Kernel::Biweight.normalization(1, Profile::K).unwrap() - 1.875).abs() < 1e-9);
    assert!((Kernel::Biweight.normalization(1, Profile::G).unwrap() - 0.75).abs() < 1e-9);
}

fn bimodal_model(kernel: Kernel, h: f64, seed: u64) -> FittedModel {
    let data = simulate_bimodal(&SimulationSpec::new(200, seed)).unwrap();
    FittedModel::fit(&data, &ResponseTransform::t1_default(), kernel, h, DensityFloor::default())
        .unwrap()
}

#[test]
fn kde_integrates_to_one() {
    let model = bimodal_model(Kernel::Gaussian, 0.5, 4);
    // Riemann sum on a box wide enough to hold all the mass
    let (lo, hi, m) = (-5.0, 5.0, 400);
    let step = (hi - lo) / m as f64;
    let mut total = 0.0;
    for i in 0..m {
        for j in 0..m {
            let p = [lo + (i as f64 + 0.5) * step, lo + (j as f64 + 0.5) * step];
            total += model.kde_at(&p);
        }
    }
    total *= step * step;
    assert!((total - 1.0).abs() < 1e-3, "integral {total}");
}

#[test]
fn constant_response_reproduced_inside_the_design() {
    let data = uniform_dataset(500, &[-1.0, -1.0], &[1.0, 1.0], 3, |_| 0.7);
    let model = FittedModel::from_transformed(
        data.x().to_vec(),
        2,
        data.y().to_vec(),
        Kernel::Gaussian,
        0.2,
        DensityFloor::default(),
    )
    .unwrap();
    for p in [[0.0, 0.0], [0.3, -0.2], [-0.4, 0.5]] {
        let t = model.t_hat(&p);
        assert!((0.9..=1.1).contains(&t), "t_hat {t}");
        assert!((model.rstar(&p) - 0.7 * t).abs() < 1e-12);
    }
}

#[test]
fn gradient_identity_at_random_points() {
    let mut rng = ChaCha20Rng::seed_from_u64(17);
    for kernel in [Kernel::Gaussian, Kernel::Biweight] {
        let model = bimodal_model(kernel, 1.2, 9);
        let factor = model.gradient_identity_factor();
        for _ in 0..100 {
            let p = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
            let grad = model.rstar_grad(&p);
            let rg = model.rstar_g(&p);
            let shift = model.mean_shift(&p).unwrap();
            let via: Vec<f64> = shift.iter().map(|m| factor * rg * m).collect();
            assert!(rel_err(&via, &grad) < 1e-10, "{kernel} at {p:?}");
        }
    }
}

fn central_grad(f: impl Fn(&[f64]) -> f64, p: &[f64], eps: f64) -> Vec<f64> {
    (0..p.len())
        .map(|c| {
            let mut a = p.to_vec();
            let mut b = p.to_vec();
            a[c] += eps;
            b[c] -= eps;
            (f(&a) - f(&b)) / (2.0 * eps)
        })
        .collect()
}

#[test]
fn derivatives_match_finite_differences() {
    let model = bimodal_model(Kernel::Gaussian, 0.8, 21);
    let data = simulate_bimodal(&SimulationSpec::new(200, 21)).unwrap();
    let y = ResponseTransform::t1_default().apply(data.y()).unwrap().y_tilde;
    let nw = NwEstimator::new(data.x(), &y, 2, 0.8, Kernel::Gaussian).unwrap();
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    let eps = 1e-4;
    for _ in 0..20 {
        let p = [rng.random_range(-1.5..1.5), rng.random_range(-1.5..1.5)];
        let g = model.rstar_grad(&p);
        let fd = central_grad(|q| model.rstar(q), &p, eps);
        assert!(rel_err(&g, &fd) < 1e-5);

        let hess = model.rstar_hessian(&p);
        let mut fd_h = Vec::new();
        let mut an_h = Vec::new();
        for c in 0..2 {
            let col = central_grad(|q| model.rstar_grad(q)[c], &p, eps);
            fd_h.extend(col);
            an_h.extend((0..2).map(|r| hess[(c, r)]));
        }
        assert!(rel_err(&an_h, &fd_h) < 1e-4);

        let ng = nw.grad(&p).unwrap();
        let fd_nw = central_grad(|q| nw.regress(q).unwrap(), &p, eps);
        assert!(rel_err(&ng, &fd_nw) < 1e-5);
    }
}

#[test]
fn nw_gradient_matches_reference() {
    let data = simulate_bimodal(&SimulationSpec::new(50, 2)).unwrap();
    let pts: Vec<Vec<f64>> = data.points().map(|p| p.to_vec()).collect();
    for kernel in [Kernel::Gaussian, Kernel::Biweight] {
        let nw = NwEstimator::new(data.x(), data.y(), 2, 1.3, kernel).unwrap();
        for p in [[0.1, 0.2], [-0.7, 0.4], [1.0, -0.3]] {
            let a = nw.grad(&p).unwrap();
            let b = ref_nw_grad(&pts, data.y(), kernel, 1.3, &p);
            assert!(rel_err(&a, &b) < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn rstar_is_linear_in_responses(lambda in 0.1f64..10.0, px in -1.5f64..1.5, py in -1.5f64..1.5) {
        let model = bimodal_model(Kernel::Biweight, 1.0, 3);
        let scaled = model.with_scaled_responses(lambda);
        let p = [px, py];
        prop_assert!((scaled.rstar(&p) - lambda * model.rstar(&p)).abs() <= 1e-12 * (1.0 + scaled.rstar(&p)));
        if let (Ok(a), Ok(b)) = (model.mean_shift(&p), scaled.mean_shift(&p)) {
            for c in 0..2 {
                prop_assert!((a[c] - b[c]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric(px in -2.0f64..2.0, py in -2.0f64..2.0, h in 0.3f64..2.0) {
        let model = bimodal_model(Kernel::Gaussian, h, 6);
        let hess = model.rstar_hessian(&[px, py]);
        prop_assert_eq!(hess[(0, 1)], hess[(1, 0)]);
    }

    #[test]
    fn rstar_non_negative(px in -3.0f64..3.0, py in -3.0f64..3.0) {
        let model = bimodal_model(Kernel::Biweight, 0.7, 8);
        prop_assert!(model.rstar(&[px, py]) >= 0.0);
        prop_assert!(model.kde_at(&[px, py]) >= 0.0);
    }
}
