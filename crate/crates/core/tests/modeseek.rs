mod common;

use common::*;
use proptest::prelude::*;
use regms_core::{
    hausdorff, ms_iterate, partition_samples, simulate_bimodal, DensityFloor, FittedModel,
    IterationConfig, Kernel, ResponseTransform, SimulationSpec,
};

fn fit(data: &regms_core::Dataset, t: ResponseTransform, kernel: Kernel, h: f64) -> FittedModel {
    FittedModel::fit(data, &t, kernel, h, DensityFloor::default()).unwrap()
}

#[test]
fn iteration_near_first_mean_finds_surface_maximum() {
    let data = simulate_bimodal(&SimulationSpec::new(200, 12)).unwrap();
    let model = fit(&data, ResponseTransform::t1_default(), Kernel::Biweight, 1.6);
    let res = ms_iterate(&model, &[0.9, 1.1], &IterationConfig::for_bandwidth(1.6)).unwrap();
    assert!(res.converged);
    let oracle = grid_argmax(0.0, 2.0, 200, |p| model.rstar(p));
    let dist = ((res.final_point[0] - oracle[0]).powi(2) + (res.final_point[1] - oracle[1]).powi(2)).sqrt();
    assert!(dist < 0.02, "{:?} vs {oracle:?}", res.final_point);
    assert!(res.final_point.iter().zip([1.0, 1.0]).all(|(a, b)| (a - b).abs() < 0.35));
}

#[test]
fn trajectories_are_monotone() {
    let data = simulate_bimodal(&SimulationSpec::new(150, 30)).unwrap();
    for kernel in [Kernel::Gaussian, Kernel::Biweight] {
        let model = fit(&data, ResponseTransform::t2_default(), kernel, 0.9);
        for i in (0..data.n()).step_by(7) {
            let res = ms_iterate(&model, data.point(i), &IterationConfig::for_bandwidth(0.9)).unwrap();
            for w in res.trajectory.windows(2) {
                let (a, b) = (model.rstar(&w[0]), model.rstar(&w[1]));
                assert!(b >= a - 1e-12 * a.abs());
            }
        }
    }
}

#[test]
fn unimodal_surface_gives_one_basin() {
    let data = uniform_dataset(300, &[-2.0, -2.0], &[2.0, 2.0], 4, |p| {
        (-(p[0] - 0.3).powi(2) - (p[1] + 0.2).powi(2)).exp()
    });
    let model = fit(&data, ResponseTransform::t2_default(), Kernel::Biweight, 1.5);
    let part = partition_samples(&model, &IterationConfig::for_bandwidth(1.5)).unwrap();
    assert_eq!(part.mode_count(), 1);
    let oracle = grid_argmax(-2.0, 2.0, 400, |p| model.rstar(p));
    assert!(hausdorff(&part.modes, &[oracle]).unwrap() < 0.02);
}

#[test]
fn transforms_share_the_argmax_of_a_symmetric_bump() {
    let bump = |p: &[f64]| 0.3 * (-(p[0] - 0.4).powi(2) - 2.0 * (p[1] + 0.3).powi(2)).exp();
    let data = centred_grid(17, [0.4, -0.3], 0.2, bump);
    let h = 1.0;
    let cfg = IterationConfig::for_bandwidth(h);
    for kernel in [Kernel::Gaussian, Kernel::Biweight] {
        let a = partition_samples(&fit(&data, ResponseTransform::t1_default(), kernel, h), &cfg).unwrap();
        let b = partition_samples(&fit(&data, ResponseTransform::t2_default(), kernel, h), &cfg).unwrap();
        assert_eq!(a.mode_count(), 1);
        assert_eq!(b.mode_count(), 1);
        assert!(hausdorff(&a.modes, &b.modes).unwrap() <= 2.0 * cfg.step_tol);
    }
}

#[test]
fn bimodal_surface_at_moderate_bandwidth() {
    let data = simulate_bimodal(&SimulationSpec::new(200, 40)).unwrap();
    let model = fit(&data, ResponseTransform::t1_default(), Kernel::Biweight, 1.6);
    let part = partition_samples(&model, &IterationConfig::for_bandwidth(1.6)).unwrap();
    let truth = SimulationSpec::new(200, 40).true_modes(0.005);
    assert_eq!(truth.len(), 2);
    assert!(part.mode_count() >= 2);
    assert_eq!(part.labels.len(), 200);
    assert_eq!(part.counts.iter().sum::<usize>(), part.labels.iter().filter(|&&l| l >= 0).count());
}

#[test]
fn hausdorff_matches_direct_definition() {
    let a = vec![vec![0.0, 0.0], vec![3.0, 4.0]];
    let b = vec![vec![0.0, 1.0]];
    // sup over a of dist to b is |(3,4)−(0,1)| = √18
    assert!((hausdorff(&a, &b).unwrap() - 18f64.sqrt()).abs() < 1e-15);
    assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    assert!(hausdorff(&a, &[]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn ascent_holds_from_random_starts(
        seed in 0u64..1000,
        h in 0.4f64..2.5,
        gaussian in any::<bool>(),
        t1 in any::<bool>(),
        sx in -2.5f64..2.5,
        sy in -2.5f64..2.5,
    ) {
        let data = simulate_bimodal(&SimulationSpec::new(80, seed)).unwrap();
        let kernel = if gaussian { Kernel::Gaussian } else { Kernel::Biweight };
        let t = if t1 { ResponseTransform::t1_default() } else { ResponseTransform::t2_default() };
        let model = fit(&data, t, kernel, h);
        let res = ms_iterate(&model, &[sx, sy], &IterationConfig::for_bandwidth(h));
        prop_assert!(res.is_ok(), "{:?}", res.err());
        let res = res.unwrap();
        for w in res.rstar_values.windows(2) {
            prop_assert!(w[1] >= w[0] - 1e-12 * w[0].abs());
        }
    }

    #[test]
    fn hausdorff_is_a_symmetric_metric(
        a in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
        b in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 2), 1..6),
    ) {
        let ab = hausdorff(&a, &b).unwrap();
        prop_assert_eq!(ab, hausdorff(&b, &a).unwrap());
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(hausdorff(&a, &a).unwrap(), 0.0);
    }
}
