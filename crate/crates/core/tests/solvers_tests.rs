mod common;

use edgemask::diff::tv_iso;
use edgemask::fourier::{acquire, dft2, radial_pattern, Fourier2, SamplingPattern};
use edgemask::image::{shepp_logan, Image};
use edgemask::mask::MaskPair;
use edgemask::pipeline::{enhance, relative_error, EnhanceConfig};
use edgemask::solvers::{
    anisotropic_l2_reconstruct, cg_solve, data_residual, masked_l2_solve, tv_reconstruct, Fidelity, FnOperator,
    LinearOperator, MaskedNormalOperator, SolverConfig,
};
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

fn penalized(lambda: f64) -> SolverConfig {
    SolverConfig {
        lambda,
        fidelity: Fidelity::Penalized,
        cg_tolerance: 1e-13,
        max_cg_iterations: 5000,
        ..SolverConfig::default()
    }
}

#[test]
fn identity_and_diagonal_systems() {
    let mut r = common::rng(21);
    let rhs = common::random_field(9, &mut r);
    let cfg = SolverConfig::default();
    let id = FnOperator::new("identity", |x: &Array2<f64>| x.clone());
    let (x, rep) = cg_solve(&id, &rhs, &cfg).unwrap();
    assert_eq!(rep.iterations_used, 1);
    assert!(common::max_abs_diff(&x, &rhs) < 1e-14);

    let d = common::random_field(9, &mut r).mapv(|v| 1.5 + v);
    let dd = d.clone();
    let diag = FnOperator::new("diag", move |x: &Array2<f64>| x * &dd);
    let (x, rep) = cg_solve(&diag, &rhs, &cfg).unwrap();
    assert!(rep.converged);
    let expected = &rhs / &d;
    assert!(common::norm(&(&x - &expected)) <= 1e-7 * common::norm(&expected));
}

#[test]
fn dense_spd_matches_gaussian_elimination() {
    let mut r = common::rng(22);
    let a = Array2::from_shape_fn((16, 16), |_| r.gen_range(-1.0..1.0));
    let m = a.t().dot(&a) + Array2::<f64>::eye(16);
    let b: Vec<f64> = (0..16).map(|_| r.gen_range(-1.0..1.0)).collect();
    let mm = m.clone();
    let op = FnOperator::new("dense", move |x: &Array2<f64>| mm.dot(x));
    let cfg = SolverConfig {
        cg_tolerance: 1e-14,
        ..SolverConfig::default()
    };
    let (x, rep) = cg_solve(&op, &Array2::from_shape_vec((16, 1), b.clone()).unwrap(), &cfg).unwrap();
    assert!(rep.converged);
    let oracle = common::gauss_solve(&m, &b);
    for (u, v) in x.iter().zip(&oracle) {
        assert!((u - v).abs() < 1e-8);
    }
    assert!(rep.residual_trace.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn not_converged_is_reported() {
    let mut r = common::rng(23);
    let d = common::random_field(12, &mut r).mapv(|v| 1.0 + 100.0 * v.abs());
    let op = FnOperator::new("diag", move |x: &Array2<f64>| x * &d);
    let cfg = SolverConfig {
        max_cg_iterations: 2,
        ..SolverConfig::default()
    };
    let (_, rep) = cg_solve(&op, &common::random_field(12, &mut r), &cfg).unwrap();
    assert!(!rep.converged);
    assert_eq!(rep.iterations_used, 2);
}

#[test]
fn nan_is_an_error() {
    let op = FnOperator::new("nan", |x: &Array2<f64>| x.mapv(|_| f64::NAN));
    let rhs = Array2::ones((3, 3));
    assert!(cg_solve(&op, &rhs, &SolverConfig::default()).is_err());
}

#[test]
fn tv_with_full_sampling_is_exact() {
    let truth = shepp_logan(32);
    let data = acquire(&truth, &SamplingPattern::full(32)).unwrap();
    let (x, _) = tv_reconstruct(&data, &SolverConfig::default()).unwrap();
    assert!(relative_error(&x, &truth).unwrap() <= 1e-8);
}

#[test]
fn tv_objective_settles_and_data_holds() {
    let truth = shepp_logan(64);
    let data = acquire(&truth, &radial_pattern(64, 10).unwrap()).unwrap();
    let cfg = SolverConfig {
        max_outer_iterations: 150,
        ..SolverConfig::default()
    };
    let (x, rep) = tv_reconstruct(&data, &cfg).unwrap();
    assert!(rep.objective_trace.iter().all(|v| v.is_finite()));
    for w in rep.objective_trace[5..].windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-9), "{} -> {}", w[0], w[1]);
    }
    assert!((rep.objective_trace.last().unwrap() - tv_iso(x.pixels())).abs() < 1e-8 * tv_iso(x.pixels()));
    let fourier = Fourier2::new(64);
    assert!(data_residual(&fourier, x.pixels(), &data) <= 1e-10);
    let spec = dft2(&x);
    for (f, v) in data.pattern().indices().iter().zip(data.values()) {
        assert!((spec.get(*f) - v).norm() <= 1e-10);
    }
    let (y, _) = tv_reconstruct(&data, &cfg).unwrap();
    assert_eq!(x, y);
}

#[test]
fn aniso_full_sampling_matches_dense_normal_equations() {
    let n = 8;
    let mut r = common::rng(24);
    let truth = Image::new(common::random_field(n, &mut r)).unwrap();
    let data = acquire(&truth, &SamplingPattern::full(n)).unwrap();
    let lambda = 1e-3;
    let (x, rep) = anisotropic_l2_reconstruct(&data, &penalized(lambda)).unwrap();
    assert!(rep.converged);
    let (dv, dh) = common::dense_dv_dh(n);
    let a = Array2::<f64>::eye(n * n) + (dv.t().dot(&dv) + dh.t().dot(&dh)) * lambda;
    let oracle = common::gauss_solve(&a, &common::vec_of(truth.pixels()));
    assert!(common::max_abs_diff(x.pixels(), &common::field_of(&oracle, n)) < 1e-8);
}

#[test]
fn masked_undersampled_matches_dense_normal_equations() {
    let n = 8;
    let mut r = common::rng(25);
    let truth = Image::new(common::random_field(n, &mut r)).unwrap();
    let pattern = radial_pattern(n, 3).unwrap();
    let data = acquire(&truth, &pattern).unwrap();
    let masks = MaskPair {
        vertical: common::random_mask(n, &mut r),
        horizontal: common::random_mask(n, &mut r),
    };
    let mu = 1e-2;
    let (x, rep) = masked_l2_solve(&data, &masks, mu, Fidelity::Penalized, None, &penalized(0.0)).unwrap();
    assert!(rep.converged);
    let (dv, dh) = common::dense_dv_dh(n);
    let reg = dv.t().dot(&common::diag(&masks.vertical)).dot(&dv) + dh.t().dot(&common::diag(&masks.horizontal)).dot(&dh);
    let normal = common::dense_data_normal(n, pattern.mask());
    let a = &normal + &(reg * mu);
    let rhs = common::matvec(&normal, &common::vec_of(truth.pixels()));
    let oracle = common::gauss_solve(&a, &rhs);
    assert!(common::max_abs_diff(x.pixels(), &common::field_of(&oracle, n)) < 1e-8);
}

#[test]
fn masked_operator_matches_dense_matrix() {
    let n = 8;
    let mut r = common::rng(26);
    let pattern = radial_pattern(n, 2).unwrap();
    let masks = MaskPair {
        vertical: common::random_mask(n, &mut r),
        horizontal: common::random_mask(n, &mut r),
    };
    let op = MaskedNormalOperator::new(&pattern, &masks, 0.3, 1.0).unwrap();
    let (dv, dh) = common::dense_dv_dh(n);
    let dense = common::dense_data_normal(n, pattern.mask())
        + (dv.t().dot(&common::diag(&masks.vertical)).dot(&dv) + dh.t().dot(&common::diag(&masks.horizontal)).dot(&dh))
            * 0.3;
    for _ in 0..5 {
        let x = common::random_field(n, &mut r);
        let expected = common::field_of(&common::matvec(&dense, &common::vec_of(&x)), n);
        assert!(common::max_abs_diff(&op.apply(&x), &expected) < 1e-12);
    }
}

#[test]
fn aniso_equals_enhance_with_ones_masks() {
    let truth = shepp_logan(32);
    let data = acquire(&truth, &radial_pattern(32, 6).unwrap()).unwrap();
    for fidelity in [Fidelity::Exact, Fidelity::Penalized] {
        let cfg = SolverConfig {
            lambda: 0.05,
            fidelity,
            ..SolverConfig::default()
        };
        let (a, _) = anisotropic_l2_reconstruct(&data, &cfg).unwrap();
        let enh = EnhanceConfig {
            k: 5.0,
            mu: 0.05,
            noiseless: fidelity == Fidelity::Exact,
            solver: cfg.clone(),
        };
        let (b, _) = enhance(&data, &MaskPair::ones(32), &enh).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn large_lambda_with_dc_only_gives_constant() {
    let truth = shepp_logan(16);
    let data = acquire(&truth, &radial_pattern(16, 0).unwrap()).unwrap();
    assert_eq!(data.len(), 1);
    let (x, _) = anisotropic_l2_reconstruct(&data, &penalized(1e6)).unwrap();
    let mean = truth.pixels().mean().unwrap();
    assert!(x.pixels().iter().all(|v| (v - mean).abs() < 1e-9), "mean {mean}");
}

#[test]
fn exact_enhancement_keeps_data() {
    let truth = shepp_logan(32);
    let data = acquire(&truth, &radial_pattern(32, 5).unwrap()).unwrap();
    let mut r = common::rng(27);
    let masks = MaskPair {
        vertical: common::random_mask(32, &mut r),
        horizontal: common::random_mask(32, &mut r),
    };
    let cfg = SolverConfig::default();
    let (x, rep) = masked_l2_solve(&data, &masks, 1.0, Fidelity::Exact, None, &cfg).unwrap();
    assert!(rep.residual_trace.windows(2).all(|w| w[1] <= w[0]));
    assert!(data_residual(&Fourier2::new(32), x.pixels(), &data) <= 1e-10);
}

#[test]
fn rejects_bad_inputs() {
    let truth = shepp_logan(8);
    let data = acquire(&truth, &radial_pattern(8, 2).unwrap()).unwrap();
    let cfg = SolverConfig::default();
    assert!(masked_l2_solve(&data, &MaskPair::ones(4), 1.0, Fidelity::Exact, None, &cfg).is_err());
    assert!(masked_l2_solve(&data, &MaskPair::ones(8), -1.0, Fidelity::Exact, None, &cfg).is_err());
    let bad = SolverConfig {
        cg_tolerance: 0.0,
        ..SolverConfig::default()
    };
    assert!(tv_reconstruct(&data, &bad).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cg_residual_is_monotone(seed in 0u64..10_000, lines in 1usize..6) {
        let mut r = common::rng(seed);
        let n = 12;
        let pattern = radial_pattern(n, lines).unwrap();
        let masks = MaskPair { vertical: common::random_mask(n, &mut r), horizontal: common::random_mask(n, &mut r) };
        let op = MaskedNormalOperator::new(&pattern, &masks, 0.1, 1.0).unwrap();
        let rhs = op.apply(&common::random_field(n, &mut r));
        let (_, rep) = cg_solve(&op, &rhs, &SolverConfig::default()).unwrap();
        prop_assert!(rep.residual_trace.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn solutions_are_deterministic(seed in 0u64..10_000) {
        let mut r = common::rng(seed);
        let truth = Image::new(common::random_field(8, &mut r)).unwrap();
        let data = acquire(&truth, &radial_pattern(8, 3).unwrap()).unwrap();
        let cfg = penalized(0.01);
        let a = anisotropic_l2_reconstruct(&data, &cfg).unwrap();
        let b = anisotropic_l2_reconstruct(&data, &cfg).unwrap();
        prop_assert_eq!(a.0, b.0);
    }
}
