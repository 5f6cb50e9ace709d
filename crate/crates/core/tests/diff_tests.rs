mod common;

use edgemask::diff::{d_h, d_h_adjoint, d_v, d_v_adjoint, masked_quadratic, tv_iso, DifferenceMatrix, EdgeMap};
use edgemask::image::Image;
use edgemask::mask::MaskPair;
use ndarray::Array2;
use proptest::prelude::*;

#[test]
fn library_dense_matrix_matches_entrywise_oracle() {
    for n in 1..=16 {
        assert_eq!(DifferenceMatrix::new(n).dense(), common::dense_d(n));
    }
}

#[test]
fn transforms_match_dense_products() {
    let mut r = common::rng(11);
    let n = 8;
    let d = common::dense_d(n);
    let x = common::random_field(n, &mut r);
    // D_v: D applied down each column; D_h: D applied along each row (x D^T).
    assert!(common::max_abs_diff(&d_v(&x), &d.dot(&x)) < 1e-12);
    assert!(common::max_abs_diff(&d_h(&x), &x.dot(&d.t())) < 1e-12);
    assert!(common::max_abs_diff(&d_v_adjoint(&x), &d.t().dot(&x)) < 1e-12);
    assert!(common::max_abs_diff(&d_h_adjoint(&x), &x.dot(&d)) < 1e-12);
}

#[test]
fn adjoint_identities() {
    let mut r = common::rng(12);
    for trial in 0..100 {
        let n = 1 + trial % 17;
        let x = common::random_field(n, &mut r);
        let y = common::random_field(n, &mut r);
        let s = common::norm(&x) * common::norm(&y);
        assert!((common::frob(&d_v(&x), &y) - common::frob(&x, &d_v_adjoint(&y))).abs() <= 1e-12 * s.max(1.0));
        assert!((common::frob(&d_h(&x), &y) - common::frob(&x, &d_h_adjoint(&y))).abs() <= 1e-12 * s.max(1.0));
    }
}

#[test]
fn single_pixel_tv_matches_loop_oracle() {
    let mut x = Array2::zeros((4, 4));
    x[[1, 1]] = 1.0;
    let n = 4;
    let mut expected = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a: f64 = x[[(i + 1) % n, j]] - x[[i, j]];
            let b: f64 = x[[i, (j + 1) % n]] - x[[i, j]];
            expected += (a * a + b * b).sqrt();
        }
    }
    assert!((tv_iso(&x) - expected).abs() < 1e-15);
}

#[test]
fn tv_homogeneity_and_constants() {
    let mut r = common::rng(13);
    let x = common::random_field(12, &mut r);
    assert!((tv_iso(&(&x * -2.5)) - 2.5 * tv_iso(&x)).abs() < 1e-10);
    for c in [-3.0, 0.0, 0.7] {
        assert_eq!(tv_iso(&Array2::from_elem((9, 9), c)), 0.0);
    }
    assert!(tv_iso(&x) > 0.0);
}

#[test]
fn masked_quadratic_against_loop() {
    let mut r = common::rng(14);
    let n = 8;
    let x = common::random_field(n, &mut r);
    let masks = MaskPair {
        vertical: common::random_mask(n, &mut r),
        horizontal: common::random_mask(n, &mut r),
    };
    let mut expected = 0.0;
    for i in 0..n {
        for j in 0..n {
            let a = x[[(i + 1) % n, j]] - x[[i, j]];
            let b = x[[i, (j + 1) % n]] - x[[i, j]];
            expected += f64::from(masks.vertical[[i, j]]) * a * a + f64::from(masks.horizontal[[i, j]]) * b * b;
        }
    }
    assert!((masked_quadratic(&x, &masks).unwrap() - expected).abs() < 1e-12);
    assert_eq!(masked_quadratic(&x, &MaskPair::zeros(n)).unwrap(), 0.0);
    let ones = masked_quadratic(&x, &MaskPair::ones(n)).unwrap();
    let full = d_v(&x).mapv(|v| v * v).sum() + d_h(&x).mapv(|v| v * v).sum();
    assert!((ones - full).abs() < 1e-12);
    assert!(masked_quadratic(&x, &MaskPair::ones(5)).is_err());
}

#[test]
fn edge_map_sums_vanish() {
    let mut r = common::rng(15);
    let img = Image::new(common::random_field(10, &mut r)).unwrap();
    let e = EdgeMap::of(&img);
    for j in 0..10 {
        assert!(e.vertical.column(j).sum().abs() < 1e-10);
    }
    for i in 0..10 {
        assert!(e.horizontal.row(i).sum().abs() < 1e-10);
    }
}

proptest! {
    #[test]
    fn linearity(a in -3f64..3.0, b in -3f64..3.0, seed in 0u64..1000) {
        let mut r = common::rng(seed);
        let x = common::random_field(7, &mut r);
        let y = common::random_field(7, &mut r);
        let lhs = d_v(&(&x * a + &y * b));
        let rhs = d_v(&x) * a + d_v(&y) * b;
        prop_assert!(common::max_abs_diff(&lhs, &rhs) < 1e-12);
        let lhs = d_h(&(&x * a + &y * b));
        let rhs = d_h(&x) * a + d_h(&y) * b;
        prop_assert!(common::max_abs_diff(&lhs, &rhs) < 1e-12);
    }

    #[test]
    fn zeroing_mask_entries_never_increases(seed in 0u64..1000, i in 0usize..6, j in 0usize..6) {
        let mut r = common::rng(seed);
        let x = common::random_field(6, &mut r);
        let full = masked_quadratic(&x, &MaskPair::ones(6)).unwrap();
        let mut m = MaskPair::ones(6);
        m.vertical[[i, j]] = 0;
        let v1 = masked_quadratic(&x, &m).unwrap();
        m.horizontal[[j, i]] = 0;
        let v2 = masked_quadratic(&x, &m).unwrap();
        prop_assert!(v1 <= full && v2 <= v1);
    }

    #[test]
    fn tv_zero_iff_constant(c in -5f64..5.0, seed in 0u64..1000) {
        prop_assert_eq!(tv_iso(&Array2::from_elem((5, 5), c)), 0.0);
        let mut r = common::rng(seed);
        let x = common::random_field(5, &mut r);
        prop_assert!(tv_iso(&x) > 0.0);
    }
}
