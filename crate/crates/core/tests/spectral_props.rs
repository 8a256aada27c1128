mod common;

use common::*;
use proptest::prelude::*;
use wbvp_core::assembly::{assemble_m, SystemMatrix};
use wbvp_core::grid::WeightGrid;
use wbvp_core::spectral::{
    certify_positive_definite, eigen_extremes, quadratic_form_lower_bound_check,
};

#[test]
fn unit_square_spectrum() {
    let s = eigen_extremes(&assemble_m(&WeightGrid::uniform(2, 2, 1.0).unwrap())).unwrap();
    let r5 = 5f64.sqrt();
    let want = [3.0 - r5, 3.0, 3.0, 3.0 + r5];
    let got = s.full_spectrum.unwrap();
    for (a, b) in got.iter().zip(want) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!((s.lambda_min - (3.0 - r5)).abs() < 1e-10);
    assert!((s.lambda_max - (3.0 + r5)).abs() < 1e-10);
    assert_eq!(s.trace, 12.0);
    assert!(s.pd_certificate.positive_definite);
}

#[test]
fn unit_square_lower_bound_anchor() {
    let g = WeightGrid::uniform(2, 2, 1.0).unwrap();
    let c = quadratic_form_lower_bound_check(&g, &gf(&g, vec![1.0; 4])).unwrap();
    assert_eq!((c.lhs, c.rhs), (4.0, 2.0));
    assert!(c.holds);
}

/// Right-hand side of the lower bound, written out independently.
fn lower_bound_oracle(g: &WeightGrid, x: &[f64]) -> f64 {
    let (m, n) = (g.m(), g.n());
    let at = |i: usize, j: usize| x[(j - 1) * m + (i - 1)];
    let mut s = 0.0;
    for j in 1..n {
        for i in 1..=m {
            s += g.p(i, j) * (at(i, j) - at(i, j + 1)).powi(2);
        }
    }
    for i in 1..=m {
        s += g.p(i, n) * at(i, n).powi(2);
    }
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectrum_identities(g in grid(6)) {
        let mat = assemble_m(&g);
        let s = eigen_extremes(&mat).unwrap();
        let ev = s.full_spectrum.clone().unwrap();
        let dense = dense_oracle(&g);
        let trace: f64 = (0..ev.len()).map(|k| dense[k][k]).sum();
        let frob2: f64 = dense.iter().flatten().map(|v| v * v).sum();
        let sum: f64 = ev.iter().sum();
        let sum2: f64 = ev.iter().map(|v| v * v).sum();
        prop_assert!((sum - trace).abs() <= 1e-9 * trace);
        prop_assert!((sum2 - frob2).abs() <= 1e-9 * frob2);
        prop_assert!(ev.windows(2).all(|w| w[0] <= w[1]));
        prop_assert_eq!(s.lambda_min, ev[0]);
        prop_assert_eq!(s.lambda_max, ev[ev.len() - 1]);
        // Gershgorin
        let gersh = dense.iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max);
        prop_assert!(s.lambda_max <= gersh * (1.0 + 1e-12));
    }

    #[test]
    fn positive_definite_certificate_agrees(g in grid(8)) {
        let mat = assemble_m(&g);
        let s = eigen_extremes(&mat).unwrap();
        let cert = certify_positive_definite(&mat);
        prop_assert!(cert.positive_definite);
        prop_assert!(s.lambda_min > 0.0);
        prop_assert_eq!(cert.positive_definite, s.lambda_min > 0.0);
        prop_assert!(cert.pivots.iter().all(|&p| p > 0.0));
        // det M = (prod of factor diagonal)^2 = prod of eigenvalues
        let ev = s.full_spectrum.unwrap();
        let log_det_chol: f64 = 2.0 * cert.pivots.iter().map(|p| p.ln()).sum::<f64>();
        let log_det_eig: f64 = ev.iter().map(|p| p.ln()).sum();
        prop_assert!((log_det_chol - log_det_eig).abs() <= 1e-8 * (1.0 + log_det_eig.abs()));
    }

    #[test]
    fn rayleigh_quotient_inside_spectrum((g, x) in grid_with_vec(6, 3.0)) {
        let mat = assemble_m(&g);
        let s = eigen_extremes(&mat).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        prop_assume!(nx > 1e-12);
        let q = quad_form(&dense_oracle(&g), &x);
        prop_assert!(s.lambda_min * nx <= q * (1.0 + 1e-10) + 1e-12);
        prop_assert!(q <= s.lambda_max * nx * (1.0 + 1e-10));
    }

    #[test]
    fn lower_bound_holds((g, x) in grid_with_vec(8, 3.0)) {
        let c = quadratic_form_lower_bound_check(&g, &gf(&g, x.clone())).unwrap();
        let rhs = lower_bound_oracle(&g, &x);
        let lhs = quad_form(&dense_oracle(&g), &x);
        prop_assert!((c.rhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
        prop_assert!((c.lhs - lhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
        prop_assert!(c.holds);
        prop_assert!(lhs >= rhs - 1e-10 * lhs.abs().max(rhs));
    }

    #[test]
    fn spectrum_scales_with_weights(g in grid(5), s in 0.1f64..10.0) {
        let a = eigen_extremes(&assemble_m(&g)).unwrap();
        let b = eigen_extremes(&assemble_m(&g.scaled(s).unwrap())).unwrap();
        prop_assert!((b.lambda_min - s * a.lambda_min).abs() <= 1e-9 * s * a.lambda_min);
        prop_assert!((b.lambda_max - s * a.lambda_max).abs() <= 1e-9 * s * a.lambda_max);
    }

    #[test]
    fn indefinite_matrices_fail_certificate(
        n in 2usize..6,
        entries in proptest::collection::vec(-3.0f64..3.0, 36),
        shift in 0.0f64..4.0,
    ) {
        let mut a = vec![vec![0.0; n]; n];
        for r in 0..n {
            for c in 0..=r {
                let v = entries[r * 6 + c];
                a[r][c] = v;
                a[c][r] = v;
            }
            a[r][r] += shift;
        }
        let mat = SystemMatrix::from_dense(&a).unwrap();
        let s = eigen_extremes(&mat).unwrap();
        let cert = certify_positive_definite(&mat);
        prop_assume!(s.lambda_min.abs() > 1e-8);
        prop_assert_eq!(cert.positive_definite, s.lambda_min > 0.0);
        if !cert.positive_definite {
            prop_assert!(cert.failed_at.is_some());
        }
    }
}
