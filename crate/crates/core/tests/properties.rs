use daeaic::specdiff::{norm_bound_report, BoundKind, DiffKind, DiffOperator, NodeFamily, Window};
use daeaic::subspace::{fundamental_bases, opening, singular_values, svd, RankPolicy, SubspaceBasis};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn eval_poly(c: &[f64], x: f64) -> (f64, f64) {
    let mut p = 0.0;
    let mut dp = 0.0;
    for &a in c.iter().rev() {
        dp = dp * x + p;
        p = p * x + a;
    }
    (p, dp)
}

fn family() -> impl Strategy<Value = NodeFamily> {
    prop_oneof![
        Just(NodeFamily::Chebyshev2),
        Just(NodeFamily::Equidistant),
        Just(NodeFamily::Radau),
        Just(NodeFamily::GaussLegendre),
    ]
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0f64..1.0, rows * cols).prop_map(move |v| DMatrix::from_vec(rows, cols, v))
}

/// Random matrix of a chosen rank, built as a product of thin factors.
fn ranked() -> impl Strategy<Value = DMatrix<f64>> {
    (1usize..7, 1usize..7)
        .prop_flat_map(|(p, q)| (Just(p), Just(q), 0..=p.min(q)))
        .prop_flat_map(|(p, q, r)| (matrix(p, r), matrix(r, q)))
        .prop_map(|(a, b)| a * b)
}

fn basis(m: usize, k: usize) -> impl Strategy<Value = SubspaceBasis<f64>> {
    matrix(m, k).prop_map(|a| SubspaceBasis::orthonormalize(&a))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn differentiation_is_exact_on_polynomials(
        fam in family(),
        m in 2usize..11,
        c0 in -2.0f64..2.0,
        tau in 0.01f64..2.0,
        coef in prop::collection::vec(-1.0f64..1.0, 11),
    ) {
        let d = DiffOperator::new(fam, DiffKind::Interpolatory, m, m - 1, Window::new(c0, tau)).unwrap();
        // polynomial of degree m-1 in the reference variable
        let c = &coef[..m];
        let s = 2.0 / tau;
        let f: Vec<f64> = d.ref_nodes.iter().map(|&x| eval_poly(c, x).0).collect();
        let want: Vec<f64> = d.ref_nodes.iter().map(|&x| eval_poly(c, x).1 * s).collect();
        let got = d.apply_scalar(&f);
        let scale = want.iter().fold(s, |a, v| a.max(v.abs()));
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() <= 1e-12 * scale, "{g} vs {w}");
        }
    }

    #[test]
    fn least_squares_differentiation_is_exact(
        fam in prop_oneof![Just(NodeFamily::Chebyshev2), Just(NodeFamily::Radau), Just(NodeFamily::GaussLegendre)],
        m in 3usize..12,
        drop in 1usize..3,
        coef in prop::collection::vec(-1.0f64..1.0, 12),
    ) {
        let n = m.saturating_sub(drop).max(1);
        let d = DiffOperator::new(fam, DiffKind::LeastSquares, m, n, Window::new(-1.0, 2.0)).unwrap();
        let c = &coef[..=n];
        let f: Vec<f64> = d.ref_nodes.iter().map(|&x| eval_poly(c, x).0).collect();
        let got = d.apply_scalar(&f);
        for (&x, g) in d.ref_nodes.iter().zip(&got) {
            prop_assert!((g - eval_poly(c, x).1).abs() <= 1e-11);
        }
    }

    #[test]
    fn rows_sum_to_zero(fam in family(), m in 2usize..21, tau in 0.001f64..4.0) {
        let d = DiffOperator::new(fam, DiffKind::Interpolatory, m, m - 1, Window::new(0.3, tau)).unwrap();
        for i in 0..m {
            // equidistant rows grow like 2^M; the sum is then only zero to rounding of its largest entry
            let tol = if fam == NodeFamily::Equidistant { 1e-13 * d.coef.row(i).amax().max(1.0) } else { 1e-13 };
            prop_assert!(d.coef.row(i).sum().abs() <= tol, "row {i}: {:e}", d.coef.row(i).sum());
        }
        let ones = vec![1.0; m];
        prop_assert!(d.apply_scalar(&ones).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svd_reconstructs(a in (1usize..9, 1usize..9).prop_flat_map(|(p, q)| matrix(p, q))) {
        let f = svd(&a);
        let (p, q) = a.shape();
        let mut sigma = DMatrix::zeros(p, q);
        for (i, &s) in f.s.iter().enumerate() {
            sigma[(i, i)] = s;
        }
        let back = &f.u * sigma * &f.vt;
        prop_assert!((back - &a).amax() <= 1e-12 * a.amax().max(1.0));
        prop_assert!((f.u.transpose() * &f.u - DMatrix::identity(p, p)).amax() <= 1e-12);
        prop_assert!((f.vt.transpose() * &f.vt - DMatrix::identity(q, q)).amax() <= 1e-12);
        prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn fundamental_bases_are_orthonormal(a in ranked()) {
        let fb = fundamental_bases(&a, &RankPolicy::default());
        let (p, q) = a.shape();
        prop_assert_eq!(fb.range.dim + fb.corange.dim, p);
        prop_assert_eq!(fb.rank + fb.nullspace.dim, q);
        for b in [&fb.range, &fb.corange, &fb.nullspace] {
            prop_assert!(b.orthonormality_defect() <= 1e-10);
        }
        prop_assert!((&a * &fb.nullspace.columns).amax() <= 1e-10);
        prop_assert!((fb.corange.columns.transpose() * &a).amax() <= 1e-10);
    }

    #[test]
    fn opening_identities((u, v) in (2usize..7).prop_flat_map(|m| (1..m).prop_flat_map(move |k| (basis(m, k), basis(m, k))))) {
        let a = opening(&u, &v);
        let b = opening(&v, &u);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - b).abs() <= 1e-12);
        let diff = u.projector() - v.projector();
        let p = singular_values(&diff)[0];
        prop_assert!((a - p).abs() <= 1e-12, "{a} vs {p}");
        prop_assert!(opening(&u, &u) <= 1e-12);
    }

    #[test]
    fn opening_unequal_dims((u, v) in (3usize..7).prop_flat_map(|m| (basis(m, 1), basis(m, 2)))) {
        prop_assert_eq!(opening(&u, &v), 1.0);
        prop_assert_eq!(opening(&v, &u), 1.0);
    }
}

#[test]
fn norm_bounds_hold_for_all_sizes() {
    for m in 2..=20 {
        let w = Window::new(-1.0, 2.0);
        let c = norm_bound_report(&DiffOperator::new(NodeFamily::Chebyshev2, DiffKind::Interpolatory, m, m - 1, w).unwrap()).unwrap();
        assert_eq!(c.kind, BoundKind::Upper);
        assert!(c.satisfied, "Chebyshev2 M={m}: {} > {}", c.inf_norm, c.bound);
        let e = norm_bound_report(&DiffOperator::new(NodeFamily::Equidistant, DiffKind::Interpolatory, m, m - 1, w).unwrap()).unwrap();
        assert_eq!(e.kind, BoundKind::Lower);
        assert!(e.satisfied, "equidistant M={m}: {} < {}", e.inf_norm, e.bound);
    }
}
