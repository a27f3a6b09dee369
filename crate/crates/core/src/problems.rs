//! Benchmark problems with exact solutions and exact condition matrices.

use nalgebra::{DMatrix, DVector};

use crate::error::{config, Result};
use crate::matfun::{manufacture_rhs, standard_form, DaePair, ExactSolution, MatrixFunction, VectorFunction};
use crate::scalar::Real;

/// A problem together with everything needed to verify a solver on it.
#[derive(Debug, Clone)]
pub struct ProblemBundle<T> {
    pub name: String,
    /// The pair; its interval is the domain where the coefficients may be evaluated.
    pub pair: DaePair<T>,
    pub a: MatrixFunction<T>,
    pub d: DMatrix<T>,
    pub b: MatrixFunction<T>,
    pub q: MatrixFunction<T>,
    pub exact: ExactSolution<T>,
    /// Exact condition matrix, `l x m`.
    pub g_exact: MatrixFunction<T>,
    /// Initial condition `G_a x(a) = g_a` for the initial value problem.
    pub g_a: DMatrix<T>,
    pub g_a_rhs: DVector<T>,
    pub expected_mu: usize,
    pub expected_l: usize,
    /// Interval of the initial value problem.
    pub interval: (T, T),
}

pub const PROBLEM_NAMES: [&str; 5] = ["campbell-moore", "chua-riaza-1", "chua-riaza-2", "chua-riaza-3", "kcf2"];

/// Looks a problem up by its CLI name.
pub fn problem_by_name<T: Real>(name: &str) -> Result<ProblemBundle<T>> {
    match name {
        "campbell-moore" => campbell_moore(T::lit(5.0)),
        "chua-riaza-1" => Ok(chua_riaza(ChuaCase::Index1)),
        "chua-riaza-2" => Ok(chua_riaza(ChuaCase::Index2)),
        "chua-riaza-3" => Ok(chua_riaza(ChuaCase::Index3)),
        "kcf2" => Ok(kcf_index2(|t: T| t.sin(), |t: T| t.cos(), |t: T| -t.sin())),
        other => config(format!("unknown problem '{other}', expected one of {}", PROBLEM_NAMES.join(", "))),
    }
}

fn coefficient_domain<T: Real>() -> (T, T) {
    (T::lit(-100.0), T::lit(100.0))
}

fn selector<T: Real>(k: usize, m: usize) -> DMatrix<T> {
    DMatrix::from_fn(k, m, |i, j| if i == j { T::one() } else { T::zero() })
}

fn vec_fn<T: Real>(f: impl Fn(T) -> Vec<T> + Send + Sync + 'static, n: usize) -> VectorFunction<T> {
    VectorFunction::new(n, move |t| DVector::from_vec(f(t)))
}

/// Linear Campbell–Moore test problem, `m = 7`, index 3, four degrees of freedom.
pub fn campbell_moore<T: Real>(rho: T) -> Result<ProblemBundle<T>> {
    if rho == T::zero() {
        return config("rho must be nonzero");
    }
    let m = 7;
    let k = 6;
    let two = T::lit(2.0);
    let a = MatrixFunction::constant(selector::<T>(k, m).transpose());
    let b = MatrixFunction::new(m, m, move |t: T| {
        let (s, c) = (t.sin(), t.cos());
        let o = T::zero();
        let i = T::one();
        let r2 = two * rho;
        #[rustfmt::skip]
        let v = [
            o, o, o, -i, o, o, o,
            o, o, o, o, -i, o, o,
            o, o, o, o, o, -i, o,
            o, o, s, o, i, -c, -r2 * c * c,
            o, o, -c, -i, o, -s, -r2 * s * c,
            o, o, i, o, o, o, r2 * s,
            r2 * c * c, r2 * s * c, -r2 * s, o, o, o, o,
        ];
        DMatrix::from_row_slice(m, m, &v)
    });
    let pair = standard_form(a.clone(), &selector(k, m), b.clone(), coefficient_domain())?;
    let x = vec_fn(
        move |t: T| {
            let (s, c) = (t.sin(), t.cos());
            vec![s, c, two * c * c, c, -s, -two * (two * t).sin(), -s / rho]
        },
        m,
    );
    let dx = vec_fn(
        move |t: T| {
            let (s, c) = (t.sin(), t.cos());
            vec![c, -s, -T::lit(4.0) * s * c, -s, -c, -T::lit(4.0) * (two * t).cos(), -c / rho]
        },
        m,
    );
    let exact = ExactSolution { x, dx };
    let q = manufacture_rhs(&pair, &exact);
    let o = T::zero();
    let i = T::one();
    #[rustfmt::skip]
    let g_a = DMatrix::from_row_slice(4, m, &[
        o, -i, o, o, o, o, o,
        o, i, i, o, o, o, o,
        o, o, o, o, -i, o, o,
        -i, o, o, o, i, i, o,
    ]);
    let g_a_rhs = DVector::from_vec(vec![-i, T::lit(3.0), o, o]);
    Ok(ProblemBundle {
        name: "campbell-moore".into(),
        pair,
        a,
        d: selector(k, m),
        b,
        q,
        exact,
        g_exact: MatrixFunction::new(4, m, campbell_moore_g::<T>),
        g_a,
        g_a_rhs,
        expected_mu: 3,
        expected_l: 4,
        interval: (T::zero(), T::lit(5.0)),
    })
}

/// Exact condition matrix of the Campbell–Moore problem.
///
/// `Omega(t) = v v^T` with `v = (cos^2 t, sin t cos t, -sin t)`.
pub fn campbell_moore_g<T: Real>(t: T) -> DMatrix<T> {
    let (s, c) = (t.sin(), t.cos());
    let o = T::zero();
    let i = T::one();
    let h = DMatrix::from_row_slice(2, 3, &[s, -c, o, o, i, c]);
    let frak_a = DMatrix::from_row_slice(3, 3, &[o, i, -c, -i, o, -s, o, o, o]);
    let v = DMatrix::from_column_slice(3, 1, &[c * c, s * c, -s]);
    let dv = DMatrix::from_column_slice(3, 1, &[-T::lit(2.0) * s * c, c * c - s * s, -c]);
    let om = &v * v.transpose();
    let dom = &dv * v.transpose() + &v * dv.transpose();
    let low = &h * (frak_a + dom) * om;
    let mut g = DMatrix::zeros(4, 7);
    g.view_mut((0, 0), (2, 3)).copy_from(&h);
    g.view_mut((2, 0), (2, 3)).copy_from(&low);
    g.view_mut((2, 3), (2, 3)).copy_from(&h);
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChuaCase {
    Index1,
    Index2,
    Index3,
}

/// Circuit with current controlled resistors, `m = 5`, `k = 3`.
pub fn chua_riaza<T: Real>(case: ChuaCase) -> ProblemBundle<T> {
    let m = 5;
    let k = 3;
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let c1 = move |t: T| t.sin() + two;
    let dc1 = move |t: T| t.cos();
    let (c2, dc2): (fn(T) -> T, fn(T) -> T) = match case {
        ChuaCase::Index3 => (|t: T| -(t.sin() + T::lit(2.0)), |t: T| -t.cos()),
        _ => (|t: T| t.cos() + T::lit(2.0), |t: T| -t.sin()),
    };
    let ll = move |t: T| t * t + T::one();
    let dll = move |t: T| two * t;
    let r1 = move |t: T| match case {
        ChuaCase::Index1 => half * (two * t).sin() + T::one(),
        _ => T::zero(),
    };
    let r2 = move |t: T| t.sin() + t.cos() + two;
    let a = MatrixFunction::new(m, k, move |t: T| {
        let mut a = DMatrix::zeros(m, k);
        a[(0, 0)] = c1(t);
        a[(1, 1)] = c2(t);
        a[(2, 2)] = ll(t);
        a
    });
    let b = MatrixFunction::new(m, m, move |t: T| {
        let o = T::zero();
        let i = T::one();
        #[rustfmt::skip]
        let v = [
            dc1(t), o, o, -i, i,
            o, dc2(t), i, i, o,
            o, -i, dll(t), o, o,
            -i, i, o, -r1(t), o,
            i, o, o, o, -r2(t),
        ];
        DMatrix::from_row_slice(m, m, &v)
    });
    let pair = standard_form(a.clone(), &selector(k, m), b.clone(), coefficient_domain())
        .expect("chua-riaza coefficients have consistent shapes");
    let x = vec_fn(move |t: T| vec![t.sin(), (two * t).cos(), t.sin() + t.cos(), t.cos(), (two * t).sin()], m);
    let dx = vec_fn(
        move |t: T| vec![t.cos(), -two * (two * t).sin(), t.cos() - t.sin(), -t.sin(), two * (two * t).cos()],
        m,
    );
    let exact = ExactSolution { x, dx };
    let q = manufacture_rhs(&pair, &exact);
    let (g_exact, mu, l) = match case {
        ChuaCase::Index1 => (MatrixFunction::constant(selector(k, m)), 1, 3),
        ChuaCase::Index2 => (
            MatrixFunction::new(2, m, move |t: T| {
                let mut g = DMatrix::zeros(2, m);
                g[(0, 0)] = c1(t) / c2(t);
                g[(0, 1)] = T::one();
                g[(1, 2)] = T::one();
                g
            }),
            2,
            2,
        ),
        ChuaCase::Index3 => (
            MatrixFunction::new(1, m, move |t: T| {
                let mut g = DMatrix::zeros(1, m);
                g[(0, 0)] = -T::one();
                g[(0, 1)] = T::one();
                g[(0, 2)] = -ll(t) / (r2(t) * c1(t));
                g
            }),
            3,
            1,
        ),
    };
    let t0 = T::zero();
    let g_a = g_exact.eval(t0);
    let g_a_rhs = &g_a * exact.x.eval(t0);
    let name = match case {
        ChuaCase::Index1 => "chua-riaza-1",
        ChuaCase::Index2 => "chua-riaza-2",
        ChuaCase::Index3 => "chua-riaza-3",
    };
    ProblemBundle {
        name: name.into(),
        pair,
        a,
        d: selector(k, m),
        b,
        q,
        exact,
        g_exact,
        g_a,
        g_a_rhs,
        expected_mu: mu,
        expected_l: l,
        interval: (T::zero(), T::lit(5.0)),
    }
}

/// Index-2 pair in Kronecker form whose solution is `(f, f')`.
pub fn kcf_index2<T: Real>(
    f: impl Fn(T) -> T + Send + Sync + Clone + 'static,
    df: impl Fn(T) -> T + Send + Sync + Clone + 'static,
    d2f: impl Fn(T) -> T + Send + Sync + 'static,
) -> ProblemBundle<T> {
    let m = 2;
    let a = MatrixFunction::constant(DMatrix::from_row_slice(2, 1, &[T::zero(), -T::one()]));
    let b = MatrixFunction::constant(DMatrix::identity(2, 2));
    let pair = standard_form(a.clone(), &selector(1, m), b.clone(), coefficient_domain())
        .expect("kcf coefficients have consistent shapes");
    let (f1, df1) = (f.clone(), df.clone());
    let x = vec_fn(move |t| vec![f1(t), df1(t)], m);
    let dx = vec_fn(move |t| vec![df(t), d2f(t)], m);
    let q = MatrixFunction::new(m, 1, move |t| DMatrix::from_column_slice(2, 1, &[f(t), T::zero()]));
    ProblemBundle {
        name: "kcf2".into(),
        pair,
        a,
        d: selector(1, m),
        b,
        q,
        exact: ExactSolution { x, dx },
        g_exact: MatrixFunction::constant(DMatrix::zeros(0, m)),
        g_a: DMatrix::zeros(0, m),
        g_a_rhs: DVector::zeros(0),
        expected_mu: 2,
        expected_l: 0,
        interval: (T::zero(), T::one()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn residual_max(p: &ProblemBundle<f64>) -> f64 {
        (0..100)
            .map(|i| {
                let t = -1.0 + 7.0 * i as f64 / 99.0;
                let r = p.pair.residual(t, &p.exact.x.eval(t), &p.exact.dx.eval(t), &p.q.eval_vec(t));
                r.amax()
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn exact_solutions_satisfy_the_dae() {
        for name in PROBLEM_NAMES {
            let p = problem_by_name::<f64>(name).unwrap();
            assert!(residual_max(&p) <= 1e-12, "{name}");
        }
    }

    #[test]
    fn exact_derivatives_match_finite_differences() {
        for name in PROBLEM_NAMES {
            let p = problem_by_name::<f64>(name).unwrap();
            for t in [0.3, 1.7] {
                let h = 1e-6;
                let fd = (p.exact.x.eval(t + h) - p.exact.x.eval(t - h)) / (2.0 * h);
                assert!((fd - p.exact.dx.eval(t)).amax() < 1e-8, "{name}");
            }
        }
    }

    #[test]
    fn campbell_moore_initial_condition() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        let x0 = p.exact.x.eval(0.0);
        assert_eq!(x0.as_slice(), &[0.0, 1.0, 2.0, 1.0, 0.0, 0.0, 0.0]);
        assert_eq!(&p.g_a * &x0, p.g_a_rhs);
        assert_eq!((p.expected_mu, p.expected_l), (3, 4));
        assert!(campbell_moore::<f64>(0.0).is_err());
        // E = A D has a zero last column
        let e = p.pair.e.eval(0.4);
        assert!(e.column(6).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn g_exact_full_row_rank() {
        for name in PROBLEM_NAMES {
            let p = problem_by_name::<f64>(name).unwrap();
            for t in [0.0, 0.9, 2.5] {
                let g = p.g_exact.eval(t);
                assert_eq!(g.nrows(), p.expected_l);
                if p.expected_l > 0 {
                    let s = crate::subspace::singular_values(&g);
                    assert!(*s.last().unwrap() > 1e-3, "{name} t={t}");
                }
            }
        }
    }

    #[test]
    fn chua_index2_g_at_zero() {
        let p = chua_riaza::<f64>(ChuaCase::Index2);
        let g = p.g_exact.eval(0.0);
        assert!((g[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(g[(0, 1)], 1.0);
        assert_eq!(p.pair.k, 3);
    }

    #[test]
    fn kcf_simple_functions() {
        let p = kcf_index2(|_t: f64| 0.0, |_t| 0.0, |_t| 0.0);
        assert_eq!(p.exact.x.eval(0.5), DVector::zeros(2));
        let p = kcf_index2(|t: f64| t, |_t| 1.0, |_t| 0.0);
        assert_eq!(p.exact.x.eval(0.5).as_slice(), &[0.5, 1.0]);
        assert_eq!(p.q.eval_vec(0.5).as_slice(), &[0.5, 0.0]);
    }

    #[test]
    fn unknown_name() {
        assert!(problem_by_name::<f64>("nope").is_err());
    }
}
