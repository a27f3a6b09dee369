//! Time-dependent coefficient matrices, standard-form and adjoint pairs.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{config, contract, Result};
use crate::scalar::Real;
use crate::specdiff::DiffOperator;

type MatFn<T> = dyn Fn(T) -> DMatrix<T> + Send + Sync;
type VecFn<T> = dyn Fn(T) -> DVector<T> + Send + Sync;

/// A `rows x cols` matrix depending on time. Evaluation must be pure.
#[derive(Clone)]
pub struct MatrixFunction<T> {
    pub rows: usize,
    pub cols: usize,
    pub smoothness_hint: Option<u32>,
    f: Arc<MatFn<T>>,
}

impl<T> fmt::Debug for MatrixFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "MatrixFunction({}x{})", self.rows, self.cols)
    }
}

impl<T: Real> MatrixFunction<T> {
    pub fn new(rows: usize, cols: usize, f: impl Fn(T) -> DMatrix<T> + Send + Sync + 'static) -> Self {
        Self { rows, cols, smoothness_hint: None, f: Arc::new(f) }
    }

    pub fn constant(m: DMatrix<T>) -> Self {
        let (rows, cols) = m.shape();
        Self::new(rows, cols, move |_| m.clone())
    }

    pub fn with_smoothness(mut self, k: u32) -> Self {
        self.smoothness_hint = Some(k);
        self
    }

    pub fn eval(&self, t: T) -> DMatrix<T> {
        let v = (self.f)(t);
        debug_assert_eq!(v.shape(), (self.rows, self.cols), "matrix function returned wrong shape");
        v
    }

    pub fn sample(&self, nodes: &[T]) -> SampledMatrixStack<T> {
        SampledMatrixStack { nodes: nodes.to_vec(), values: nodes.iter().map(|&t| self.eval(t)).collect() }
    }

    /// Evaluates a column function as a vector.
    pub fn eval_vec(&self, t: T) -> DVector<T> {
        let v = self.eval(t);
        DVector::from_column_slice(v.as_slice())
    }
}

/// Matrix samples at a strictly increasing node set.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledMatrixStack<T> {
    pub nodes: Vec<T>,
    pub values: Vec<DMatrix<T>>,
}

impl<T: Real> SampledMatrixStack<T> {
    pub fn new(nodes: Vec<T>, values: Vec<DMatrix<T>>) -> Result<Self> {
        if nodes.len() != values.len() {
            return contract("node and value counts differ");
        }
        if nodes.windows(2).any(|w| !(w[0] < w[1])) {
            return contract("nodes must be strictly increasing");
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.shape() != first.shape()) {
                return contract("samples must share one shape");
            }
        }
        Ok(Self { nodes, values })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// The coefficient pair of `E x' + F x = q` on `[a, b]`.
///
/// Columns `k..m` of `E` are zero, i.e. `E = A D` with `D = [I_k, 0]`.
#[derive(Debug, Clone)]
pub struct DaePair<T> {
    pub e: MatrixFunction<T>,
    pub f: MatrixFunction<T>,
    pub m: usize,
    pub k: usize,
    pub interval: (T, T),
}

impl<T: Real> DaePair<T> {
    pub fn new(e: MatrixFunction<T>, f: MatrixFunction<T>, k: usize, interval: (T, T)) -> Result<Self> {
        let m = e.rows;
        if e.cols != m || f.rows != m || f.cols != m {
            return config(format!(
                "E and F must be square of equal size, got {}x{} and {}x{}",
                e.rows, e.cols, f.rows, f.cols
            ));
        }
        if k > m {
            return config("k exceeds m");
        }
        if !(interval.0 < interval.1) {
            return config("interval must satisfy a < b");
        }
        Ok(Self { e, f, m, k, interval })
    }

    pub fn sample(&self, nodes: &[T]) -> SampledPair<T> {
        SampledPair { e: self.e.sample(nodes), f: self.f.sample(nodes) }
    }

    /// `E x' + F x - q` at one time.
    pub fn residual(&self, t: T, x: &DVector<T>, dx: &DVector<T>, q: &DVector<T>) -> DVector<T> {
        self.e.eval(t) * dx + self.f.eval(t) * x - q
    }
}

/// A pair sampled on the nodes of a differentiation window.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledPair<T> {
    pub e: SampledMatrixStack<T>,
    pub f: SampledMatrixStack<T>,
}

/// Builds `E = A D`, `F = B` for `D = [I_k, 0]`.
pub fn standard_form<T: Real>(
    a: MatrixFunction<T>,
    d: &DMatrix<T>,
    b: MatrixFunction<T>,
    interval: (T, T),
) -> Result<DaePair<T>> {
    let (k, m) = d.shape();
    if a.rows != m || a.cols != k {
        return config(format!("A must be {m}x{k}, got {}x{}", a.rows, a.cols));
    }
    if b.rows != m || b.cols != m {
        return config(format!("B must be {m}x{m}, got {}x{}", b.rows, b.cols));
    }
    for i in 0..k {
        for j in 0..m {
            let want = if i == j { T::one() } else { T::zero() };
            if d[(i, j)] != want {
                return config("D must be [I_k, 0]");
            }
        }
    }
    let e = MatrixFunction::new(m, m, move |t| {
        let av = a.eval(t);
        let mut e = DMatrix::zeros(m, m);
        e.columns_mut(0, k).copy_from(&av);
        e
    });
    DaePair::new(e, b, k, interval)
}

/// Samples the adjoint pair `(-E^T, F^T - (E^T)')` on the nodes of `d`,
/// with the derivative taken by `d`.
pub fn adjoint_pair<T: Real>(pair: &DaePair<T>, d: &DiffOperator<T>) -> SampledPair<T> {
    adjoint_of_samples(&pair.sample(&d.nodes), d)
}

/// Adjoint of an already sampled pair.
pub fn adjoint_of_samples<T: Real>(s: &SampledPair<T>, d: &DiffOperator<T>) -> SampledPair<T> {
    let et: Vec<DMatrix<T>> = s.e.values.iter().map(|e| e.transpose()).collect();
    let det = d.apply_values(&et);
    let nodes = s.e.nodes.clone();
    let e = et.iter().map(|v| -v).collect();
    let f = s.f.values.iter().zip(&det).map(|(f, de)| f.transpose() - de).collect();
    SampledPair {
        e: SampledMatrixStack { nodes: nodes.clone(), values: e },
        f: SampledMatrixStack { nodes, values: f },
    }
}

/// A vector-valued function of time.
#[derive(Clone)]
pub struct VectorFunction<T> {
    pub dim: usize,
    f: Arc<VecFn<T>>,
}

impl<T> fmt::Debug for VectorFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorFunction({})", self.dim)
    }
}

impl<T: Real> VectorFunction<T> {
    pub fn new(dim: usize, f: impl Fn(T) -> DVector<T> + Send + Sync + 'static) -> Self {
        Self { dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::new(dim, move |_| DVector::zeros(dim))
    }

    pub fn eval(&self, t: T) -> DVector<T> {
        (self.f)(t)
    }
}

/// A solution together with its derivative.
#[derive(Debug, Clone)]
pub struct ExactSolution<T> {
    pub x: VectorFunction<T>,
    pub dx: VectorFunction<T>,
}

impl<T: Real> ExactSolution<T> {
    pub fn zero(dim: usize) -> Self {
        Self { x: VectorFunction::zero(dim), dx: VectorFunction::zero(dim) }
    }
}

/// `q(t) = E(t) dx(t) + F(t) x(t)` as an `m x 1` matrix function.
pub fn manufacture_rhs<T: Real>(pair: &DaePair<T>, exact: &ExactSolution<T>) -> MatrixFunction<T> {
    let e = pair.e.clone();
    let f = pair.f.clone();
    let ex = exact.clone();
    MatrixFunction::new(pair.m, 1, move |t| {
        let v = e.eval(t) * ex.dx.eval(t) + f.eval(t) * ex.x.eval(t);
        DMatrix::from_column_slice(v.len(), 1, v.as_slice())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specdiff::{DiffKind, NodeFamily, Window};

    fn cheb(m: usize, c: f64, tau: f64) -> DiffOperator<f64> {
        DiffOperator::new(NodeFamily::Chebyshev2, DiffKind::Interpolatory, m, m - 1, Window::new(c, tau)).unwrap()
    }

    #[test]
    fn identity_standard_form() {
        let i2 = DMatrix::<f64>::identity(2, 2);
        let p = standard_form(MatrixFunction::constant(i2.clone()), &i2, MatrixFunction::constant(i2.clone()), (0.0, 1.0))
            .unwrap();
        assert_eq!(p.e.eval(0.3), i2);
        assert_eq!(p.f.eval(0.3), i2);
        assert_eq!((p.m, p.k), (2, 2));
    }

    #[test]
    fn kcf_standard_form() {
        let a = DMatrix::from_row_slice(2, 1, &[0.0, -1.0]);
        let d = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let p = standard_form(MatrixFunction::constant(a), &d, MatrixFunction::constant(DMatrix::identity(2, 2)), (0.0, 1.0))
            .unwrap();
        assert_eq!(p.e.eval(0.0), DMatrix::from_row_slice(2, 2, &[0.0, 0.0, -1.0, 0.0]));
    }

    #[test]
    fn standard_form_rejects_bad_shapes() {
        let d = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let a = MatrixFunction::constant(DMatrix::<f64>::zeros(3, 1));
        let b = MatrixFunction::constant(DMatrix::<f64>::identity(2, 2));
        assert!(standard_form(a, &d, b.clone(), (0.0, 1.0)).is_err());
        let d2 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        let a = MatrixFunction::constant(DMatrix::<f64>::zeros(2, 1));
        assert!(standard_form(a, &d2, b, (0.0, 1.0)).is_err());
    }

    #[test]
    fn adjoint_of_constant_pair() {
        let e = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        let f = DMatrix::from_row_slice(2, 2, &[3.0, 4.0, 5.0, 6.0]);
        let p = DaePair::new(MatrixFunction::constant(e.clone()), MatrixFunction::constant(f.clone()), 2, (0.0, 1.0)).unwrap();
        let d = cheb(5, 0.2, 0.1);
        let adj = adjoint_pair(&p, &d);
        for i in 0..5 {
            assert_eq!(adj.e.values[i], -e.transpose());
            assert_eq!(adj.f.values[i], f.transpose());
        }
        // twice: -(-E^T)^T = E
        let back = adjoint_of_samples(&adj, &d);
        assert_eq!(back.e.values[0], e);
    }

    #[test]
    fn adjoint_linear_coefficient() {
        let p = DaePair::new(
            MatrixFunction::new(1, 1, |t: f64| DMatrix::from_element(1, 1, t)),
            MatrixFunction::constant(DMatrix::zeros(1, 1)),
            1,
            (0.0, 1.0),
        )
        .unwrap();
        let adj = adjoint_pair(&p, &cheb(3, 0.4, 0.2));
        for v in &adj.f.values {
            assert!((v[(0, 0)] + 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_solution_gives_zero_rhs() {
        let p = DaePair::new(
            MatrixFunction::new(2, 2, |t: f64| DMatrix::from_element(2, 2, t)),
            MatrixFunction::constant(DMatrix::identity(2, 2)),
            2,
            (0.0, 1.0),
        )
        .unwrap();
        let q = manufacture_rhs(&p, &ExactSolution::zero(2));
        assert_eq!(q.eval(0.7), DMatrix::zeros(2, 1));
    }

    #[test]
    fn stack_validation() {
        assert!(SampledMatrixStack::new(vec![0.0, 0.0], vec![DMatrix::<f64>::zeros(1, 1); 2]).is_err());
        assert!(SampledMatrixStack::new(vec![0.0], vec![DMatrix::<f64>::zeros(1, 1); 2]).is_err());
        assert!(SampledMatrixStack::new(vec![0.0, 1.0], vec![DMatrix::<f64>::zeros(1, 1); 2]).is_ok());
    }
}
