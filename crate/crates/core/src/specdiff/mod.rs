//! Spectral and least-squares differentiation on short windows.
//!
//! A [`DiffOperator`] holds M nodes on a window `[c, c+tau]` and the
//! coefficient matrix of the derivative of the polynomial fitted through
//! them. The matrix is stored and applied in nullsum form, so constant data
//! differentiates to exactly zero.

mod nodes;

pub use nodes::{
    chebyshev2, equidistant, gauss_jacobi, gauss_legendre, lobatto, radau_left, reference_nodes,
    NodeFamily,
};

use nalgebra::DMatrix;

use crate::error::{config, contract, DaeError, Result};
use crate::matfun::SampledMatrixStack;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DiffKind {
    /// Degree M-1 interpolation.
    Interpolatory,
    /// Degree N < M-1 least-squares fit in the Chebyshev basis.
    LeastSquares,
}

impl DiffKind {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "interp" | "interpolatory" | "spectral" => Some(Self::Interpolatory),
            "lsq" | "least-squares" | "least_squares" => Some(Self::LeastSquares),
            _ => None,
        }
    }
}

/// Placement of the differentiation window relative to the evaluation time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WindowMode {
    Central,
    Left,
    Right,
}

impl WindowMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "central" => Some(Self::Central),
            "left" => Some(Self::Left),
            "right" => Some(Self::Right),
            _ => None,
        }
    }
}

/// The interval `[c, c+tau]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window<T> {
    pub c: T,
    pub tau: T,
}

impl<T: Real> Window<T> {
    pub fn new(c: T, tau: T) -> Self {
        Self { c, tau }
    }

    pub fn end(&self) -> T {
        self.c + self.tau
    }

    /// Maps reference points on [-1, 1] into the window.
    pub fn map(&self, reference: &[T]) -> Vec<T> {
        let half = self.tau / T::lit(2.0);
        reference
            .iter()
            .map(|&s| {
                if s == T::one() {
                    self.end()
                } else {
                    half * (s + T::one()) + self.c
                }
            })
            .collect()
    }
}

/// Derivative matrix on a node window.
#[derive(Debug, Clone)]
pub struct DiffOperator<T> {
    pub kind: DiffKind,
    /// Polynomial degree N.
    pub degree: usize,
    pub family: Option<NodeFamily>,
    pub window: Window<T>,
    pub ref_nodes: Vec<T>,
    pub nodes: Vec<T>,
    /// Unscaled coefficients (derivative on [-1, 1]), zero row sums.
    pub coef: DMatrix<T>,
    /// `coef` scaled by 2/tau.
    pub dmat: DMatrix<T>,
}

/// Barycentric weights `1 / prod_{j != i} (x_i - x_j)`, normalized to max modulus 1.
pub fn barycentric_weights<T: Real>(x: &[T]) -> Result<Vec<T>> {
    let m = x.len();
    let mut w = vec![T::one(); m];
    for i in 0..m {
        for j in 0..m {
            if i != j {
                let d = x[i] - x[j];
                if d == T::zero() {
                    return Err(DaeError::Degenerate(format!(
                        "duplicate nodes at positions {i} and {j}"
                    )));
                }
                w[i] *= d;
            }
        }
    }
    let mut w: Vec<T> = w.into_iter().map(|p| T::one() / p).collect();
    let scale = w.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    for v in &mut w {
        *v /= scale;
    }
    Ok(w)
}

/// Closed-form weights of the increasing Chebyshev2 set.
pub fn chebyshev2_weights<T: Real>(m: usize) -> Vec<T> {
    (1..=m)
        .map(|i| {
            let delta = if i == 1 || i == m { T::lit(0.5) } else { T::one() };
            if (m - i) % 2 == 0 {
                delta
            } else {
                -delta
            }
        })
        .collect()
}

/// Values `T_0..T_n` and derivatives of the Chebyshev polynomials at `x`.
pub fn chebyshev_t<T: Real>(n: usize, x: T) -> (Vec<T>, Vec<T>) {
    let two = T::lit(2.0);
    let mut t = vec![T::one(); n + 1];
    // second-kind values U_0..U_{n-1}
    let mut u = vec![T::one(); n.max(1)];
    if n >= 1 {
        t[1] = x;
    }
    for j in 2..=n {
        t[j] = two * x * t[j - 1] - t[j - 2];
    }
    if n >= 2 {
        u[1] = two * x;
    }
    for j in 2..n {
        u[j] = two * x * u[j - 1] - u[j - 2];
    }
    let mut dt = vec![T::zero(); n + 1];
    for j in 1..=n {
        dt[j] = T::from_count(j) * u[j - 1];
    }
    (t, dt)
}

fn nullsum_from_weights<T: Real>(x: &[T], w: &[T]) -> DMatrix<T> {
    let m = x.len();
    let mut d = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            if i != j {
                d[(i, j)] = (w[j] / w[i]) / (x[i] - x[j]);
            }
        }
    }
    fix_diagonal(&mut d);
    d
}

fn fix_diagonal<T: Real>(d: &mut DMatrix<T>) {
    for i in 0..d.nrows() {
        let mut s = T::zero();
        for j in 0..d.ncols() {
            if i != j {
                s += d[(i, j)];
            }
        }
        d[(i, i)] = -s;
    }
}

fn is_chebyshev2<T: Real>(x: &[T]) -> bool {
    let c = chebyshev2::<T>(x.len());
    c.iter().zip(x).all(|(a, b)| a == b)
}

impl<T: Real> DiffOperator<T> {
    /// Interpolatory operator (degree M-1) on arbitrary distinct reference nodes.
    pub fn interpolatory(ref_nodes: Vec<T>, window: Window<T>) -> Result<Self> {
        check_window(&window)?;
        if ref_nodes.len() < 2 {
            return config("differentiation needs at least 2 nodes");
        }
        let w = if is_chebyshev2(&ref_nodes) {
            chebyshev2_weights(ref_nodes.len())
        } else {
            barycentric_weights(&ref_nodes)?
        };
        let coef = nullsum_from_weights(&ref_nodes, &w);
        Ok(Self::assemble(DiffKind::Interpolatory, ref_nodes.len() - 1, ref_nodes, window, coef))
    }

    /// Least-squares operator of degree `n` in the Chebyshev basis.
    pub fn least_squares(ref_nodes: Vec<T>, n: usize, window: Window<T>) -> Result<Self> {
        check_window(&window)?;
        let m = ref_nodes.len();
        if n < 1 || m <= n {
            return config(format!("least-squares differentiation needs M > N >= 1, got M={m}, N={n}"));
        }
        barycentric_weights(&ref_nodes)?;
        let mut v = DMatrix::zeros(m, n + 1);
        let mut vd = DMatrix::zeros(m, n + 1);
        for (i, &x) in ref_nodes.iter().enumerate() {
            let (t, dt) = chebyshev_t(n, x);
            for j in 0..=n {
                v[(i, j)] = t[j];
                vd[(i, j)] = dt[j];
            }
        }
        let qr = v.qr();
        let r = qr.r();
        let qt = qr.q().transpose();
        let pinv = r
            .solve_upper_triangular(&qt)
            .ok_or_else(|| DaeError::Degenerate("singular Vandermonde matrix".into()))?;
        let mut coef = vd * pinv;
        fix_diagonal(&mut coef);
        Ok(Self::assemble(DiffKind::LeastSquares, n, ref_nodes, window, coef))
    }

    /// Operator for a node family. `degree` is ignored for interpolatory operators.
    pub fn new(family: NodeFamily, kind: DiffKind, m: usize, degree: usize, window: Window<T>) -> Result<Self> {
        let x = reference_nodes(family, m)?;
        let mut op = match kind {
            DiffKind::Interpolatory => Self::interpolatory(x, window)?,
            DiffKind::LeastSquares => Self::least_squares(x, degree, window)?,
        };
        op.family = Some(family);
        Ok(op)
    }

    fn assemble(kind: DiffKind, degree: usize, ref_nodes: Vec<T>, window: Window<T>, coef: DMatrix<T>) -> Self {
        let nodes = window.map(&ref_nodes);
        let s = T::lit(2.0) / window.tau;
        let dmat = coef.map(|v| v * s);
        Self {
            kind,
            degree,
            family: None,
            window,
            ref_nodes,
            nodes,
            coef,
            dmat,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Replaces node `idx` by `t` exactly (used to make the evaluation time a node).
    pub fn snap_node(mut self, idx: usize, t: T) -> Self {
        self.nodes[idx] = t;
        self
    }

    /// Derivative of scalar samples in nullsum form.
    pub fn apply_scalar(&self, f: &[T]) -> Vec<T> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut s = T::zero();
                for j in 0..m {
                    if j != i {
                        s += self.dmat[(i, j)] * (f[j] - f[i]);
                    }
                }
                s
            })
            .collect()
    }

    /// Entrywise derivative of matrix samples in nullsum form.
    pub fn apply_values(&self, values: &[DMatrix<T>]) -> Vec<DMatrix<T>> {
        let m = self.len();
        assert_eq!(values.len(), m, "sample count does not match node count");
        (0..m)
            .map(|i| {
                let mut out = DMatrix::zeros(values[i].nrows(), values[i].ncols());
                for j in 0..m {
                    if j != i {
                        let dij = self.dmat[(i, j)];
                        out.zip_zip_apply(&values[j], &values[i], |o, vj, vi| *o += dij * (vj - vi));
                    }
                }
                out
            })
            .collect()
    }

    /// Applies the operator to a stack sampled on exactly this operator's nodes.
    pub fn apply(&self, stack: &SampledMatrixStack<T>) -> Result<SampledMatrixStack<T>> {
        if stack.nodes != self.nodes {
            return contract("stack nodes differ from operator nodes");
        }
        Ok(SampledMatrixStack {
            nodes: stack.nodes.clone(),
            values: self.apply_values(&stack.values),
        })
    }

    /// Row-sum norm of the unscaled coefficients, diagonal included.
    pub fn inf_norm(&self) -> T {
        row_sum_norm(&self.coef)
    }
}

fn check_window<T: Real>(w: &Window<T>) -> Result<()> {
    if !(w.tau > T::zero()) {
        return config(format!("window width must be positive, got {}", w.tau));
    }
    Ok(())
}

pub(crate) fn row_sum_norm<T: Real>(a: &DMatrix<T>) -> T {
    a.row_iter()
        .map(|r| r.iter().fold(T::zero(), |s, v| s + v.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundKind {
    /// `inf_norm <= bound` (Chebyshev2).
    Upper,
    /// `inf_norm >= bound` (equidistant).
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormBoundReport<T> {
    pub inf_norm: T,
    pub bound: T,
    pub kind: BoundKind,
    pub satisfied: bool,
}

/// Checks the growth bound of the coefficient matrix: 16(M-1)^2 from above for
/// Chebyshev2 nodes, (2^(M-1)-1)/2 from below for equidistant nodes.
pub fn norm_bound_report<T: Real>(d: &DiffOperator<T>) -> Result<NormBoundReport<T>> {
    let m = d.len();
    let inf_norm = d.inf_norm();
    let family = match d.family {
        Some(f) => f,
        None if is_chebyshev2(&d.ref_nodes) => NodeFamily::Chebyshev2,
        None if d.ref_nodes == equidistant::<T>(m) => NodeFamily::Equidistant,
        None => return contract("norm bound only defined for Chebyshev2 or equidistant nodes"),
    };
    match family {
        NodeFamily::Chebyshev2 => {
            let bound = T::lit(16.0) * T::from_count((m - 1) * (m - 1));
            Ok(NormBoundReport { inf_norm, bound, kind: BoundKind::Upper, satisfied: inf_norm <= bound })
        }
        NodeFamily::Equidistant => {
            let bound = (T::lit(2.0).powi(m as i32 - 1) - T::one()) / T::lit(2.0);
            Ok(NormBoundReport { inf_norm, bound, kind: BoundKind::Lower, satisfied: inf_norm >= bound })
        }
        _ => contract("norm bound only defined for Chebyshev2 or equidistant nodes"),
    }
}

/// Where a differentiation window was placed for an evaluation time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement<T> {
    pub window: Window<T>,
    pub mode: WindowMode,
    /// Index of the node that coincides with the evaluation time.
    pub anchor: usize,
}

/// Places a window of width `tau` around `t_bar` inside `[a, b]`.
///
/// A central window is used when requested and it fits; otherwise the
/// window becomes one-sided (left if there is room to the right of
/// `t_bar`, right otherwise). The family must have a node at the anchor
/// position (midpoint for central, endpoint for one-sided).
pub fn place_window<T: Real>(
    t_bar: T,
    tau: T,
    mode: WindowMode,
    domain: (T, T),
    family: NodeFamily,
    m: usize,
) -> Result<Placement<T>> {
    let (a, b) = domain;
    if !(tau > T::zero()) {
        return config("window width must be positive");
    }
    if t_bar < a || t_bar > b {
        return Err(DaeError::Domain { t: t_bar.as_f64(), a: a.as_f64(), b: b.as_f64() });
    }
    let half = tau / T::lit(2.0);
    let fits = |c: T| c >= a && c + tau <= b;
    let chosen = match mode {
        WindowMode::Central if fits(t_bar - half) => WindowMode::Central,
        WindowMode::Right if fits(t_bar - tau) => WindowMode::Right,
        _ if fits(t_bar) => WindowMode::Left,
        _ if fits(t_bar - tau) => WindowMode::Right,
        _ => {
            return config(format!(
                "window of width {tau} does not fit in [{a}, {b}] at t = {t_bar}"
            ))
        }
    };
    let x = reference_nodes::<T>(family, m)?;
    let (c, target) = match chosen {
        WindowMode::Central => (t_bar - half, T::zero()),
        WindowMode::Left => (t_bar, -T::one()),
        WindowMode::Right => (t_bar - tau, T::one()),
    };
    let anchor = x
        .iter()
        .position(|&s| (s - target).abs() <= T::lit(1e-14))
        .ok_or_else(|| {
            DaeError::Config(format!(
                "{} nodes with M = {m} have no node at the {:?} anchor position",
                family.name(),
                chosen
            ))
        })?;
    Ok(Placement { window: Window::new(c, tau), mode: chosen, anchor })
}
