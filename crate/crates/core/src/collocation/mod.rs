//! Overdetermined least-squares collocation on one time window.
//!
//! The differentiated components `x_1..x_k` are continuous piecewise
//! polynomials of degree `Nc`, stored by their values at Gauss–Lobatto
//! points so that neighbouring subintervals share endpoint values. The
//! algebraic components are discontinuous of degree `Nc - 1`, stored at
//! Gauss points.

mod assemble;
mod lagrange;

pub use assemble::{assemble, AssembledLsq, SolverKind};
pub use lagrange::Lagrange;

use nalgebra::{DMatrix, DVector};

use crate::error::{config, DaeError, Result};
use crate::matfun::{DaePair, ExactSolution, MatrixFunction};
use crate::scalar::Real;
use crate::specdiff::{gauss_legendre, lobatto, reference_nodes, NodeFamily};

/// Window `[t_start, t_start + H]` split into `n` equal subintervals.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGrid<T> {
    pub t_start: T,
    pub big_h: T,
    pub n: usize,
    pub h: T,
    pub nc: usize,
    pub mc: usize,
    /// Collocation points on [0, 1].
    pub theta: Vec<T>,
    pub family: NodeFamily,
}

fn to_unit<T: Real>(x: &[T]) -> Vec<T> {
    let half = T::lit(0.5);
    x.iter()
        .map(|&s| if s == T::one() { T::one() } else { half * (s + T::one()) })
        .collect()
}

/// Builds the grid and the collocation points.
pub fn build_grid<T: Real>(t_start: T, big_h: T, n: usize, nc: usize, mc: usize, family: NodeFamily) -> Result<WindowGrid<T>> {
    if !(big_h > T::zero()) {
        return config("window length must be positive");
    }
    if n == 0 {
        return config("at least one subinterval is required");
    }
    if nc == 0 {
        return config("polynomial degree Nc must be at least 1");
    }
    if mc <= nc {
        return config(format!("need Mc >= Nc + 1 collocation points, got Mc={mc}, Nc={nc}"));
    }
    let theta = to_unit(&reference_nodes::<T>(family, mc)?);
    Ok(WindowGrid { t_start, big_h, n, h: big_h / T::from_count(n), nc, mc, theta, family })
}

impl<T: Real> WindowGrid<T> {
    pub fn t_end(&self) -> T {
        self.t_start + self.big_h
    }

    /// Breakpoint `t_j`, `j = 0..=n`; the last one is exactly `t_end`.
    pub fn breakpoint(&self, j: usize) -> T {
        if j == self.n {
            self.t_end()
        } else {
            self.t_start + T::from_count(j) * self.h
        }
    }

    pub fn breakpoints(&self) -> Vec<T> {
        (0..=self.n).map(|j| self.breakpoint(j)).collect()
    }

    /// Collocation times `t_{j-1} + theta_i h`, subinterval by subinterval.
    pub fn collocation_times(&self) -> Vec<T> {
        (0..self.n)
            .flat_map(|j| {
                let t0 = self.breakpoint(j);
                self.theta.iter().map(move |&th| t0 + th * self.h).collect::<Vec<_>>()
            })
            .collect()
    }

    /// Subinterval index containing `t` (right-limit at interior breakpoints).
    pub(crate) fn locate(&self, t: T) -> Result<(usize, T)> {
        let tol = T::lit(64.0) * T::machine_eps() * (self.t_start.abs() + self.big_h.abs()).max(T::one());
        if t < self.t_start - tol || t > self.t_end() + tol {
            return Err(DaeError::Domain { t: t.as_f64(), a: self.t_start.as_f64(), b: self.t_end().as_f64() });
        }
        let raw = ((t - self.t_start) / self.h).floor().to_f64().unwrap_or(0.0);
        let mut j = if raw < 0.0 { 0 } else { (raw as usize).min(self.n - 1) };
        while j + 1 < self.n && self.breakpoint(j + 1) <= t {
            j += 1;
        }
        while j > 0 && self.breakpoint(j) > t {
            j -= 1;
        }
        Ok((j, (t - self.breakpoint(j)) / self.h))
    }
}

/// Shape functions shared by assembly and evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct Ansatz<T> {
    /// Gauss–Lobatto basis on [0, 1], `Nc + 1` points.
    pub lobatto: Lagrange<T>,
    /// Gauss basis on [0, 1], `Nc` points.
    pub gauss: Lagrange<T>,
}

impl<T: Real> Ansatz<T> {
    pub fn new(nc: usize) -> Self {
        Self {
            lobatto: Lagrange::new(to_unit(&lobatto::<T>(nc + 1))),
            gauss: Lagrange::new(to_unit(&gauss_legendre::<T>(nc).0)),
        }
    }
}

/// Piecewise polynomial solution of one window.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePolySolution<T> {
    pub grid: WindowGrid<T>,
    pub m: usize,
    pub k: usize,
    pub ansatz: Ansatz<T>,
    /// Per subinterval, `k x (Nc+1)` values at the Lobatto points.
    pub diff_values: Vec<DMatrix<T>>,
    /// Per subinterval, `(m-k) x Nc` values at the Gauss points.
    pub alg_values: Vec<DMatrix<T>>,
    /// Minimal value of the discrete functional.
    pub functional: T,
}

impl<T: Real> PiecewisePolySolution<T> {
    /// Zero function on a grid.
    pub fn zero(grid: WindowGrid<T>, m: usize, k: usize) -> Self {
        let n = grid.n;
        let nc = grid.nc;
        Self {
            ansatz: Ansatz::new(nc),
            diff_values: vec![DMatrix::zeros(k, nc + 1); n],
            alg_values: vec![DMatrix::zeros(m - k, nc); n],
            grid,
            m,
            k,
            functional: T::zero(),
        }
    }

    pub fn eval(&self, t: T) -> Result<DVector<T>> {
        let (j, th) = self.grid.locate(t)?;
        Ok(self.eval_local(j, th))
    }

    pub(crate) fn eval_local(&self, j: usize, th: T) -> DVector<T> {
        let lv = self.ansatz.lobatto.values(th);
        let gv = self.ansatz.gauss.values(th);
        let mut x = DVector::zeros(self.m);
        for c in 0..self.k {
            x[c] = (0..lv.len()).fold(T::zero(), |s, a| s + lv[a] * self.diff_values[j][(c, a)]);
        }
        for c in 0..self.m - self.k {
            x[self.k + c] = (0..gv.len()).fold(T::zero(), |s, b| s + gv[b] * self.alg_values[j][(c, b)]);
        }
        x
    }

    /// `(D x)'`, the derivative of the first `k` components.
    pub fn eval_dx_prime(&self, t: T) -> Result<DVector<T>> {
        let (j, th) = self.grid.locate(t)?;
        Ok(self.dx_local(j, th))
    }

    pub(crate) fn dx_local(&self, j: usize, th: T) -> DVector<T> {
        let ld = self.ansatz.lobatto.derivatives(th);
        let mut d = DVector::zeros(self.k);
        for c in 0..self.k {
            d[c] = (0..ld.len()).fold(T::zero(), |s, a| s + ld[a] * self.diff_values[j][(c, a)]) / self.grid.h;
        }
        d
    }

    /// Value at the window end, taken from the last subinterval.
    pub fn end_value(&self) -> DVector<T> {
        self.eval_local(self.grid.n - 1, T::one())
    }

    /// Value at the window start, taken from the first subinterval.
    pub fn start_value(&self) -> DVector<T> {
        self.eval_local(0, T::zero())
    }
}

/// Assembles and solves the window problem with the banded solver.
pub fn solve_window<T: Real>(
    grid: &WindowGrid<T>,
    pair: &DaePair<T>,
    q: &MatrixFunction<T>,
    g: &DMatrix<T>,
    g_rhs: &DVector<T>,
) -> Result<PiecewisePolySolution<T>> {
    solve_window_with(grid, pair, q, g, g_rhs, SolverKind::Banded)
}

pub fn solve_window_with<T: Real>(
    grid: &WindowGrid<T>,
    pair: &DaePair<T>,
    q: &MatrixFunction<T>,
    g: &DMatrix<T>,
    g_rhs: &DVector<T>,
    solver: SolverKind,
) -> Result<PiecewisePolySolution<T>> {
    let lsq = assemble(grid, pair, q, g, g_rhs)?;
    let (coef, functional) = lsq.solve(solver)?;
    Ok(lsq.solution_from(&coef, functional))
}

/// Error in the norm `(|x - x*|^2_{L2} + |(D(x - x*))'|^2_{L2})^{1/2}` over the window.
pub fn hd1_error<T: Real>(sol: &PiecewisePolySolution<T>, exact: &ExactSolution<T>) -> T {
    hd1_error_squared(sol, exact).sqrt()
}

pub(crate) fn hd1_error_squared<T: Real>(sol: &PiecewisePolySolution<T>, exact: &ExactSolution<T>) -> T {
    let grid = &sol.grid;
    let (xq, wq) = gauss_legendre::<T>(grid.nc + 3);
    let half = T::lit(0.5);
    let mut total = T::zero();
    for j in 0..grid.n {
        let t0 = grid.breakpoint(j);
        let mut s = T::zero();
        for (x, w) in xq.iter().zip(&wq) {
            let th = half * (*x + T::one());
            let t = t0 + th * grid.h;
            let ex = exact.x.eval(t);
            let edx = exact.dx.eval(t);
            let dv = sol.eval_local(j, th) - ex;
            let dd = sol.dx_local(j, th) - edx.rows(0, sol.k);
            s += *w * (dv.norm_squared() + dd.norm_squared());
        }
        total += s * half * grid.h;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::VectorFunction;

    #[test]
    fn grid_examples() {
        let g = build_grid(0.0, 1.0, 1, 1, 2, NodeFamily::GaussLegendre).unwrap();
        let t = g.collocation_times();
        assert!((t[0] - (3.0 - 3f64.sqrt()) / 6.0).abs() < 1e-15);
        assert!((t[1] - (3.0 + 3f64.sqrt()) / 6.0).abs() < 1e-15);
        let g = build_grid(0.0, 1.0, 2, 2, 3, NodeFamily::GaussLegendre).unwrap();
        assert_eq!(g.breakpoints(), vec![0.0, 0.5, 1.0]);
        let g = build_grid(0.0, 1.0, 1, 2, 3, NodeFamily::Radau).unwrap();
        assert_eq!(g.theta[0], 0.0);
        assert!(build_grid(0.0, 1.0, 1, 3, 3, NodeFamily::GaussLegendre).is_err());
    }

    #[test]
    fn eval_of_stored_quadratic() {
        let grid = build_grid::<f64>(0.0, 1.0, 1, 2, 3, NodeFamily::GaussLegendre).unwrap();
        let mut s = PiecewisePolySolution::zero(grid, 1, 1);
        let nodes = s.ansatz.lobatto.nodes.clone();
        for (a, x) in nodes.iter().enumerate() {
            s.diff_values[0][(0, a)] = x * x;
        }
        assert!((s.eval(0.5).unwrap()[0] - 0.25).abs() < 1e-15);
        assert!((s.eval_dx_prime(0.5).unwrap()[0] - 1.0).abs() < 1e-14);
        assert!(s.eval(1.5).is_err());
        assert_eq!(PiecewisePolySolution::<f64>::zero(build_grid(0.0, 1.0, 2, 2, 3, NodeFamily::GaussLegendre).unwrap(), 2, 1).eval(0.3).unwrap(), DVector::zeros(2));
    }

    #[test]
    fn algebraic_component_takes_right_limit() {
        let grid = build_grid(0.0, 1.0, 2, 1, 2, NodeFamily::GaussLegendre).unwrap();
        let mut s = PiecewisePolySolution::zero(grid, 1, 0);
        s.alg_values[0][(0, 0)] = 1.0;
        s.alg_values[1][(0, 0)] = 2.0;
        assert_eq!(s.eval(0.5).unwrap()[0], 2.0);
        assert_eq!(s.eval(0.49).unwrap()[0], 1.0);
    }

    #[test]
    fn hd1_closed_form() {
        // x - x* = (t, 0) on [0, 1] with k = 1: sqrt(1/3 + 1)
        let grid = build_grid::<f64>(0.0, 1.0, 1, 2, 3, NodeFamily::GaussLegendre).unwrap();
        let sol = PiecewisePolySolution::zero(grid, 2, 1);
        let exact = ExactSolution {
            x: VectorFunction::new(2, |t: f64| DVector::from_vec(vec![-t, 0.0])),
            dx: VectorFunction::new(2, |_t: f64| DVector::from_vec(vec![-1.0, 0.0])),
        };
        assert!((hd1_error(&sol, &exact) - (4.0f64 / 3.0).sqrt()).abs() < 1e-14);
        assert_eq!(hd1_error(&sol, &ExactSolution::zero(2)), 0.0);
    }

    fn observed_order(bundle: &crate::problems::ProblemBundle<f64>, big_h: f64, nc: usize, ns: &[usize]) -> (f64, Vec<f64>) {
        let g = bundle.g_exact.eval(0.0);
        let g_rhs = &g * bundle.exact.x.eval(0.0);
        let errs: Vec<f64> = ns
            .iter()
            .map(|&n| {
                let grid = build_grid(0.0, big_h, n, nc, nc + 1, NodeFamily::GaussLegendre).unwrap();
                hd1_error(&solve_window(&grid, &bundle.pair, &bundle.q, &g, &g_rhs).unwrap(), &bundle.exact)
            })
            .collect();
        let k = errs.len() - 1;
        ((errs[0] / errs[k]).ln() / ((ns[k] as f64) / (ns[0] as f64)).ln(), errs)
    }

    #[test]
    fn campbell_moore_window_order() {
        let p = crate::problems::campbell_moore::<f64>(5.0).unwrap();
        let (slope, errs) = observed_order(&p, 0.5, 4, &[10, 20, 40]);
        assert!(slope >= 1.5, "{slope} {errs:?}");
    }

    #[test]
    fn chua_index1_order() {
        let p = crate::problems::chua_riaza::<f64>(crate::problems::ChuaCase::Index1);
        let (slope, errs) = observed_order(&p, 1.0, 3, &[4, 8, 16]);
        assert!(slope >= 3.0 - 0.2, "{slope} {errs:?}");
    }
}
