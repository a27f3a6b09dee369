//! Assembly of the discrete functional and its least-squares solution.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::{Ansatz, PiecewisePolySolution, WindowGrid};
use crate::error::{config, DaeError, Result};
use crate::matfun::{DaePair, MatrixFunction};
use crate::scalar::Real;
use crate::specdiff::gauss_legendre;
use crate::subspace::{svd, Svd};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolverKind {
    /// Staircase Householder QR exploiting the one-subinterval coupling.
    Banded,
    /// Dense SVD of the whole design matrix.
    Dense,
}

/// The least-squares system, stored subinterval by subinterval.
///
/// Unknowns are ordered `e_0, (int_1, e_1), ..., (int_n, e_n)` where `e_j`
/// holds the differentiated components at breakpoint `t_j` and `int_j` the
/// remaining values of subinterval `j`. Block `j` acts on `(e_{j-1}, int_j, e_j)`.
#[derive(Debug, Clone)]
pub struct AssembledLsq<T> {
    pub grid: WindowGrid<T>,
    pub m: usize,
    pub k: usize,
    /// Interior unknowns per subinterval.
    pub n_int: usize,
    /// Weighted residual rows, `(Mc m) x (2k + n_int)` each.
    pub blocks: Vec<DMatrix<T>>,
    pub block_rhs: Vec<DVector<T>>,
    /// Condition rows acting on the unknowns of the first subinterval.
    pub ic: DMatrix<T>,
    pub ic_rhs: DVector<T>,
    /// Residual rows are scaled by `sqrt(h/Mc) (L^T ⊗ I_m)` with `L L^T = Mc * Gram`.
    pub weight: DMatrix<T>,
    ansatz: Ansatz<T>,
}

/// Exact Gram matrix of the Lagrange basis at `theta` on [0, 1].
fn gram<T: Real>(theta: &[T]) -> DMatrix<T> {
    let basis = super::Lagrange::new(theta.to_vec());
    let mc = theta.len();
    let (xq, wq) = gauss_legendre::<T>(mc + 1);
    let half = T::lit(0.5);
    let mut g = DMatrix::zeros(mc, mc);
    for (x, w) in xq.iter().zip(&wq) {
        let v = basis.values(half * (*x + T::one()));
        for i in 0..mc {
            for j in 0..mc {
                g[(i, j)] += half * *w * v[i] * v[j];
            }
        }
    }
    g
}

impl<T: Real> AssembledLsq<T> {
    pub fn rows(&self) -> usize {
        self.blocks.iter().map(|b| b.nrows()).sum::<usize>() + self.ic.nrows()
    }

    pub fn cols(&self) -> usize {
        self.k + self.grid.n * (self.k + self.n_int)
    }

    fn local_width(&self) -> usize {
        2 * self.k + self.n_int
    }

    /// Global column of local column `c` of subinterval `j` (0-based).
    fn global_col(&self, j: usize, c: usize) -> usize {
        j * (self.k + self.n_int) + c
    }

    /// Dense design matrix (residual rows first, then condition rows) and right-hand side.
    pub fn to_dense(&self) -> (DMatrix<T>, DVector<T>) {
        let rows = self.rows();
        let cols = self.cols();
        let mut a = DMatrix::zeros(rows, cols);
        let mut b = DVector::zeros(rows);
        let w = self.local_width();
        let mut r0 = 0;
        for (j, (blk, rhs)) in self.blocks.iter().zip(&self.block_rhs).enumerate() {
            for r in 0..blk.nrows() {
                for c in 0..w {
                    a[(r0 + r, self.global_col(j, c))] = blk[(r, c)];
                }
                b[r0 + r] = rhs[r];
            }
            r0 += blk.nrows();
        }
        for r in 0..self.ic.nrows() {
            for c in 0..w {
                a[(r0 + r, self.global_col(0, c))] = self.ic[(r, c)];
            }
            b[r0 + r] = self.ic_rhs[r];
        }
        (a, b)
    }

    /// Minimizer and minimal functional value.
    pub fn solve(&self, kind: SolverKind) -> Result<(DVector<T>, T)> {
        if self.rows() < self.cols() {
            return Err(DaeError::Underdetermined { rows: self.rows(), cols: self.cols() });
        }
        match kind {
            SolverKind::Banded => self.solve_banded(),
            SolverKind::Dense => self.solve_dense(),
        }
    }

    fn singular(&self, diag: &[T]) -> Result<()> {
        let big = diag.iter().fold(T::zero(), |a, v| a.max(v.abs()));
        let small = diag.iter().fold(T::lit(f64::INFINITY), |a, v| a.min(v.abs()));
        let tol = T::machine_eps() * T::from_count(self.rows()) * big;
        if !(small > tol) {
            return Err(DaeError::SingularWindow { window: 0, sigma_min: small.as_f64() });
        }
        Ok(())
    }

    fn solve_dense(&self) -> Result<(DVector<T>, T)> {
        let (a, b) = self.to_dense();
        let Svd { u, s, vt } = svd(&a);
        let smax = s[0];
        let smin = s[s.len() - 1];
        if !(smin > T::machine_eps() * T::from_count(self.rows()) * smax) {
            return Err(DaeError::SingularWindow { window: 0, sigma_min: smin.as_f64() });
        }
        let n = s.len();
        let mut y = u.columns(0, n).transpose() * &b;
        for i in 0..n {
            y[i] /= s[i];
        }
        let x = vt.transpose() * y;
        let r = &a * &x - b;
        Ok((x, r.norm_squared()))
    }

    fn solve_banded(&self) -> Result<(DVector<T>, T)> {
        let k = self.k;
        let ni = self.n_int;
        let w = self.local_width();
        let n = self.grid.n;
        let lead = k + ni;
        // per step: R rows for (e_{j-1}, int_j) over all local columns, and rhs
        let mut steps: Vec<(DMatrix<T>, DVector<T>)> = Vec::with_capacity(n);
        let mut carry = DMatrix::<T>::zeros(0, w);
        let mut carry_rhs = DVector::<T>::zeros(0);
        let mut residual = T::zero();
        let mut diag = Vec::new();
        for j in 0..n {
            let extra = if j == 0 { self.ic.nrows() } else { 0 };
            let rows = carry.nrows() + extra + self.blocks[j].nrows();
            let mut s = DMatrix::zeros(rows, w);
            let mut rhs = DVector::zeros(rows);
            let mut r0 = 0;
            for r in 0..carry.nrows() {
                s.row_mut(r).copy_from(&carry.row(r));
                rhs[r] = carry_rhs[r];
            }
            r0 += carry.nrows();
            if j == 0 {
                s.view_mut((r0, 0), (extra, w)).copy_from(&self.ic);
                rhs.rows_mut(r0, extra).copy_from(&self.ic_rhs);
                r0 += extra;
            }
            s.view_mut((r0, 0), (self.blocks[j].nrows(), w)).copy_from(&self.blocks[j]);
            rhs.rows_mut(r0, self.blocks[j].nrows()).copy_from(&self.block_rhs[j]);

            let qr = s.qr();
            let r = qr.r();
            qr.q_tr_mul(&mut rhs);
            residual += rhs.rows(w, rows - w).norm_squared();
            for i in 0..lead {
                diag.push(r[(i, i)]);
            }
            steps.push((r.rows(0, lead).into_owned(), rhs.rows(0, lead).into_owned()));
            // rows lead..w act on e_j only; shift them to the first k columns
            carry = DMatrix::zeros(k, w);
            carry.view_mut((0, 0), (k, k)).copy_from(&r.view((lead, lead), (k, k)));
            carry_rhs = rhs.rows(lead, k).into_owned();
        }
        let rc = carry.view((0, 0), (k, k)).upper_triangle();
        for i in 0..k {
            diag.push(rc[(i, i)]);
        }
        self.singular(&diag)?;
        let mut x = DVector::zeros(self.cols());
        let mut e_next = rc
            .solve_upper_triangular(&carry_rhs)
            .ok_or(DaeError::SingularWindow { window: 0, sigma_min: 0.0 })?;
        for j in (0..n).rev() {
            let (r, rhs) = &steps[j];
            x.rows_mut(self.global_col(j, lead), k).copy_from(&e_next);
            let r11 = r.view((0, 0), (lead, lead)).upper_triangle();
            let b = rhs - r.view((0, lead), (lead, k)) * &e_next;
            let y = r11
                .solve_upper_triangular(&b)
                .ok_or(DaeError::SingularWindow { window: 0, sigma_min: 0.0 })?;
            x.rows_mut(self.global_col(j, 0), lead).copy_from(&y);
            e_next = y.rows(0, k).into_owned();
        }
        Ok((x, residual))
    }

    /// Builds the piecewise polynomial from a coefficient vector.
    pub fn solution_from(&self, x: &DVector<T>, functional: T) -> PiecewisePolySolution<T> {
        let k = self.k;
        let nc = self.grid.nc;
        let na = self.m - k;
        let mut sol = PiecewisePolySolution::zero(self.grid.clone(), self.m, k);
        for j in 0..self.grid.n {
            let base = self.global_col(j, 0);
            for c in 0..k {
                sol.diff_values[j][(c, 0)] = x[base + c];
                sol.diff_values[j][(c, nc)] = x[base + k + self.n_int + c];
                for a in 1..nc {
                    sol.diff_values[j][(c, a)] = x[base + k + c * (nc - 1) + (a - 1)];
                }
            }
            for c in 0..na {
                for b in 0..nc {
                    sol.alg_values[j][(c, b)] = x[base + k + k * (nc - 1) + c * nc + b];
                }
            }
        }
        sol.functional = functional;
        sol.ansatz = self.ansatz.clone();
        sol
    }
}

/// Assembles the discrete functional of the window problem
/// `E x' + F x = q`, `G x(t_start) = g`.
pub fn assemble<T: Real>(
    grid: &WindowGrid<T>,
    pair: &DaePair<T>,
    q: &MatrixFunction<T>,
    g: &DMatrix<T>,
    g_rhs: &DVector<T>,
) -> Result<AssembledLsq<T>> {
    let m = pair.m;
    let k = pair.k;
    if q.rows != m || q.cols != 1 {
        return config(format!("right-hand side must be {m}x1"));
    }
    if g.ncols() != m || g.nrows() != g_rhs.len() {
        return config("condition matrix and right-hand side have inconsistent shapes");
    }
    let nc = grid.nc;
    let mc = grid.mc;
    let na = m - k;
    let n_int = k * (nc - 1) + na * nc;
    let w = 2 * k + n_int;
    let ansatz = Ansatz::new(nc);

    let rows = grid.n * mc * m + g.nrows();
    let cols = k + grid.n * (k + n_int);
    if rows < cols {
        return Err(DaeError::Underdetermined { rows, cols });
    }

    let gram = gram(&grid.theta);
    let chol = Cholesky::new(gram * T::from_count(mc))
        .ok_or_else(|| DaeError::Degenerate("Gram matrix of the collocation points is not positive definite".into()))?;
    let weight = chol.l().transpose() * (grid.h / T::from_count(mc)).sqrt();

    // local column of Lobatto value a of differentiated component c
    let dcol = |c: usize, a: usize| -> usize {
        if a == 0 {
            c
        } else if a == nc {
            k + n_int + c
        } else {
            k + c * (nc - 1) + (a - 1)
        }
    };
    let acol = |c: usize, b: usize| -> usize { k + k * (nc - 1) + c * nc + b };

    let lv: Vec<Vec<T>> = grid.theta.iter().map(|&th| ansatz.lobatto.values(th)).collect();
    let ld: Vec<Vec<T>> = grid.theta.iter().map(|&th| ansatz.lobatto.derivatives(th)).collect();
    let gv: Vec<Vec<T>> = grid.theta.iter().map(|&th| ansatz.gauss.values(th)).collect();

    let mut blocks = Vec::with_capacity(grid.n);
    let mut block_rhs = Vec::with_capacity(grid.n);
    for j in 0..grid.n {
        let t0 = grid.breakpoint(j);
        let mut raw = DMatrix::zeros(mc * m, w);
        let mut rhs = DVector::zeros(mc * m);
        for i in 0..mc {
            let t = t0 + grid.theta[i] * grid.h;
            let e = pair.e.eval(t);
            let f = pair.f.eval(t);
            let qv = q.eval(t);
            for r in 0..m {
                let row = i * m + r;
                for c in 0..k {
                    for a in 0..=nc {
                        raw[(row, dcol(c, a))] += e[(r, c)] * ld[i][a] / grid.h + f[(r, c)] * lv[i][a];
                    }
                }
                for c in 0..na {
                    for b in 0..nc {
                        raw[(row, acol(c, b))] += f[(r, k + c)] * gv[i][b];
                    }
                }
                rhs[row] = qv[(r, 0)];
            }
        }
        let mut blk = DMatrix::zeros(mc * m, w);
        let mut brhs = DVector::zeros(mc * m);
        for i in 0..mc {
            for i2 in 0..mc {
                let wt = weight[(i, i2)];
                if wt == T::zero() {
                    continue;
                }
                for r in 0..m {
                    let src = i2 * m + r;
                    let dst = i * m + r;
                    for c in 0..w {
                        blk[(dst, c)] += wt * raw[(src, c)];
                    }
                    brhs[dst] += wt * rhs[src];
                }
            }
        }
        blocks.push(blk);
        block_rhs.push(brhs);
    }

    let l = g.nrows();
    let mut ic = DMatrix::zeros(l, w);
    let g0 = ansatz.gauss.values(T::zero());
    for r in 0..l {
        for c in 0..k {
            ic[(r, dcol(c, 0))] = g[(r, c)];
        }
        for c in 0..na {
            for b in 0..nc {
                ic[(r, acol(c, b))] += g[(r, k + c)] * g0[b];
            }
        }
    }

    Ok(AssembledLsq {
        grid: grid.clone(),
        m,
        k,
        n_int,
        blocks,
        block_rhs,
        ic,
        ic_rhs: g_rhs.clone(),
        weight,
        ansatz,
    })
}
