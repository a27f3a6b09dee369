//! One-sided Jacobi SVD.
//!
//! The bidiagonal SVD in nalgebra 0.35 can return factors that do not
//! reconstruct the input for some rank-deficient matrices (seen at the 5e-2
//! level on 6x6 inputs with one zero singular value), so every SVD in this
//! crate goes through this routine instead.

use nalgebra::DMatrix;

use crate::scalar::Real;

/// Full SVD `A = U diag(s) V^T` with `s` in descending order.
#[derive(Debug, Clone)]
pub struct Svd<T> {
    /// `rows x rows`, orthogonal.
    pub u: DMatrix<T>,
    /// `min(rows, cols)` values.
    pub s: Vec<T>,
    /// `cols x cols`, orthogonal.
    pub vt: DMatrix<T>,
}

const MAX_SWEEPS: usize = 80;

/// Orthogonalizes the columns of `w` (tall or square) by plane rotations,
/// accumulating them in `v`.
fn hestenes<T: Real>(w: &mut DMatrix<T>, v: &mut DMatrix<T>) {
    let q = w.ncols();
    let eps = T::machine_eps();
    let tol = eps * T::from_count(w.nrows()).sqrt();
    // columns below this carry only rounding noise; rotating them can cycle
    let negligible = {
        let f = eps * w.norm();
        f * f
    };
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..q {
            for j in (i + 1)..q {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == T::zero() || alpha <= negligible || beta <= negligible || gamma.abs() <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (T::lit(2.0) * gamma);
                let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                let t = if zeta == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = c * t;
                for mat in [&mut *w, &mut *v] {
                    for r in 0..mat.nrows() {
                        let a = mat[(r, i)];
                        let b = mat[(r, j)];
                        mat[(r, i)] = c * a - s * b;
                        mat[(r, j)] = s * a + c * b;
                    }
                }
            }
        }
        if !rotated {
            return;
        }
    }
    log::warn!("Jacobi SVD did not converge in {MAX_SWEEPS} sweeps");
}

/// Completes `k` orthonormal columns to an orthogonal `p x p` matrix,
/// keeping the given columns unchanged.
fn complete<T: Real>(cols: DMatrix<T>) -> DMatrix<T> {
    let (p, k) = cols.shape();
    if k == p {
        return cols;
    }
    let mut work = DMatrix::zeros(p, k + p);
    work.columns_mut(0, k).copy_from(&cols);
    work.columns_mut(k, p).fill_with_identity();
    let q = work.qr().q();
    let mut out = q.columns(0, p).into_owned();
    out.columns_mut(0, k).copy_from(&cols);
    out
}

fn tall<T: Real>(a: &DMatrix<T>) -> Svd<T> {
    let (p, q) = a.shape();
    let mut w = a.clone();
    let mut v = DMatrix::identity(q, q);
    hestenes(&mut w, &mut v);
    let norms: Vec<T> = (0..q).map(|j| w.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..q).collect();
    order.sort_by(|&i, &j| norms[j].partial_cmp(&norms[i]).unwrap_or(std::cmp::Ordering::Equal));
    let s: Vec<T> = order.iter().map(|&i| norms[i]).collect();
    let smax = s.first().copied().unwrap_or(T::zero());
    // columns with a numerically zero norm carry no direction
    let floor = smax * T::machine_eps() * T::from_count(p.max(q));
    let keep = s.iter().take_while(|&&x| x > floor && x > T::zero()).count();
    let mut u_part = DMatrix::zeros(p, keep);
    for (dst, &src) in order.iter().take(keep).enumerate() {
        u_part.set_column(dst, &(w.column(src) / norms[src]));
    }
    // re-orthonormalize against rounding in the rotated columns
    let u_part = if keep > 0 { super::orthonormalize_columns(&u_part) } else { u_part };
    let u_part = fix_orientation(u_part, &order, &w);
    let u = complete(u_part);
    let mut vt = DMatrix::zeros(q, q);
    for (dst, &src) in order.iter().enumerate() {
        vt.set_row(dst, &v.column(src).transpose());
    }
    Svd { u, s, vt }
}

/// Restores the sign of each column to agree with the rotated column it came from.
fn fix_orientation<T: Real>(mut u: DMatrix<T>, order: &[usize], w: &DMatrix<T>) -> DMatrix<T> {
    for j in 0..u.ncols() {
        if u.column(j).dot(&w.column(order[j])) < T::zero() {
            u.column_mut(j).neg_mut();
        }
    }
    u
}

/// Full, sorted SVD of any shape.
pub fn svd<T: Real>(a: &DMatrix<T>) -> Svd<T> {
    let (p, q) = a.shape();
    if p == 0 || q == 0 {
        return Svd { u: DMatrix::identity(p, p), s: Vec::new(), vt: DMatrix::identity(q, q) };
    }
    if p >= q {
        tall(a)
    } else {
        let t = tall(&a.transpose());
        Svd { u: t.vt.transpose(), s: t.s, vt: t.u.transpose() }
    }
}

/// Singular values in descending order.
pub fn singular_values<T: Real>(a: &DMatrix<T>) -> Vec<T> {
    let (p, q) = a.shape();
    if p == 0 || q == 0 {
        return Vec::new();
    }
    let mut w = if p >= q { a.clone() } else { a.transpose() };
    let n = w.ncols();
    let mut v = DMatrix::zeros(0, n);
    hestenes(&mut w, &mut v);
    let mut s: Vec<T> = (0..n).map(|j| w.column(j).norm()).collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}
