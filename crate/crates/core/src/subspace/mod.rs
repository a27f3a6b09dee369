//! Rank decisions, orthonormal bases, the opening between subspaces and
//! smooth continuation of bases across a node window.

mod householder;
mod smooth;
mod svd;

pub use householder::{HouseholderQr, PivotRecord};
pub use svd::{singular_values, svd, Svd};
pub use smooth::{
    qr_fixed_pivot, qr_fixed_range, smooth_basis_svd_ode, BasisStrategy, SmoothBasisTrack,
};

use nalgebra::DMatrix;

use crate::scalar::Real;

/// Thresholds for numerical rank decisions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankPolicy<T> {
    /// Relative singular value threshold. `None` means `64 eps max(rows, cols)`.
    pub rel_tol: Option<T>,
    /// A matrix whose norm is below `abs_zero_rel * scale` counts as zero.
    pub abs_zero_rel: T,
    /// Largest coefficient norm seen on the window; set by the caller.
    pub scale: T,
}

impl<T: Real> Default for RankPolicy<T> {
    fn default() -> Self {
        Self { rel_tol: None, abs_zero_rel: T::lit(1e-12), scale: T::one() }
    }
}

impl<T: Real> RankPolicy<T> {
    pub fn with_rel_tol(mut self, tol: T) -> Self {
        self.rel_tol = Some(tol);
        self
    }

    pub fn with_scale(mut self, scale: T) -> Self {
        self.scale = if scale > T::zero() { scale } else { T::one() };
        self
    }

    pub fn rel_tol_for(&self, rows: usize, cols: usize) -> T {
        self.rel_tol
            .unwrap_or_else(|| T::lit(64.0) * T::machine_eps() * T::from_count(rows.max(cols).max(1)))
    }

    pub fn abs_zero_tol(&self) -> T {
        self.abs_zero_rel * self.scale
    }
}

/// Numerical rank from the singular values.
pub fn rank_of<T: Real>(a: &DMatrix<T>, policy: &RankPolicy<T>) -> usize {
    let (p, q) = a.shape();
    if p == 0 || q == 0 {
        return 0;
    }
    rank_from_singular_values(&singular_values(a), p, q, policy)
}

pub(crate) fn rank_from_singular_values<T: Real>(s: &[T], p: usize, q: usize, policy: &RankPolicy<T>) -> usize {
    let s1 = s.iter().fold(T::zero(), |a, &v| a.max(v));
    if s1 <= policy.abs_zero_tol() {
        return 0;
    }
    let tol = policy.rel_tol_for(p, q) * s1;
    s.iter().filter(|&&v| v > tol).count()
}

/// An orthonormal basis stored as the columns of an `m x r` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis<T> {
    pub ambient_dim: usize,
    pub dim: usize,
    pub columns: DMatrix<T>,
}

impl<T: Real> SubspaceBasis<T> {
    /// Wraps columns that are already orthonormal.
    pub fn from_columns(columns: DMatrix<T>) -> Self {
        Self { ambient_dim: columns.nrows(), dim: columns.ncols(), columns }
    }

    /// Orthonormalizes an arbitrary full-column-rank matrix.
    pub fn orthonormalize(a: &DMatrix<T>) -> Self {
        Self::from_columns(orthonormalize_columns(a))
    }

    pub fn empty(m: usize) -> Self {
        Self::from_columns(DMatrix::zeros(m, 0))
    }

    pub fn full(m: usize) -> Self {
        Self::from_columns(DMatrix::identity(m, m))
    }

    pub fn projector(&self) -> DMatrix<T> {
        &self.columns * self.columns.transpose()
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn complement(&self) -> Self {
        let m = self.ambient_dim;
        if self.dim == 0 {
            return Self::full(m);
        }
        if self.dim == m {
            return Self::empty(m);
        }
        let (vt, _) = full_vt(&self.columns.transpose());
        Self::from_columns(vt.rows(self.dim, m - self.dim).transpose())
    }

    /// `max |B^T B - I|`.
    pub fn orthonormality_defect(&self) -> T {
        orthonormality_defect(&self.columns)
    }
}

pub(crate) fn orthonormality_defect<T: Real>(c: &DMatrix<T>) -> T {
    if c.ncols() == 0 {
        return T::zero();
    }
    let g = c.transpose() * c - DMatrix::identity(c.ncols(), c.ncols());
    g.amax()
}

/// Gram–Schmidt-free orthonormalization by Householder QR with positive diagonal.
pub(crate) fn orthonormalize_columns<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.ncols() == 0 {
        return a.clone();
    }
    let qr = a.clone().qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        if r[(j, j)] < T::zero() {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Left singular vectors as a full `rows x rows` matrix, with the singular values
/// in decreasing order.
pub(crate) fn full_u<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>) {
    let f = svd(a);
    (f.u, f.s)
}

/// Right singular vectors as a full `cols x cols` matrix `V^T`.
pub(crate) fn full_vt<T: Real>(a: &DMatrix<T>) -> (DMatrix<T>, Vec<T>) {
    let f = svd(a);
    (f.vt, f.s)
}

/// Bases of `im A`, `(im A)^perp` and `ker A` with a common rank decision.
#[derive(Debug, Clone)]
pub struct FundamentalBases<T> {
    pub rank: usize,
    pub range: SubspaceBasis<T>,
    pub corange: SubspaceBasis<T>,
    pub nullspace: SubspaceBasis<T>,
}

pub fn fundamental_bases<T: Real>(a: &DMatrix<T>, policy: &RankPolicy<T>) -> FundamentalBases<T> {
    let (p, q) = a.shape();
    let Svd { u, s, vt } = svd(a);
    let r = rank_from_singular_values(&s, p, q, policy);
    FundamentalBases {
        rank: r,
        range: SubspaceBasis::from_columns(u.columns(0, r).into_owned()),
        corange: SubspaceBasis::from_columns(u.columns(r, p - r).into_owned()),
        nullspace: SubspaceBasis::from_columns(vt.rows(r, q - r).transpose()),
    }
}

pub fn range_basis<T: Real>(a: &DMatrix<T>, policy: &RankPolicy<T>) -> SubspaceBasis<T> {
    fundamental_bases(a, policy).range
}

pub fn corange_basis<T: Real>(a: &DMatrix<T>, policy: &RankPolicy<T>) -> SubspaceBasis<T> {
    fundamental_bases(a, policy).corange
}

pub fn nullspace_basis<T: Real>(a: &DMatrix<T>, policy: &RankPolicy<T>) -> SubspaceBasis<T> {
    fundamental_bases(a, policy).nullspace
}

/// Opening between two subspaces: the largest singular value of `V_perp^T U`
/// where `V_perp` spans the complement of `v`. Equals 1 when dimensions differ.
///
/// Panics if the ambient dimensions differ.
pub fn opening<T: Real>(u: &SubspaceBasis<T>, v: &SubspaceBasis<T>) -> T {
    assert_eq!(u.ambient_dim, v.ambient_dim, "opening of subspaces in different spaces");
    if u.dim != v.dim {
        return T::one();
    }
    if u.dim == 0 || u.dim == u.ambient_dim {
        return T::zero();
    }
    let vp = v.complement();
    let w = vp.columns.transpose() * &u.columns;
    let s = singular_values(&w);
    s.iter().fold(T::zero(), |a, &x| a.max(x)).min(T::one())
}

/// Spectral norm.
pub(crate) fn norm2<T: Real>(a: &DMatrix<T>) -> T {
    if a.nrows() == 0 || a.ncols() == 0 {
        return T::zero();
    }
    singular_values(a).first().copied().unwrap_or(T::zero())
}

/// Least-squares solution of a full-column-rank system by Householder QR.
pub(crate) fn lstsq<T: Real>(a: &DMatrix<T>, b: &DMatrix<T>) -> Option<DMatrix<T>> {
    if a.ncols() == 0 {
        return Some(DMatrix::zeros(0, b.ncols()));
    }
    let qr = a.clone().qr();
    let qtb = qr.q().transpose() * b;
    qr.r().solve_upper_triangular(&qtb)
}
