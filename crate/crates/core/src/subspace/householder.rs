//! Householder QR with column pivoting that can be replayed with a frozen
//! pivot order and frozen reflection signs.

use nalgebra::{DMatrix, DVector};


use crate::scalar::Real;

/// Pivot order and reflection signs recorded at the anchor node.
#[derive(Debug, Clone, PartialEq)]
pub struct PivotRecord<T> {
    /// `perm[j]` is the original column placed at position `j`.
    pub perm: Vec<usize>,
    /// Sign `s_j` of reflection `j`; the new diagonal entry is `-s_j |x|`.
    pub signs: Vec<T>,
    pub rank: usize,
}

/// `A P = Q R` after `rank` reflections. `Q` is square.
#[derive(Debug, Clone)]
pub struct HouseholderQr<T> {
    pub q: DMatrix<T>,
    pub r: DMatrix<T>,
    pub record: PivotRecord<T>,
}

impl<T: Real> HouseholderQr<T> {
    /// Factorizes with max-norm column pivoting, stopping after `rank` steps.
    pub fn pivoted(a: &DMatrix<T>, rank: usize) -> Self {
        let (p, q) = a.shape();
        let rank = rank.min(p).min(q);
        let mut w = a.clone();
        let mut perm: Vec<usize> = (0..q).collect();
        let mut signs = Vec::with_capacity(rank);
        let mut qacc = DMatrix::identity(p, p);
        for j in 0..rank {
            let mut best = j;
            let mut best_norm = T::zero();
            for c in j..q {
                let n = w.view((j, c), (p - j, 1)).norm_squared();
                if n > best_norm {
                    best_norm = n;
                    best = c;
                }
            }
            if best != j {
                w.swap_columns(j, best);
                perm.swap(j, best);
            }
            let s = if w[(j, j)] < T::zero() { -T::one() } else { T::one() };
            signs.push(s);
            reflect(&mut w, &mut qacc, j, s);
        }
        Self { q: qacc, r: w, record: PivotRecord { perm, signs, rank } }
    }

    /// Replays a recorded factorization on a nearby matrix.
    pub fn replay(a: &DMatrix<T>, record: &PivotRecord<T>) -> Self {
        let (p, q) = a.shape();
        let mut w = DMatrix::zeros(p, q);
        for (j, &c) in record.perm.iter().enumerate() {
            w.set_column(j, &a.column(c));
        }
        let mut qacc = DMatrix::identity(p, p);
        for j in 0..record.rank {
            reflect(&mut w, &mut qacc, j, record.signs[j]);
        }
        Self { q: qacc, r: w, record: record.clone() }
    }

    /// Leading `rank x rank` block of `R`.
    pub fn r11(&self) -> DMatrix<T> {
        let r = self.record.rank;
        self.r.view((0, 0), (r, r)).upper_triangle()
    }
}

// Applies H = I - 2 v v^T / (v^T v) built from column j of w (rows j..), with
// the reflected vector mapped to -s |x| e_1. Accumulates Q <- Q H.
fn reflect<T: Real>(w: &mut DMatrix<T>, qacc: &mut DMatrix<T>, j: usize, s: T) {
    let p = w.nrows();
    let x: DVector<T> = w.view((j, j), (p - j, 1)).column(0).into_owned();
    let nx = x.norm();
    if nx == T::zero() {
        return;
    }
    let alpha = -s * nx;
    let mut v = x;
    v[0] -= alpha;
    let vv = v.norm_squared();
    if vv == T::zero() {
        return;
    }
    let two = T::lit(2.0);
    let q = w.ncols();
    for c in j..q {
        let mut d = T::zero();
        for i in 0..p - j {
            d += v[i] * w[(j + i, c)];
        }
        let f = two * d / vv;
        for i in 0..p - j {
            w[(j + i, c)] -= f * v[i];
        }
    }
    for c in j + 1..p {
        w[(c, j)] = T::zero();
    }
    w[(j, j)] = alpha;
    for row in 0..qacc.nrows() {
        let mut d = T::zero();
        for i in 0..p - j {
            d += qacc[(row, j + i)] * v[i];
        }
        let f = two * d / vv;
        for i in 0..p - j {
            qacc[(row, j + i)] -= f * v[i];
        }
    }
}
