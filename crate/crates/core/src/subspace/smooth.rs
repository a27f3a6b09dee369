//! Smooth continuation of subspace bases across the nodes of a window.

use nalgebra::DMatrix;

use super::householder::HouseholderQr;
use super::{full_u, lstsq, orthonormality_defect, orthonormalize_columns, rank_of, RankPolicy};
use crate::error::{contract, DaeError, Result};
use crate::matfun::SampledMatrixStack;
use crate::scalar::Real;
use crate::specdiff::{chebyshev_t, DiffOperator};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisStrategy {
    /// Solve `C' = P' C` for the orthoprojector `P`.
    SvdOde,
    /// Householder QR with pivots and signs frozen at the anchor.
    QrFixedPivot,
}

impl BasisStrategy {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svd-ode" | "svd_ode" | "svd" => Some(Self::SvdOde),
            "qr-fixed" | "qr_fixed_pivot" | "qr" => Some(Self::QrFixedPivot),
            _ => None,
        }
    }
}

/// Bases of one subspace family at every node of a window.
#[derive(Debug, Clone)]
pub struct SmoothBasisTrack<T> {
    pub nodes: Vec<T>,
    pub ambient_dim: usize,
    pub dim: usize,
    pub bases: Vec<DMatrix<T>>,
    /// `C'` at the nodes when the strategy provides it.
    pub derivative: Option<Vec<DMatrix<T>>>,
    pub strategy: BasisStrategy,
    /// Largest observed `|C_{i+1} - C_i| / (t_{i+1} - t_i)`.
    pub lipschitz: T,
    /// Number of nodes that had to be re-orthonormalized.
    pub reorthonormalized: usize,
}

impl<T: Real> SmoothBasisTrack<T> {
    fn finish(nodes: Vec<T>, bases: Vec<DMatrix<T>>, derivative: Option<Vec<DMatrix<T>>>, strategy: BasisStrategy, reorth: usize) -> Self {
        let ambient_dim = bases.first().map_or(0, |b| b.nrows());
        let dim = bases.first().map_or(0, |b| b.ncols());
        let mut lipschitz = T::zero();
        for i in 1..bases.len() {
            if bases[i].ncols() > 0 {
                let d = (&bases[i] - &bases[i - 1]).amax() / (nodes[i] - nodes[i - 1]);
                lipschitz = lipschitz.max(d);
            }
        }
        Self { nodes, ambient_dim, dim, bases, derivative, strategy, lipschitz, reorthonormalized: reorth }
    }

    /// Wraps per-node bases without derivative information.
    pub fn from_bases(nodes: Vec<T>, bases: Vec<DMatrix<T>>, strategy: BasisStrategy) -> Self {
        Self::finish(nodes, bases, None, strategy, 0)
    }

    /// A constant track.
    pub fn constant(nodes: &[T], basis: DMatrix<T>, strategy: BasisStrategy) -> Self {
        let z = DMatrix::zeros(basis.nrows(), basis.ncols());
        let n = nodes.len();
        Self::finish(nodes.to_vec(), vec![basis; n], Some(vec![z; n]), strategy, 0)
    }
}

fn projector_rank<T: Real>(p: &DMatrix<T>) -> (usize, DMatrix<T>) {
    let (u, s) = full_u(p);
    let half = T::lit(0.5);
    let r = s.iter().filter(|&&v| v > half).count();
    (r, u.columns(0, r).into_owned())
}

/// Continues a basis of `im P(t)` from the anchor node by collocating
/// `C' = P' C` with a polynomial of the operator's degree.
pub fn smooth_basis_svd_ode<T: Real>(
    proj: &SampledMatrixStack<T>,
    d: &DiffOperator<T>,
    anchor: usize,
) -> Result<SmoothBasisTrack<T>> {
    let mnodes = d.len();
    if proj.len() != mnodes {
        return contract("projector samples do not match the operator");
    }
    if anchor >= mnodes {
        return contract("anchor index out of range");
    }
    let m = proj.values[anchor].nrows();
    let (r, c_hat) = projector_rank(&proj.values[anchor]);
    for (i, p) in proj.values.iter().enumerate() {
        let ri = projector_rank(p).0;
        if ri != r {
            return Err(DaeError::RankDrop { level: 0, t: proj.nodes[i].as_f64(), found: ri, expected: r });
        }
    }
    let dp = d.apply_values(&proj.values);
    if r == 0 || dp.iter().all(|v| v.iter().all(|x| *x == T::zero())) {
        return Ok(SmoothBasisTrack::constant(&proj.nodes, c_hat, BasisStrategy::SvdOde));
    }

    let n = d.degree;
    let scale = T::lit(2.0) / d.window.tau;
    let xa = d.ref_nodes[anchor];
    let (ta, _) = chebyshev_t(n, xa);
    let others: Vec<usize> = (0..mnodes).filter(|&i| i != anchor).collect();
    let mut sys = DMatrix::zeros(others.len() * m, n * m);
    let mut rhs = DMatrix::zeros(others.len() * m, r);
    for (row, &i) in others.iter().enumerate() {
        let (ti, dti) = chebyshev_t(n, d.ref_nodes[i]);
        for k in 1..=n {
            let mut blk = dp[i].clone() * -(ti[k] - ta[k]);
            for a in 0..m {
                blk[(a, a)] += scale * dti[k];
            }
            sys.view_mut((row * m, (k - 1) * m), (m, m)).copy_from(&blk);
        }
        rhs.view_mut((row * m, 0), (m, r)).copy_from(&(&dp[i] * &c_hat));
    }
    let coef = lstsq(&sys, &rhs).ok_or_else(|| DaeError::Degenerate("basis ODE system is singular".into()))?;

    let mut bases = Vec::with_capacity(mnodes);
    let mut deriv = Vec::with_capacity(mnodes);
    let mut reorth = 0;
    let limit = T::lit(1e-6);
    for i in 0..mnodes {
        let mut c = c_hat.clone();
        if i != anchor {
            let (ti, _) = chebyshev_t(n, d.ref_nodes[i]);
            for k in 1..=n {
                let w = ti[k] - ta[k];
                c += coef.view(((k - 1) * m, 0), (m, r)) * w;
            }
        }
        if i != anchor {
            // collocation error leaves C slightly outside im P; P is known exactly at the nodes
            c = &proj.values[i] * c;
        }
        if orthonormality_defect(&c) > limit {
            log::debug!("basis continuation lost orthonormality at t = {}, re-orthonormalizing", proj.nodes[i]);
            c = orthonormalize_columns(&c);
            // keep the orientation of the anchor basis
            let o = c.transpose() * &c_hat;
            for j in 0..r {
                if o[(j, j)] < T::zero() {
                    c.column_mut(j).neg_mut();
                }
            }
            reorth += 1;
        }
        deriv.push(&dp[i] * &c);
        bases.push(c);
    }
    Ok(SmoothBasisTrack::finish(proj.nodes.clone(), bases, Some(deriv), BasisStrategy::SvdOde, reorth))
}

fn check_replay_rank<T: Real>(f: &HouseholderQr<T>, t: T, policy: &RankPolicy<T>) -> Result<()> {
    let r = f.record.rank;
    if r == 0 {
        return Ok(());
    }
    let found = rank_of(&f.r11(), policy);
    if found < r {
        return Err(DaeError::RankDrop { level: 0, t: t.as_f64(), found, expected: r });
    }
    Ok(())
}

/// Nullspace track of a matrix stack by fixed-pivot QR of the transposes.
pub fn qr_fixed_pivot<T: Real>(
    stack: &SampledMatrixStack<T>,
    anchor: usize,
    policy: &RankPolicy<T>,
) -> Result<SmoothBasisTrack<T>> {
    if anchor >= stack.len() {
        return contract("anchor index out of range");
    }
    let a0 = &stack.values[anchor];
    let q = a0.ncols();
    let r = rank_of(a0, policy);
    let rec = HouseholderQr::pivoted(&a0.transpose(), r).record;
    let mut bases = Vec::with_capacity(stack.len());
    for (i, a) in stack.values.iter().enumerate() {
        let f = HouseholderQr::replay(&a.transpose(), &rec);
        check_replay_rank(&f, stack.nodes[i], policy)?;
        bases.push(f.q.columns(r, q - r).into_owned());
    }
    Ok(SmoothBasisTrack::finish(stack.nodes.clone(), bases, None, BasisStrategy::QrFixedPivot, 0))
}

/// Range track and per-node corange bases by fixed-pivot QR.
pub fn qr_fixed_range<T: Real>(
    stack: &SampledMatrixStack<T>,
    anchor: usize,
    policy: &RankPolicy<T>,
) -> Result<(SmoothBasisTrack<T>, Vec<DMatrix<T>>)> {
    if anchor >= stack.len() {
        return contract("anchor index out of range");
    }
    let a0 = &stack.values[anchor];
    let p = a0.nrows();
    let r = rank_of(a0, policy);
    let rec = HouseholderQr::pivoted(a0, r).record;
    let mut y = Vec::with_capacity(stack.len());
    let mut z = Vec::with_capacity(stack.len());
    for (i, a) in stack.values.iter().enumerate() {
        let f = HouseholderQr::replay(a, &rec);
        check_replay_rank(&f, stack.nodes[i], policy)?;
        y.push(f.q.columns(0, r).into_owned());
        z.push(f.q.columns(r, p - r).into_owned());
    }
    Ok((SmoothBasisTrack::finish(stack.nodes.clone(), y, None, BasisStrategy::QrFixedPivot, 0), z))
}
