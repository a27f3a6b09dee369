//! The discrete reduction procedure: index, degrees of freedom and the
//! matrix `G_tau(t_bar) = C(t_bar)^T E(t_bar)` that states accurate initial
//! conditions, computed from the adjoint pair.

use nalgebra::DMatrix;

use crate::error::{config, contract, DaeError, Result};
use crate::matfun::{adjoint_pair, DaePair, SampledPair};
use crate::scalar::Real;
use crate::specdiff::{place_window, DiffKind, DiffOperator, NodeFamily, Placement, Window, WindowMode};
use crate::subspace::{
    fundamental_bases, full_vt, norm2, nullspace_basis, opening, qr_fixed_pivot, qr_fixed_range, rank_of,
    singular_values, smooth_basis_svd_ode, BasisStrategy, RankPolicy, SmoothBasisTrack, SubspaceBasis,
};
use crate::matfun::SampledMatrixStack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReductionConfig<T> {
    pub nd: usize,
    pub md: usize,
    pub diff_kind: DiffKind,
    pub node_family: NodeFamily,
    pub window_mode: WindowMode,
    pub tau: T,
    pub basis_strategy: BasisStrategy,
    pub rank_policy: RankPolicy<T>,
    /// Level cap; `None` means `m + 1`.
    pub max_levels: Option<usize>,
}

impl<T: Real> Default for ReductionConfig<T> {
    fn default() -> Self {
        Self {
            nd: 4,
            md: 5,
            diff_kind: DiffKind::Interpolatory,
            node_family: NodeFamily::Chebyshev2,
            window_mode: WindowMode::Central,
            tau: T::lit(0.1),
            basis_strategy: BasisStrategy::SvdOde,
            rank_policy: RankPolicy::default(),
            max_levels: None,
        }
    }
}

impl<T: Real> ReductionConfig<T> {
    /// Spectral (interpolatory) differentiation with `md` nodes.
    pub fn spectral(md: usize, tau: T) -> Self {
        Self { nd: md - 1, md, tau, ..Self::default() }
    }

    /// Least-squares differentiation of degree `nd` on `md` nodes.
    pub fn least_squares(nd: usize, md: usize, tau: T) -> Self {
        Self { nd, md, tau, diff_kind: DiffKind::LeastSquares, ..Self::default() }
    }

    pub fn with_tau(mut self, tau: T) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_mode(mut self, mode: WindowMode) -> Self {
        self.window_mode = mode;
        self
    }

    pub fn with_strategy(mut self, s: BasisStrategy) -> Self {
        self.basis_strategy = s;
        self
    }

    pub fn with_family(mut self, f: NodeFamily) -> Self {
        self.node_family = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > T::zero()) {
            return config("tau must be positive");
        }
        match self.diff_kind {
            DiffKind::Interpolatory if self.md != self.nd + 1 => {
                config(format!("interpolatory differentiation needs Md = Nd + 1, got Md={}, Nd={}", self.md, self.nd))
            }
            DiffKind::LeastSquares if self.md <= self.nd + 1 => {
                config(format!("least-squares differentiation needs Md > Nd + 1, got Md={}, Nd={}", self.md, self.nd))
            }
            _ if self.nd < 1 => config("Nd must be at least 1"),
            _ => Ok(()),
        }
    }

    /// Builds the differentiation operator around `t_bar`, with the anchor
    /// node set to `t_bar` exactly.
    pub fn operator(&self, t_bar: T, domain: (T, T)) -> Result<(DiffOperator<T>, Placement<T>)> {
        self.validate()?;
        let pl = place_window(t_bar, self.tau, self.window_mode, domain, self.node_family, self.md)?;
        let d = DiffOperator::new(self.node_family, self.diff_kind, self.md, self.nd, pl.window)?.snap_node(pl.anchor, t_bar);
        Ok((d, pl))
    }
}

/// Result of the recursive basis computation.
#[derive(Debug, Clone)]
pub struct Cbasis<T> {
    /// Accumulated product basis at every node.
    pub track: SmoothBasisTrack<T>,
    pub ranks: Vec<usize>,
    pub mu: usize,
}

#[derive(Debug, Clone)]
pub struct ReductionOutcome<T> {
    pub mu: usize,
    pub ranks: Vec<usize>,
    /// Degrees of freedom `l`.
    pub dof: usize,
    /// `l x m` condition matrix.
    pub g: DMatrix<T>,
    pub t_bar: T,
    pub tau: T,
    pub nd: usize,
    pub placement: Placement<T>,
    pub c_track: SmoothBasisTrack<T>,
}

struct Ctx<'a, T> {
    nodes: &'a [T],
    d: &'a DiffOperator<T>,
    anchor: usize,
    strategy: BasisStrategy,
    policy: RankPolicy<T>,
    max_levels: usize,
}

fn at_level(e: DaeError, level: usize) -> DaeError {
    match e {
        DaeError::RankDrop { t, found, expected, .. } => DaeError::RankDrop { level, t, found, expected },
        other => other,
    }
}

fn stack<T: Real>(nodes: &[T], values: Vec<DMatrix<T>>) -> SampledMatrixStack<T> {
    SampledMatrixStack { nodes: nodes.to_vec(), values }
}

/// Ranks per node; errors if they differ from the anchor.
fn common_rank<T: Real>(values: &[DMatrix<T>], ctx: &Ctx<'_, T>, level: usize) -> Result<usize> {
    let nn = values.len();
    let mean = values.iter().fold(T::zero(), |s, v| s + v.norm()) / T::from_count(nn);
    if mean <= ctx.policy.abs_zero_tol() {
        return Ok(0);
    }
    let r = rank_of(&values[ctx.anchor], &ctx.policy);
    for (i, v) in values.iter().enumerate() {
        let ri = rank_of(v, &ctx.policy);
        if ri != r {
            return Err(DaeError::RankDrop { level, t: ctx.nodes[i].as_f64(), found: ri, expected: r });
        }
    }
    Ok(r)
}

fn cbasis_level<T: Real>(
    e: &[DMatrix<T>],
    f: &[DMatrix<T>],
    ctx: &Ctx<'_, T>,
    level: usize,
) -> Result<(Vec<DMatrix<T>>, Vec<usize>, usize)> {
    let nn = ctx.nodes.len();
    let m = e[0].nrows();
    if m == 0 {
        return Ok((vec![DMatrix::zeros(0, 0); nn], Vec::new(), 0));
    }
    let r = common_rank(e, ctx, level)?;
    if r == m {
        return Ok((vec![DMatrix::identity(m, m); nn], Vec::new(), 0));
    }
    if level >= ctx.max_levels {
        return Err(DaeError::NonRegular(format!("reduction did not terminate within {} levels", ctx.max_levels)));
    }
    if r == 0 {
        return Ok((vec![DMatrix::zeros(m, 0); nn], vec![0], 1));
    }

    let (y, z): (Vec<DMatrix<T>>, Vec<DMatrix<T>>) = match ctx.strategy {
        BasisStrategy::SvdOde => {
            let fb: Vec<_> = e.iter().map(|v| fundamental_bases(v, &ctx.policy)).collect();
            let proj = fb.iter().map(|b| b.range.projector()).collect();
            let tr = smooth_basis_svd_ode(&stack(ctx.nodes, proj), ctx.d, ctx.anchor).map_err(|x| at_level(x, level))?;
            (tr.bases, fb.into_iter().map(|b| b.corange.columns).collect())
        }
        BasisStrategy::QrFixedPivot => {
            let (tr, z) = qr_fixed_range(&stack(ctx.nodes, e.to_vec()), ctx.anchor, &ctx.policy).map_err(|x| at_level(x, level))?;
            (tr.bases, z)
        }
    };
    let zf: Vec<DMatrix<T>> = z.iter().zip(f).map(|(z, f)| z.transpose() * f).collect();
    let (c, dc): (Vec<DMatrix<T>>, Vec<DMatrix<T>>) = match ctx.strategy {
        BasisStrategy::SvdOde => {
            let proj = zf.iter().map(|a| nullspace_basis(a, &ctx.policy).projector()).collect();
            let tr = smooth_basis_svd_ode(&stack(ctx.nodes, proj), ctx.d, ctx.anchor).map_err(|x| at_level(x, level))?;
            let dc = tr.derivative.expect("svd-ode track carries derivatives");
            (tr.bases, dc)
        }
        BasisStrategy::QrFixedPivot => {
            let tr = qr_fixed_pivot(&stack(ctx.nodes, zf), ctx.anchor, &ctx.policy).map_err(|x| at_level(x, level))?;
            let dc = ctx.d.apply_values(&tr.bases);
            (tr.bases, dc)
        }
    };
    let rc = c[0].ncols();
    if rc != r {
        return Err(DaeError::NonRegular(format!(
            "level {level}: ker Z^T F has dimension {rc}, expected {r}"
        )));
    }
    let mut e_new = Vec::with_capacity(nn);
    let mut f_new = Vec::with_capacity(nn);
    for i in 0..nn {
        let yt = y[i].transpose();
        e_new.push(&yt * &e[i] * &c[i]);
        f_new.push(&yt * (&f[i] * &c[i] + &e[i] * &dc[i]));
    }
    let (c_rec, mut ranks, mu) = cbasis_level(&e_new, &f_new, ctx, level + 1)?;
    let prod = c.iter().zip(&c_rec).map(|(a, b)| a * b).collect();
    ranks.insert(0, r);
    Ok((prod, ranks, mu + 1))
}

/// Runs the recursive basis computation on a sampled pair.
pub fn cbasis<T: Real>(
    pair: &SampledPair<T>,
    d: &DiffOperator<T>,
    anchor: usize,
    cfg: &ReductionConfig<T>,
) -> Result<Cbasis<T>> {
    let e = &pair.e.values;
    let f = &pair.f.values;
    if e.is_empty() || e.len() != d.len() || f.len() != e.len() {
        return contract("sampled pair does not match the differentiation nodes");
    }
    let m = e[0].nrows();
    if e.iter().chain(f).any(|v| v.shape() != (m, m)) {
        return contract("sampled pair must be square");
    }
    let scale = e.iter().chain(f).fold(T::zero(), |s, v| s.max(v.norm()));
    let ctx = Ctx {
        nodes: &pair.e.nodes,
        d,
        anchor,
        strategy: cfg.basis_strategy,
        policy: cfg.rank_policy.with_scale(scale),
        max_levels: cfg.max_levels.unwrap_or(m + 1),
    };
    let (c, ranks, mu) = cbasis_level(e, f, &ctx, 0)?;
    let track = SmoothBasisTrack::from_bases(pair.e.nodes.clone(), c, cfg.basis_strategy);
    Ok(Cbasis { track, ranks, mu })
}

/// Computes `G_tau(t_bar)` from the adjoint pair.
pub fn accurate_ic_matrix<T: Real>(pair: &DaePair<T>, t_bar: T, cfg: &ReductionConfig<T>) -> Result<ReductionOutcome<T>> {
    let (d, pl) = cfg.operator(t_bar, pair.interval)?;
    let adj = adjoint_pair(pair, &d);
    let cb = cbasis(&adj, &d, pl.anchor, cfg)?;
    let c = &cb.track.bases[pl.anchor];
    let g = c.transpose() * pair.e.eval(t_bar);
    Ok(ReductionOutcome {
        mu: cb.mu,
        ranks: cb.ranks,
        dof: c.ncols(),
        g,
        t_bar,
        tau: cfg.tau,
        nd: d.degree,
        placement: pl,
        c_track: cb.track,
    })
}

/// Orthonormal basis of `S_can(t)` from the reduction of the pair itself.
pub fn flow_basis<T: Real>(pair: &DaePair<T>, t: T, cfg: &ReductionConfig<T>) -> Result<SubspaceBasis<T>> {
    let (d, pl) = cfg.operator(t, pair.interval)?;
    let s = pair.sample(&d.nodes);
    let cb = cbasis(&s, &d, pl.anchor, cfg)?;
    Ok(SubspaceBasis::orthonormalize(&cb.track.bases[pl.anchor]))
}

/// Kernel of a matrix assumed to have full row rank.
pub fn kernel_full_row_rank<T: Real>(g: &DMatrix<T>) -> SubspaceBasis<T> {
    let (l, m) = g.shape();
    let (vt, _) = full_vt(g);
    SubspaceBasis::from_columns(vt.rows(l.min(m), m - l.min(m)).transpose())
}

/// Opening between `ker G_tau` and `ker G_ref`.
pub fn gap_to_reference<T: Real>(outcome: &ReductionOutcome<T>, g_ref: &DMatrix<T>) -> Result<T> {
    gap_between(&outcome.g, g_ref)
}

/// Opening between the kernels of two condition matrices.
pub fn gap_between<T: Real>(g: &DMatrix<T>, g_ref: &DMatrix<T>) -> Result<T> {
    if g.ncols() != g_ref.ncols() {
        return contract(format!("ambient dimensions differ: {} vs {}", g.ncols(), g_ref.ncols()));
    }
    Ok(opening(&kernel_full_row_rank(g), &kernel_full_row_rank(g_ref)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compatibility<T> {
    pub compatible: bool,
    pub sigma_min: T,
}

/// Checks `ker G ∩ S = {0}` through the smallest singular value of `G S`.
pub fn transfer_compat<T: Real>(g: &DMatrix<T>, s: &SubspaceBasis<T>, policy: &RankPolicy<T>) -> Result<Compatibility<T>> {
    let (l, m) = g.shape();
    if s.dim != l || s.ambient_dim != m {
        return contract(format!("G is {l}x{m} but the subspace has dimension {} in R^{}", s.dim, s.ambient_dim));
    }
    if l == 0 {
        return Ok(Compatibility { compatible: true, sigma_min: T::lit(f64::INFINITY) });
    }
    let gs = g * &s.columns;
    let sv = singular_values(&gs);
    let sigma_min = sv.iter().fold(T::lit(f64::INFINITY), |a, &b| a.min(b));
    let tol = policy.rel_tol_for(l, l) * norm2(g).max(T::one());
    Ok(Compatibility { compatible: sigma_min > tol, sigma_min })
}

/// The window a reduction at `t_bar` would use, without running it.
pub fn window_for<T: Real>(cfg: &ReductionConfig<T>, t_bar: T, domain: (T, T)) -> Result<Window<T>> {
    Ok(cfg.operator(t_bar, domain)?.1.window)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{campbell_moore, chua_riaza, kcf_index2, ChuaCase};

    #[test]
    fn config_validation() {
        assert!(ReductionConfig::<f64>::spectral(5, 0.0).validate().is_err());
        assert!(ReductionConfig::<f64>::least_squares(4, 5, 0.1).validate().is_err());
        assert!(ReductionConfig::<f64>::least_squares(4, 6, 0.1).validate().is_ok());
        let bad = ReductionConfig::<f64> { nd: 3, ..ReductionConfig::spectral(5, 0.1) };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn campbell_moore_table_cell() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        for s in [BasisStrategy::SvdOde, BasisStrategy::QrFixedPivot] {
            let out = accurate_ic_matrix(&p.pair, 0.0, &ReductionConfig::spectral(5, 0.1).with_strategy(s)).unwrap();
            assert_eq!((out.mu, out.dof), (3, 4));
            assert_eq!(out.ranks, vec![6, 5, 4]);
            let gap = gap_to_reference(&out, &p.g_exact.eval(0.0)).unwrap();
            assert!(gap > 2.62e-6 / 3.0 && gap < 2.62e-6 * 3.0, "{gap:e}");
        }
    }

    #[test]
    fn chua_index2_recovers_exact_condition() {
        let p = chua_riaza::<f64>(ChuaCase::Index2);
        let out = accurate_ic_matrix(&p.pair, 0.0, &ReductionConfig::spectral(5, 0.1)).unwrap();
        assert_eq!((out.mu, out.dof), (2, 2));
        assert!(gap_to_reference(&out, &p.g_exact.eval(0.0)).unwrap() < 1e-10);
    }

    #[test]
    fn kcf_has_no_freedom() {
        let p = kcf_index2(f64::sin, f64::cos, |t| -t.sin());
        let out = accurate_ic_matrix(&p.pair, 0.3, &ReductionConfig::spectral(3, 0.1)).unwrap();
        assert_eq!((out.mu, out.dof), (2, 0));
        assert_eq!(out.g.shape(), (0, 2));
        assert_eq!(gap_to_reference(&out, &DMatrix::zeros(0, 2)).unwrap(), 0.0);
        let c = transfer_compat(&out.g, &SubspaceBasis::empty(2), &RankPolicy::default()).unwrap();
        assert!(c.compatible && c.sigma_min.is_infinite());
    }

    #[test]
    fn flow_subspace_complements_kernel() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        let cfg = ReductionConfig::spectral(7, 0.1);
        let s = flow_basis(&p.pair, 1.0, &cfg).unwrap();
        assert_eq!(s.dim, 4);
        assert!(s.orthonormality_defect() < 1e-10);
        let g = accurate_ic_matrix(&p.pair, 1.0, &cfg).unwrap().g;
        assert!(transfer_compat(&g, &s, &cfg.rank_policy).unwrap().compatible);
    }

    #[test]
    fn gap_dimension_mismatch() {
        assert!(gap_between(&DMatrix::<f64>::identity(2, 3), &DMatrix::identity(2, 4)).is_err());
        let g = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert!(gap_between(&g, &(g.clone() * 3.0)).unwrap() < 1e-15);
    }

    #[test]
    fn window_stays_in_domain() {
        let cfg = ReductionConfig::<f64>::spectral(5, 0.5);
        let w = window_for(&cfg, 0.0, (0.0, 5.0)).unwrap();
        assert!(w.c >= 0.0 && w.end() <= 5.0);
    }

    #[test]
    fn narrow_window_keeps_structure() {
        // a narrow window once exposed wrong singular vectors at one node on level 1
        let p = campbell_moore::<f64>(5.0).unwrap();
        let cfg = ReductionConfig::spectral(7, 0.03125);
        for t in [1.25, 1.375, 2.25] {
            let out = accurate_ic_matrix(&p.pair, t, &cfg).unwrap();
            assert_eq!((out.mu, out.dof), (3, 4));
            assert!(gap_to_reference(&out, &p.g_exact.eval(t)).unwrap() < 1e-10);
        }
    }
}
