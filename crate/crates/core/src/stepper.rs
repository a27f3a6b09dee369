//! Windowed initial value solver: the interval is split into `L` windows,
//! the first is solved with the user's condition and each following one
//! with a transfer condition computed by the reduction at its left end.

use log::{debug, warn};
use nalgebra::{DMatrix, DVector};

use crate::collocation::{build_grid, hd1_error_squared, solve_window_with, PiecewisePolySolution, SolverKind};
use crate::error::{config, DaeError, Result};
use crate::matfun::{DaePair, ExactSolution, MatrixFunction};
use crate::reduction::{accurate_ic_matrix, flow_basis, gap_between, transfer_compat, Compatibility, ReductionConfig};
use crate::scalar::Real;
use crate::specdiff::NodeFamily;

/// How the differentiation window width is chosen at each boundary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TauRule<T> {
    Fixed(T),
    /// `tau = h^{mu/2}`
    PowerHalf,
    /// `tau = h^{mu/3}`
    PowerThird,
}

impl<T: Real> TauRule<T> {
    pub fn tau(&self, h: T, mu: usize) -> T {
        match *self {
            TauRule::Fixed(t) => t,
            TauRule::PowerHalf => h.powf(T::from_count(mu) / T::lit(2.0)),
            TauRule::PowerThird => h.powf(T::from_count(mu) / T::lit(3.0)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IvpConfig<T> {
    /// Number of windows `L`.
    pub windows: usize,
    /// Subintervals per window.
    pub n: usize,
    pub nc: usize,
    pub mc: usize,
    pub family: NodeFamily,
    /// Differentiation and rank settings; `tau` there is only used for the
    /// preliminary reduction at `a` and by `TauRule::Fixed`.
    pub reduction: ReductionConfig<T>,
    pub tau_rule: TauRule<T>,
    pub solver: SolverKind,
    /// Reference condition matrix for the gap diagnostic in the transfer log.
    pub g_reference: Option<MatrixFunction<T>>,
}

impl<T: Real> IvpConfig<T> {
    pub fn new(windows: usize, n: usize, nc: usize, mc: usize, reduction: ReductionConfig<T>) -> Self {
        Self {
            windows,
            n,
            nc,
            mc,
            family: NodeFamily::GaussLegendre,
            reduction,
            tau_rule: TauRule::PowerHalf,
            solver: SolverKind::Banded,
            g_reference: None,
        }
    }

    pub fn with_tau_rule(mut self, rule: TauRule<T>) -> Self {
        self.tau_rule = rule;
        self
    }

    pub fn with_reference(mut self, g: MatrixFunction<T>) -> Self {
        self.g_reference = Some(g);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.windows == 0 || self.n == 0 {
            return config("window count and subinterval count must be positive");
        }
        if self.nc == 0 || self.mc <= self.nc {
            return config(format!("need Nc >= 1 and Mc > Nc, got Nc={}, Mc={}", self.nc, self.mc));
        }
        self.reduction.validate()
    }
}

#[derive(Debug, Clone)]
pub struct TransferRecord<T> {
    /// Boundary `w_{lambda-1}`.
    pub t: T,
    pub tau: T,
    pub mu: usize,
    pub g: DMatrix<T>,
    pub g_rhs: DVector<T>,
    /// Opening to the registered reference, if any.
    pub gap: Option<T>,
    /// `|G x(w) - g|` of the following window's solution.
    pub ic_residual: T,
}

#[derive(Debug, Clone)]
pub struct IvpSolution<T> {
    pub interval: (T, T),
    pub windows: Vec<PiecewisePolySolution<T>>,
    pub transfer_log: Vec<TransferRecord<T>>,
    /// Diagnostic for the user's initial condition against the flow subspace at `a`.
    pub initial_compat: Option<Compatibility<T>>,
    pub mu: usize,
}

impl<T: Real> IvpSolution<T> {
    /// Value at `t`; boundaries belong to the later window.
    pub fn eval(&self, t: T) -> Result<DVector<T>> {
        let (a, b) = self.interval;
        let big_h = (b - a) / T::from_count(self.windows.len());
        let raw = ((t - a) / big_h).floor().to_usize().unwrap_or(0);
        let w = raw.min(self.windows.len() - 1);
        if t < a - T::machine_eps() * big_h * T::lit(16.0) {
            return Err(DaeError::Domain { t: t.as_f64(), a: a.as_f64(), b: b.as_f64() });
        }
        self.windows[w].eval(t.max(self.windows[w].grid.t_start))
    }
}

/// Solves `E x' + F x = q`, `G_a x(a) = g_a` on `interval`.
pub fn solve_ivp<T: Real>(
    pair: &DaePair<T>,
    q: &MatrixFunction<T>,
    g_a: &DMatrix<T>,
    g_a_rhs: &DVector<T>,
    interval: (T, T),
    cfg: &IvpConfig<T>,
) -> Result<IvpSolution<T>> {
    cfg.validate()?;
    let (a, b) = interval;
    if !(b > a) || a < pair.interval.0 || b > pair.interval.1 {
        return config("IVP interval must be nonempty and inside the coefficient domain");
    }
    let mut local = pair.clone();
    local.interval = interval;
    let big_h = (b - a) / T::from_count(cfg.windows);
    let h = big_h / T::from_count(cfg.n);
    let max_tau = b - a;

    let pre = accurate_ic_matrix(&local, a, &cfg.reduction.with_tau(cfg.reduction.tau.min(max_tau)))?;
    let (mu, dof) = (pre.mu, pre.dof);
    if g_a.nrows() != dof {
        warn!("initial condition has {} rows, the reduction at a finds {dof} degrees of freedom", g_a.nrows());
    }
    let initial_compat = flow_basis(&local, a, &cfg.reduction.with_tau(cfg.reduction.tau.min(max_tau)))
        .and_then(|s| transfer_compat(g_a, &s, &cfg.reduction.rank_policy))
        .map_err(|e| warn!("initial condition check skipped: {e}"))
        .ok();
    if let Some(c) = &initial_compat {
        if !c.compatible {
            warn!("initial condition may not be accurate: sigma_min = {:e}", c.sigma_min);
        }
    }

    let tau = cfg.tau_rule.tau(h, mu).min(max_tau);
    let red = cfg.reduction.with_tau(tau);
    let mut windows: Vec<PiecewisePolySolution<T>> = Vec::with_capacity(cfg.windows);
    let mut log = Vec::with_capacity(cfg.windows.saturating_sub(1));
    for w in 0..cfg.windows {
        let t0 = a + T::from_count(w) * big_h;
        let grid = build_grid(t0, big_h, cfg.n, cfg.nc, cfg.mc, cfg.family)?;
        let (g, g_rhs, rec) = if w == 0 {
            (g_a.clone(), g_a_rhs.clone(), None)
        } else {
            let out = accurate_ic_matrix(&local, t0, &red)?;
            if out.mu != mu || out.dof != dof {
                return Err(DaeError::Inconsistent {
                    boundary: w,
                    detail: format!("(mu, l) = ({}, {}) at t = {:e}, ({mu}, {dof}) at a", out.mu, out.dof, t0),
                });
            }
            let prev = windows.last().expect("previous window");
            let g_rhs = &out.g * prev.end_value();
            let gap = match &cfg.g_reference {
                Some(r) => Some(gap_between(&out.g, &r.eval(t0))?),
                None => None,
            };
            debug!("boundary {w}: t = {:e}, tau = {:e}, gap = {:?}", t0, tau, gap.map(|x| x.as_f64()));
            let rec = TransferRecord { t: t0, tau, mu: out.mu, g: out.g.clone(), g_rhs: g_rhs.clone(), gap, ic_residual: T::zero() };
            (out.g, g_rhs, Some(rec))
        };
        let sol = solve_window_with(&grid, pair, q, &g, &g_rhs, cfg.solver).map_err(|e| match e {
            DaeError::SingularWindow { sigma_min, .. } => DaeError::SingularWindow { window: w, sigma_min },
            other => other,
        })?;
        if let Some(mut rec) = rec {
            rec.ic_residual = (&g * sol.start_value() - &g_rhs).norm();
            log.push(rec);
        }
        windows.push(sol);
    }
    Ok(IvpSolution { interval, windows, transfer_log: log, initial_compat, mu })
}

/// Root of the summed squared window errors.
pub fn global_error<T: Real>(sol: &IvpSolution<T>, exact: &ExactSolution<T>) -> T {
    sol.windows.iter().fold(T::zero(), |s, w| s + hd1_error_squared(w, exact)).sqrt()
}

/// Root of a sum of squares; the combination rule used by [`global_error`].
pub fn combine_window_errors<T: Real>(errors: &[T]) -> T {
    errors.iter().fold(T::zero(), |s, &e| s + e * e).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collocation::solve_window;
    use crate::problems::{campbell_moore, kcf_index2};

    fn table5_cfg(windows: usize, n: usize, nn: usize) -> IvpConfig<f64> {
        IvpConfig::new(windows, n, nn, nn + 1, ReductionConfig::spectral(nn + 1, 0.1)).with_tau_rule(TauRule::PowerThird)
    }

    #[test]
    fn pythagorean_sum() {
        assert!((combine_window_errors(&[3e-3f64, 4e-3]) - 5e-3).abs() < 1e-18);
    }

    #[test]
    fn tau_rules() {
        assert_eq!(TauRule::Fixed(0.3).tau(0.5, 3), 0.3);
        assert!((TauRule::<f64>::PowerHalf.tau(0.25, 2) - 0.25).abs() < 1e-15);
        assert!((TauRule::<f64>::PowerThird.tau(0.25, 3) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn single_window_is_solve_window() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        let cfg = table5_cfg(1, 4, 4);
        let s = solve_ivp(&p.pair, &p.q, &p.g_a, &p.g_a_rhs, p.interval, &cfg).unwrap();
        let grid = build_grid(0.0, 5.0, 4, 4, 5, NodeFamily::GaussLegendre).unwrap();
        let w = solve_window(&grid, &p.pair, &p.q, &p.g_a, &p.g_a_rhs).unwrap();
        assert_eq!(s.windows[0].diff_values, w.diff_values);
        assert_eq!(s.windows[0].alg_values, w.alg_values);
        assert!(s.transfer_log.is_empty());
    }

    #[test]
    fn zero_data_zero_solution() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        let q = MatrixFunction::constant(DMatrix::zeros(7, 1));
        let s = solve_ivp(&p.pair, &q, &p.g_a, &DVector::zeros(4), (0.0, 1.0), &table5_cfg(4, 1, 4)).unwrap();
        for w in &s.windows {
            assert!(w.diff_values.iter().chain(&w.alg_values).all(|v| v.amax() == 0.0));
        }
        assert_eq!(s.transfer_log.len(), 3);
    }

    #[test]
    fn transfer_bookkeeping() {
        let p = campbell_moore::<f64>(5.0).unwrap();
        let cfg = table5_cfg(5, 1, 4).with_reference(p.g_exact.clone());
        let s = solve_ivp(&p.pair, &p.q, &p.g_a, &p.g_a_rhs, (0.0, 1.0), &cfg).unwrap();
        for (i, r) in s.transfer_log.iter().enumerate() {
            let w = &s.windows[i + 1];
            assert_eq!(w.grid.t_start, r.t);
            let res = (&r.g * w.start_value() - &r.g_rhs).norm();
            assert!((res - r.ic_residual).abs() < 1e-12);
            assert!(r.gap.unwrap() < 1e-2);
        }
        // windows abut
        for pair in s.windows.windows(2) {
            assert!((pair[0].grid.t_end() - pair[1].grid.t_start).abs() < 1e-15);
        }
    }

    #[test]
    fn kcf_without_conditions() {
        let p = kcf_index2(f64::sin, f64::cos, |t| -t.sin());
        let s = solve_ivp(&p.pair, &p.q, &p.g_a, &p.g_a_rhs, p.interval, &table5_cfg(2, 4, 4)).unwrap();
        assert!(global_error(&s, &p.exact) < 1e-4);
        assert!((s.eval(0.6).unwrap()[1] - 0.6f64.cos()).abs() < 1e-5);
    }
}
