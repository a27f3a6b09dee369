//! `analyze`, `solve` and `diffcheck`.

use anyhow::Result;
use daeaic::problems::problem_by_name;
use daeaic::reduction::{accurate_ic_matrix, gap_to_reference};
use daeaic::specdiff::{norm_bound_report, BoundKind, DiffOperator, NodeFamily, Window};
use daeaic::stepper::{global_error, solve_ivp, IvpConfig};
use log::info;

use crate::config::{usage, Params, UsageError};
use crate::output::{emit, sci, Table};

fn bundle(p: &Params) -> Result<daeaic::ProblemBundle> {
    problem_by_name(&p.problem()?).map_err(|e| UsageError(e.to_string()).into())
}

pub fn analyze(p: &Params) -> Result<()> {
    let b = bundle(p)?;
    let t_bar = p.t_bar.unwrap_or(0.0);
    let cfg = p.reduction(5, 0.1)?;
    let out = accurate_ic_matrix(&b.pair, t_bar, &cfg)?;
    let gap = gap_to_reference(&out, &b.g_exact.eval(t_bar))?;
    let ranks = out.ranks.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(";");
    let g_norm = daeaic::subspace::singular_values(&out.g).first().copied().unwrap_or(0.0);
    eprintln!("problem   {}", b.name);
    eprintln!("t_bar     {t_bar}");
    eprintln!("window    [{}, {}] ({:?})", out.placement.window.c, out.placement.window.end(), out.placement.mode);
    eprintln!("index     {}", out.mu);
    eprintln!("dof       {}", out.dof);
    eprintln!("ranks     {}", ranks.replace(';', " "));
    eprintln!("|G_tau|   {}", sci(g_norm));
    eprintln!("gap       {}", sci(gap));
    let mut t = Table::new(&[
        "problem", "t_bar", "Nd", "Md", "tau", "mode", "strategy", "diff", "nodes", "mu", "l", "ranks", "g_norm", "gap",
    ]);
    t.push(vec![
        b.name.clone(),
        sci(t_bar),
        cfg.nd.to_string(),
        cfg.md.to_string(),
        sci(cfg.tau),
        format!("{:?}", cfg.window_mode).to_lowercase(),
        p.strategy.clone().unwrap_or_else(|| "svd-ode".into()),
        p.diff.clone().unwrap_or_else(|| "interp".into()),
        cfg.node_family.name().into(),
        out.mu.to_string(),
        out.dof.to_string(),
        ranks,
        sci(g_norm),
        sci(gap),
    ]);
    emit(&t, p.out_path().as_deref())
}

/// IVP configuration shared by `solve` and the IVP sweeps.
pub fn ivp_config(p: &Params, windows: usize, n: usize, nc: usize) -> Result<IvpConfig<f64>> {
    let lsq = matches!(p.diff_kind()?, daeaic::specdiff::DiffKind::LeastSquares);
    let mc = p.mc.unwrap_or(if lsq { nc + 2 } else { nc + 1 });
    let md_default = if lsq { nc + 2 } else { nc + 1 };
    let red = p.reduction(md_default, 0.1)?;
    let mut cfg = IvpConfig::new(windows, n, nc, mc, red).with_tau_rule(p.tau_rule()?);
    cfg.family = p.colloc()?;
    cfg.validate().map_err(|e| UsageError(e.to_string()))?;
    Ok(cfg)
}

pub fn solve(p: &Params) -> Result<()> {
    let b = bundle(p)?;
    let windows = p.windows.unwrap_or(1);
    let n = p.n.unwrap_or(10);
    let nc = p.nc.unwrap_or(4);
    let cfg = ivp_config(p, windows, n, nc)?.with_reference(b.g_exact.clone());
    let sol = solve_ivp(&b.pair, &b.q, &b.g_a, &b.g_a_rhs, b.interval, &cfg)?;
    let err = global_error(&sol, &b.exact);

    let samples = p.samples.unwrap_or(4).max(1);
    let m = b.pair.m;
    let mut header: Vec<String> = vec!["t".into()];
    header.extend((1..=m).map(|i| format!("x{i}")));
    let mut t = Table { header, rows: Vec::new() };
    let mut max_abs: f64 = 0.0;
    let mut push = |tt: f64, x: nalgebra::DVector<f64>| {
        max_abs = max_abs.max((&x - b.exact.x.eval(tt)).amax());
        let mut row = vec![sci(tt)];
        row.extend(x.iter().map(|v| sci(*v)));
        t.rows.push(row);
    };
    for w in &sol.windows {
        for j in 0..w.grid.n {
            for k in 0..samples {
                let tt = w.grid.breakpoint(j) + w.grid.h * (k as f64) / (samples as f64);
                push(tt, w.eval(tt)?);
            }
        }
    }
    let last = sol.windows.last().expect("at least one window");
    push(last.grid.t_end(), last.end_value());

    for r in &sol.transfer_log {
        info!("boundary t={} tau={} gap={:?} ic_residual={}", sci(r.t), sci(r.tau), r.gap.map(sci), sci(r.ic_residual));
    }
    eprintln!("problem        {}", b.name);
    eprintln!("windows        {windows} x {n} subintervals, Nc={}, Mc={}", cfg.nc, cfg.mc);
    eprintln!("index          {}", sol.mu);
    eprintln!("error_hd1      {}", sci(err));
    eprintln!("max_abs_error  {}", sci(max_abs));
    emit(&t, p.out_path().as_deref())
}

pub fn diffcheck(p: &Params) -> Result<()> {
    let family = p.nodes(NodeFamily::Chebyshev2)?;
    if !matches!(family, NodeFamily::Chebyshev2 | NodeFamily::Equidistant) {
        return usage("diffcheck supports --nodes cheb2 or equidistant");
    }
    let lo = p.m_min.unwrap_or(2);
    let hi = p.m_max.unwrap_or(20);
    if lo < 2 || hi < lo {
        return usage(format!("invalid M range {lo}..{hi}"));
    }
    let mut t = Table::new(&["M", "inf_norm", "bound", "kind", "satisfied"]);
    let mut all = true;
    for m in lo..=hi {
        let d = DiffOperator::<f64>::new(family, daeaic::specdiff::DiffKind::Interpolatory, m, m - 1, Window::new(-1.0, 2.0))?;
        let r = norm_bound_report(&d)?;
        all &= r.satisfied;
        t.push(vec![
            m.to_string(),
            sci(r.inf_norm),
            sci(r.bound),
            match r.kind {
                BoundKind::Upper => "upper".into(),
                BoundKind::Lower => "lower".into(),
            },
            r.satisfied.to_string(),
        ]);
    }
    emit(&t, p.out_path().as_deref())?;
    if !all {
        anyhow::bail!("norm bound violated for some M");
    }
    Ok(())
}
