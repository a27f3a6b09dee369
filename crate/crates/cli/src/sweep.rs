//! `converge`: parameter sweeps for gaps and solver errors.

use std::collections::BTreeMap;

use anyhow::Result;
use daeaic::problems::problem_by_name;
use daeaic::reduction::{accurate_ic_matrix, gap_to_reference};
use daeaic::specdiff::DiffKind;
use daeaic::stepper::{global_error, solve_ivp};
use rayon::prelude::*;

use crate::commands::ivp_config;
use crate::config::{usage, Params, UsageError};
use crate::output::{emit, gnuplot_script, loglog_slope, sci, sibling, write_file, Curve, Table};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GapCell {
    pub md: usize,
    pub tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct IvpCell {
    pub windows: usize,
    pub n: usize,
    pub big_n: usize,
}

#[derive(Debug, Clone)]
pub enum Sweep {
    Gap(Vec<GapCell>),
    Ivp(Vec<IvpCell>),
}

/// Rows of the solver tables: total grid `L n` with `n in {1, 2, 5, L n}`.
fn table_rows(totals: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for &t in totals {
        for n in [1, 2, 5, t] {
            if t % n == 0 && !out.contains(&(t / n, n)) {
                out.push((t / n, n));
            }
        }
    }
    out
}

fn halving(tau0: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| tau0 / 2f64.powi(i as i32)).collect()
}

/// Applies a `--table` preset to unset fields.
pub fn preset(p: &Params) -> Result<Params> {
    let Some(t) = p.table else { return Ok(p.clone()) };
    let base = Params { problem: Some("campbell-moore".into()), ..Params::default() };
    let filled = match t {
        1 | 2 => Params {
            sweep: Some("gap".into()),
            md_list: Some(vec![3, 5, 7, 9, 11]),
            tau: Some(0.1),
            halvings: Some(5),
            mode: Some(if t == 1 { "central" } else { "left" }.into()),
            ..base
        },
        5 | 6 => Params {
            sweep: Some("ivp".into()),
            diff: Some(if t == 5 { "interp" } else { "lsq" }.into()),
            big_n_list: Some(if t == 5 { vec![2, 4, 6, 8, 10] } else { vec![1, 3, 5, 7, 9] }),
            tau_rule: Some("third".into()),
            ..base
        },
        other => return usage(format!("unknown --table {other}, expected 1, 2, 5 or 6")),
    };
    Ok(p.clone().over(filled))
}

pub fn build(p: &Params) -> Result<Sweep> {
    let kind = p.sweep.clone().unwrap_or_else(|| "gap".into());
    match kind.as_str() {
        "gap" => {
            let mds = p.md_list.clone().unwrap_or_else(|| vec![p.md.unwrap_or(5)]);
            let taus = match &p.tau_list {
                Some(l) => l.clone(),
                None => halving(p.tau.unwrap_or(0.1), p.halvings.unwrap_or(5)),
            };
            if taus.iter().any(|t| !(*t > 0.0)) {
                return usage("tau values must be positive");
            }
            Ok(Sweep::Gap(mds.iter().flat_map(|&md| taus.iter().map(move |&tau| GapCell { md, tau })).collect()))
        }
        "ivp" => {
            let ns_big = p.big_n_list.clone().unwrap_or_else(|| vec![p.nc.unwrap_or(4)]);
            let pairs: Vec<(usize, usize)> = match (&p.l_list, &p.n_list, p.table) {
                (None, None, Some(_)) => table_rows(&[10, 20, 40, 80, 160, 320]),
                (ls, ns, _) => {
                    let ls = ls.clone().unwrap_or_else(|| vec![p.windows.unwrap_or(1)]);
                    let ns = ns.clone().unwrap_or_else(|| vec![p.n.unwrap_or(10)]);
                    ls.iter().flat_map(|&l| ns.iter().map(move |&n| (l, n))).collect()
                }
            };
            if pairs.iter().any(|&(l, n)| l == 0 || n == 0) {
                return usage("window and subinterval counts must be positive");
            }
            Ok(Sweep::Ivp(
                pairs
                    .iter()
                    .flat_map(|&(windows, n)| ns_big.iter().map(move |&big_n| IvpCell { windows, n, big_n }))
                    .collect(),
            ))
        }
        other => usage(format!("unknown --sweep '{other}', expected gap or ivp")),
    }
}

struct Outcome {
    table: Table,
    slopes: Table,
    curves: Vec<Curve>,
    xlabel: &'static str,
    ylabel: &'static str,
    failed: usize,
}

fn run_gap(p: &Params, cells: &[GapCell]) -> Result<Outcome> {
    let b = problem_by_name::<f64>(&p.problem()?).map_err(|e| UsageError(e.to_string()))?;
    let t_bar = p.t_bar.unwrap_or(0.0);
    let g_ref = b.g_exact.eval(t_bar);
    let lsq = matches!(p.diff_kind()?, DiffKind::LeastSquares);
    // validate the shared settings once
    p.reduction(if lsq { 5 } else { 3 }, 0.1)?;
    let results: Vec<(GapCell, std::result::Result<(f64, usize, usize), String>)> = cells
        .par_iter()
        .map(|&c| {
            let q = Params { md: Some(c.md), nd: p.nd, tau: Some(c.tau), ..p.clone() };
            let r = q
                .reduction(c.md, c.tau)
                .map_err(|e| e.to_string())
                .and_then(|cfg| accurate_ic_matrix(&b.pair, t_bar, &cfg).map_err(|e| e.to_string()))
                .and_then(|o| gap_to_reference(&o, &g_ref).map(|g| (g, o.mu, o.dof)).map_err(|e| e.to_string()));
            (c, r)
        })
        .collect();
    let mut table = Table::new(&["Md", "tau", "gap", "mu", "l", "note"]);
    let mut failed = 0;
    let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for (c, r) in &results {
        let (gap, mu, l, note) = match r {
            Ok((g, mu, l)) => (*g, mu.to_string(), l.to_string(), String::new()),
            Err(e) => {
                failed += 1;
                (f64::NAN, String::new(), String::new(), e.clone())
            }
        };
        groups.entry(c.md).or_default().push((c.tau, gap));
        table.push(vec![c.md.to_string(), sci(c.tau), sci(gap), mu, l, note]);
    }
    let floor = p.plateau.unwrap_or(1e-12);
    let mut slopes = Table::new(&["Md", "points", "slope"]);
    let mut curves = Vec::new();
    for (md, pts) in &groups {
        if let Some((s, n)) = loglog_slope(pts, floor) {
            slopes.push(vec![md.to_string(), n.to_string(), format!("{s:.3}")]);
        }
        curves.push(Curve { title: format!("M={md}"), x_col: 2, y_col: 3, filter: vec![(1, md.to_string())] });
    }
    Ok(Outcome { table, slopes, curves, xlabel: "tau", ylabel: "gap", failed })
}

fn run_ivp(p: &Params, cells: &[IvpCell]) -> Result<Outcome> {
    let b = problem_by_name::<f64>(&p.problem()?).map_err(|e| UsageError(e.to_string()))?;
    let (a, bb) = b.interval;
    let results: Vec<(IvpCell, std::result::Result<f64, String>)> = cells
        .par_iter()
        .map(|&c| {
            let r = ivp_config(p, c.windows, c.n, c.big_n)
                .map_err(|e| e.to_string())
                .and_then(|cfg| {
                    solve_ivp(&b.pair, &b.q, &b.g_a, &b.g_a_rhs, b.interval, &cfg)
                        .map(|s| global_error(&s, &b.exact))
                        .map_err(|e| e.to_string())
                });
            (c, r)
        })
        .collect();
    let mut table = Table::new(&["L", "n", "N", "h", "error", "note"]);
    let mut failed = 0;
    // fixed L with varying n, and fixed n with varying L
    let mut by_l: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    let mut by_n: BTreeMap<(usize, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for (c, r) in &results {
        let h = (bb - a) / (c.windows * c.n) as f64;
        let (err, note) = match r {
            Ok(e) => (*e, String::new()),
            Err(e) => {
                failed += 1;
                (f64::NAN, e.clone())
            }
        };
        by_l.entry((c.big_n, c.windows)).or_default().push((h, err));
        by_n.entry((c.big_n, c.n)).or_default().push((h, err));
        table.push(vec![c.windows.to_string(), c.n.to_string(), c.big_n.to_string(), sci(h), sci(err), note]);
    }
    let floor = p.plateau.unwrap_or(1e-12);
    let mut slopes = Table::new(&["N", "fixed", "value", "points", "slope"]);
    let mut curves = Vec::new();
    for (label, groups) in [("L", &by_l), ("n", &by_n)] {
        for ((big_n, v), pts) in groups {
            if pts.len() < 2 {
                continue;
            }
            if let Some((s, k)) = loglog_slope(pts, floor) {
                slopes.push(vec![big_n.to_string(), label.into(), v.to_string(), k.to_string(), format!("{s:.3}")]);
            }
            let col = if label == "L" { 1 } else { 2 };
            curves.push(Curve {
                title: format!("N={big_n}, {label}={v}"),
                x_col: 4,
                y_col: 5,
                filter: vec![(3, big_n.to_string()), (col, v.to_string())],
            });
        }
    }
    Ok(Outcome { table, slopes, curves, xlabel: "h", ylabel: "error", failed })
}

pub fn converge(p: &Params) -> Result<()> {
    let p = preset(p)?;
    let sweep = build(&p)?;
    let run = || match &sweep {
        Sweep::Gap(c) => run_gap(&p, c),
        Sweep::Ivp(c) => run_ivp(&p, c),
    };
    let out = match p.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build()?.install(run)?,
        None => run()?,
    };
    let path = p.out_path();
    emit(&out.table, path.as_deref())?;
    match &path {
        Some(path) => {
            write_file(&sibling(path, "_slopes.csv"), &out.slopes.to_csv()?)?;
            let csv_name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            let script = gnuplot_script(&csv_name, out.xlabel, out.ylabel, &out.curves);
            let script = format!("set terminal pngcairo size 900,600\nset output '{}'\n{script}", sibling(path, ".png").file_name().unwrap().to_string_lossy());
            write_file(&sibling(path, ".gp"), script.as_bytes())?;
        }
        None => {
            for r in &out.slopes.rows {
                eprintln!("slope {}", r.join(" "));
            }
        }
    }
    if out.failed > 0 {
        anyhow::bail!("{} of {} cells failed", out.failed, out.table.rows.len());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows_match_layout() {
        assert_eq!(table_rows(&[10]), vec![(10, 1), (5, 2), (2, 5), (1, 10)]);
        assert_eq!(table_rows(&[20]).len(), 4);
    }

    #[test]
    fn presets_fill_only_unset_fields() {
        let p = preset(&Params { table: Some(1), md_list: Some(vec![3]), ..Params::default() }).unwrap();
        assert_eq!(p.md_list, Some(vec![3]));
        assert_eq!(p.mode.as_deref(), Some("central"));
        match build(&p).unwrap() {
            Sweep::Gap(c) => assert_eq!(c.len(), 5),
            _ => panic!(),
        }
        assert!(preset(&Params { table: Some(4), ..Params::default() }).is_err());
    }

    #[test]
    fn empty_sweep() {
        let p = Params { md_list: Some(vec![]), ..Params::default() };
        match build(&p).unwrap() {
            Sweep::Gap(c) => assert!(c.is_empty()),
            _ => panic!(),
        }
    }
}
