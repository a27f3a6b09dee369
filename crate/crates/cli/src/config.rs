//! Run parameters, from flags and an optional JSON file. Flags win.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use daeaic::reduction::ReductionConfig;
use daeaic::specdiff::{DiffKind, NodeFamily, WindowMode};
use daeaic::stepper::TauRule;
use daeaic::subspace::BasisStrategy;
use serde::Deserialize;

/// Configuration problems; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

pub fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// campbell-moore, chua-riaza-1/2/3 or kcf2
    #[arg(long)]
    pub problem: Option<String>,
    #[arg(long = "t-bar", allow_negative_numbers = true)]
    pub t_bar: Option<f64>,
    /// Differentiation window width (a fixed width for `solve`)
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long = "Nd")]
    #[serde(rename = "Nd")]
    pub nd: Option<usize>,
    #[arg(long = "Md")]
    #[serde(rename = "Md")]
    pub md: Option<usize>,
    #[arg(long = "Nc")]
    #[serde(rename = "Nc")]
    pub nc: Option<usize>,
    #[arg(long = "Mc")]
    #[serde(rename = "Mc")]
    pub mc: Option<usize>,
    /// Number of windows
    #[arg(long = "L")]
    #[serde(rename = "L")]
    pub windows: Option<usize>,
    /// Subintervals per window
    #[arg(long = "n")]
    pub n: Option<usize>,
    /// central, left or right
    #[arg(long)]
    pub mode: Option<String>,
    /// svd-ode or qr-fixed
    #[arg(long)]
    pub strategy: Option<String>,
    /// interp or lsq
    #[arg(long)]
    pub diff: Option<String>,
    /// Differentiation nodes: cheb2, radau, gauss (equidistant for diffcheck)
    #[arg(long)]
    pub nodes: Option<String>,
    /// Collocation nodes: gauss or radau
    #[arg(long)]
    pub colloc: Option<String>,
    /// half (tau = h^(mu/2)), third (tau = h^(mu/3)) or fixed (uses --tau)
    #[arg(long = "tau-rule")]
    pub tau_rule: Option<String>,
    /// Samples per subinterval in the solution dump
    #[arg(long)]
    pub samples: Option<usize>,
    /// Preset sweep reproducing a table: 1, 2, 5 or 6
    #[arg(long)]
    pub table: Option<u32>,
    /// gap or ivp
    #[arg(long)]
    pub sweep: Option<String>,
    #[arg(long = "Md-list", value_delimiter = ',')]
    #[serde(rename = "Md_list")]
    pub md_list: Option<Vec<usize>>,
    #[arg(long = "tau-list", value_delimiter = ',')]
    pub tau_list: Option<Vec<f64>>,
    /// Number of tau values when halving from --tau
    #[arg(long)]
    pub halvings: Option<usize>,
    #[arg(long = "L-list", value_delimiter = ',')]
    #[serde(rename = "L_list")]
    pub l_list: Option<Vec<usize>>,
    #[arg(long = "n-list", value_delimiter = ',')]
    pub n_list: Option<Vec<usize>>,
    #[arg(long = "N-list", value_delimiter = ',')]
    #[serde(rename = "N_list")]
    pub big_n_list: Option<Vec<usize>>,
    /// Errors at or below this are left out of slope fits
    #[arg(long)]
    pub plateau: Option<f64>,
    #[arg(long = "M-min")]
    #[serde(rename = "M_min")]
    pub m_min: Option<usize>,
    #[arg(long = "M-max")]
    #[serde(rename = "M_max")]
    pub m_max: Option<usize>,
    /// Worker threads for sweeps
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Output CSV path; stdout when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! prefer {
    ($a:ident, $b:ident; $($f:ident),* $(,)?) => {
        Params { $($f: $a.$f.or($b.$f)),* }
    };
}

impl Params {
    /// Fills unset fields from `file`.
    pub fn over(self, file: Params) -> Params {
        let a = self;
        let b = file;
        prefer!(a, b; problem, t_bar, tau, nd, md, nc, mc, windows, n, mode, strategy, diff, nodes, colloc,
            tau_rule, samples, table, sweep, md_list, tau_list, halvings, l_list, n_list, big_n_list, plateau,
            m_min, m_max, jobs, out)
    }

    pub fn load(flags: Params, config: Option<&Path>) -> Result<Params> {
        let Some(path) = config else { return Ok(flags) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: Params = serde_json::from_str(&text).map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
        Ok(flags.over(file))
    }

    pub fn problem(&self) -> Result<String> {
        match &self.problem {
            Some(p) => Ok(p.clone()),
            None => usage("--problem is required"),
        }
    }

    pub fn diff_kind(&self) -> Result<DiffKind> {
        parse_opt(self.diff.as_deref(), DiffKind::Interpolatory, DiffKind::parse, "--diff", "interp, lsq")
    }

    pub fn mode(&self) -> Result<WindowMode> {
        parse_opt(self.mode.as_deref(), WindowMode::Central, WindowMode::parse, "--mode", "central, left, right")
    }

    pub fn strategy(&self) -> Result<BasisStrategy> {
        parse_opt(self.strategy.as_deref(), BasisStrategy::SvdOde, BasisStrategy::parse, "--strategy", "svd-ode, qr-fixed")
    }

    pub fn nodes(&self, default: NodeFamily) -> Result<NodeFamily> {
        parse_opt(self.nodes.as_deref(), default, NodeFamily::parse, "--nodes", "cheb2, radau, gauss, equidistant")
    }

    pub fn colloc(&self) -> Result<NodeFamily> {
        let f = parse_opt(self.colloc.as_deref(), NodeFamily::GaussLegendre, NodeFamily::parse, "--colloc", "gauss, radau")?;
        match f {
            NodeFamily::GaussLegendre | NodeFamily::Radau => Ok(f),
            _ => usage("--colloc must be gauss or radau"),
        }
    }

    pub fn tau_rule(&self) -> Result<TauRule<f64>> {
        let rule = match (self.tau_rule.as_deref(), self.tau) {
            (None, Some(t)) | (Some("fixed"), Some(t)) => TauRule::Fixed(t),
            (Some("fixed"), None) => return usage("--tau-rule fixed needs --tau"),
            (None, None) | (Some("half"), _) => TauRule::PowerHalf,
            (Some("third"), _) => TauRule::PowerThird,
            (Some(other), _) => return usage(format!("unknown --tau-rule '{other}', expected half, third or fixed")),
        };
        Ok(rule)
    }

    /// Reduction settings; `md` and `nd` default from the differentiation kind.
    pub fn reduction(&self, md_default: usize, tau_default: f64) -> Result<ReductionConfig<f64>> {
        let kind = self.diff_kind()?;
        let md = self.md.unwrap_or(md_default);
        let nd = match (self.nd, kind) {
            (Some(nd), _) => nd,
            (None, DiffKind::Interpolatory) => md.saturating_sub(1),
            (None, DiffKind::LeastSquares) => md.saturating_sub(2),
        };
        let tau = self.tau.unwrap_or(tau_default);
        let cfg = ReductionConfig {
            nd,
            md,
            diff_kind: kind,
            node_family: self.nodes(NodeFamily::Chebyshev2)?,
            window_mode: self.mode()?,
            tau,
            basis_strategy: self.strategy()?,
            ..ReductionConfig::default()
        };
        cfg.validate().map_err(|e| UsageError(e.to_string()))?;
        Ok(cfg)
    }

    /// Output path with the directory override applied to relative paths.
    pub fn out_path(&self) -> Option<PathBuf> {
        let p = self.out.clone()?;
        match std::env::var_os("DAEAIC_OUT_DIR") {
            Some(dir) if p.is_relative() => Some(Path::new(&dir).join(p)),
            _ => Some(p),
        }
    }
}

fn parse_opt<T>(v: Option<&str>, default: T, parse: fn(&str) -> Option<T>, flag: &str, allowed: &str) -> Result<T> {
    match v {
        None => Ok(default),
        Some(s) => match parse(s) {
            Some(x) => Ok(x),
            None => usage(format!("unknown {flag} '{s}', expected one of {allowed}")),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_take_precedence() {
        let flags = Params { md: Some(7), ..Params::default() };
        let file: Params = serde_json::from_str(r#"{"Md": 3, "tau": 0.05, "problem": "kcf2"}"#).unwrap();
        let p = flags.over(file);
        assert_eq!(p.md, Some(7));
        assert_eq!(p.tau, Some(0.05));
        assert_eq!(p.problem.as_deref(), Some("kcf2"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(serde_json::from_str::<Params>(r#"{"Md": 3, "colour": 1}"#).is_err());
    }

    #[test]
    fn reduction_defaults() {
        let p = Params { diff: Some("lsq".into()), md: Some(6), ..Params::default() };
        let r = p.reduction(5, 0.1).unwrap();
        assert_eq!((r.nd, r.md), (4, 6));
        let p = Params { mode: Some("sideways".into()), ..Params::default() };
        assert!(p.reduction(5, 0.1).is_err());
    }

    #[test]
    fn tau_rule_from_flags() {
        assert_eq!(Params::default().tau_rule().unwrap(), TauRule::PowerHalf);
        let p = Params { tau: Some(0.2), ..Params::default() };
        assert_eq!(p.tau_rule().unwrap(), TauRule::Fixed(0.2));
        let p = Params { tau_rule: Some("fixed".into()), ..Params::default() };
        assert!(p.tau_rule().is_err());
    }
}
