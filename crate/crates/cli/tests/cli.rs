use std::path::PathBuf;
use std::process::{Command, Output};

fn daeaic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_daeaic")).args(args).env_remove("DAEAIC_OUT_DIR").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Parses a one-row CSV into (header, row) pairs.
fn single_row(text: &str) -> Vec<(String, String)> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    header.iter().zip(row).map(|(h, v)| (h.to_string(), v.to_string())).collect()
}

fn field(row: &[(String, String)], name: &str) -> String {
    row.iter().find(|(h, _)| h == name).unwrap().1.clone()
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("daeaic-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn analyze_campbell_moore_gap() {
    let o = daeaic(&["analyze", "--problem", "campbell-moore", "--Md", "5", "--tau", "0.1", "--mode", "central"]);
    assert!(o.status.success());
    let row = single_row(&stdout(&o));
    let gap: f64 = field(&row, "gap").parse().unwrap();
    assert!(gap > 2.62e-6 / 3.0 && gap < 2.62e-6 * 3.0, "{gap}");
    assert_eq!(field(&row, "mu"), "3");
    assert_eq!(field(&row, "l"), "4");
}

#[test]
fn analyze_kcf_has_no_freedom() {
    let o = daeaic(&["analyze", "--problem", "kcf2"]);
    assert!(o.status.success());
    let row = single_row(&stdout(&o));
    assert_eq!(field(&row, "l"), "0");
    assert_eq!(field(&row, "gap").parse::<f64>().unwrap(), 0.0);
}

#[test]
fn analyze_chua_index_two() {
    let o = daeaic(&["analyze", "--problem", "chua-riaza-2"]);
    assert!(o.status.success());
    let row = single_row(&stdout(&o));
    assert_eq!((field(&row, "mu"), field(&row, "l")), ("2".into(), "2".into()));
}

#[test]
fn analyze_unknown_problem_is_usage_error() {
    let o = daeaic(&["analyze", "--problem", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn diffcheck_cheb2() {
    let o = daeaic(&["diffcheck", "--nodes", "cheb2"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "3,4.00000e0,6.40000e1,upper,true"), "{text}");
    assert_eq!(text.lines().count(), 20);
    assert!(text.lines().skip(1).all(|l| l.ends_with(",true")));
}

#[test]
fn diffcheck_equidistant_lower_bound() {
    let o = daeaic(&["diffcheck", "--nodes", "equidistant", "--M-max", "15"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.lines().skip(1).all(|l| l.contains(",lower,true")), "{text}");
}

#[test]
fn empty_sweep_writes_header_only() {
    let cfg = tmp("empty.json");
    std::fs::write(&cfg, r#"{"problem": "campbell-moore", "sweep": "gap", "Md_list": []}"#).unwrap();
    let o = daeaic(&["converge", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o), "Md,tau,gap,mu,l,note\n");
}

#[test]
fn converge_is_deterministic() {
    let args = ["converge", "--problem", "campbell-moore", "--Md-list", "3,5", "--halvings", "3", "--jobs", "3"];
    let a = daeaic(&args);
    let b = daeaic(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(stdout(&a).lines().count(), 7);
}

#[test]
fn converge_writes_slopes_and_script() {
    let out = tmp("gap.csv");
    let o = daeaic(&["converge", "--problem", "campbell-moore", "--Md-list", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let slopes = std::fs::read_to_string(out.with_file_name("gap_slopes.csv")).unwrap();
    let row = single_row(&slopes);
    let s: f64 = field(&row, "slope").parse().unwrap();
    assert!((s - 2.0).abs() < 0.1, "{s}");
    let gp = std::fs::read_to_string(out.with_file_name("gap.gp")).unwrap();
    assert!(gp.contains("'gap.csv'"));
}

#[test]
fn config_rejects_unknown_keys() {
    let cfg = tmp("bad.json");
    std::fs::write(&cfg, r#"{"problem": "kcf2", "colour": 3}"#).unwrap();
    let o = daeaic(&["analyze", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let cfg = tmp("md.json");
    std::fs::write(&cfg, r#"{"problem": "campbell-moore", "Md": 3, "tau": 0.1}"#).unwrap();
    let o = daeaic(&["analyze", "--config", cfg.to_str().unwrap(), "--Md", "5"]);
    assert!(o.status.success());
    let row = single_row(&stdout(&o));
    assert_eq!(field(&row, "Md"), "5");
    assert_eq!(field(&row, "tau"), "1.00000e-1");
}

#[test]
fn solve_campbell_moore_global() {
    let out = tmp("sol.csv");
    let o = daeaic(&["solve", "--problem", "campbell-moore", "--L", "1", "--n", "10", "--Nc", "4", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let err = String::from_utf8(o.stderr).unwrap();
    let line = err.lines().find(|l| l.starts_with("error_hd1")).unwrap();
    let e: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!(e > 6.24e-3 / 5.0 && e < 6.24e-3 * 5.0, "{e}");
    let csv = std::fs::read_to_string(out).unwrap();
    assert!(csv.starts_with("t,x1,x2,x3,x4,x5,x6,x7\n"));
}
