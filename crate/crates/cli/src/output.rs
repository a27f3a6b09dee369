//! CSV tables, slope fits and gnuplot scripts.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

/// Scientific notation with 6 significant digits.
pub fn sci(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.5e}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))?)
    }
}

/// Writes `table` to `path`, or to stdout when no path is given.
pub fn emit(table: &Table, path: Option<&Path>) -> Result<()> {
    let bytes = table.to_csv()?;
    match path {
        Some(p) => write_file(p, &bytes),
        None => {
            std::io::stdout().write_all(&bytes)?;
            Ok(())
        }
    }
}

pub fn write_file(p: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))
}

/// `dir/stem<suffix>` next to `p`.
pub fn sibling(p: &Path, suffix: &str) -> PathBuf {
    let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    p.with_file_name(format!("{stem}{suffix}"))
}

/// Least-squares slope of `log y` against `log x` over points with `y > floor`.
/// `None` with fewer than two usable points.
pub fn loglog_slope(points: &[(f64, f64)], floor: f64) -> Option<(f64, usize)> {
    let use_: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && y.is_finite() && *y > floor)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = use_.len();
    if n < 2 {
        return None;
    }
    let mx = use_.iter().map(|p| p.0).sum::<f64>() / n as f64;
    let my = use_.iter().map(|p| p.1).sum::<f64>() / n as f64;
    let sxx: f64 = use_.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = use_.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some((sxy / sxx, n))
}

/// One curve of a log-log plot: CSV column numbers (1-based) and a filter.
pub struct Curve {
    pub title: String,
    pub x_col: usize,
    pub y_col: usize,
    /// `(column, value)` pairs a row must match.
    pub filter: Vec<(usize, String)>,
}

pub fn gnuplot_script(csv_name: &str, xlabel: &str, ylabel: &str, curves: &[Curve]) -> String {
    let mut s = String::new();
    s += "set datafile separator ','\n";
    s += "set logscale xy\n";
    s += "set format y '%.0e'\n";
    s += &format!("set xlabel '{xlabel}'\nset ylabel '{ylabel}'\n");
    s += "set key outside right\n";
    if curves.is_empty() {
        s += "# no data\n";
        return s;
    }
    let parts: Vec<String> = curves
        .iter()
        .map(|c| {
            let cond = if c.filter.is_empty() {
                "1".to_string()
            } else {
                c.filter.iter().map(|(col, v)| format!("${col}=={v}")).collect::<Vec<_>>().join(" && ")
            };
            format!(
                "'{csv_name}' every ::1 using ({cond} ? ${} : 1/0):${} with linespoints title '{}'",
                c.x_col, c.y_col, c.title
            )
        })
        .collect();
    s += "plot ";
    s += &parts.join(", \\\n     ");
    s += "\n";
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<(f64, f64)> = [0.1, 0.05, 0.025].iter().map(|&h: &f64| (h, 3.0 * h.powi(4))).collect();
        let (s, n) = loglog_slope(&pts, 0.0).unwrap();
        assert!((s - 4.0).abs() < 1e-12 && n == 3);
        assert!(loglog_slope(&pts[..1], 0.0).is_none());
        assert!(loglog_slope(&[(0.1, 1e-16), (0.05, 1e-17)], 1e-12).is_none());
    }

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), sci(6.24e-3)]);
        assert_eq!(String::from_utf8(t.to_csv().unwrap()).unwrap(), "a,b\n1,6.24000e-3\n");
        assert_eq!(sci(f64::NAN), "NaN");
    }
}
