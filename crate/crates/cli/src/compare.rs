//! `compare` subcommand: log-log slopes against DOFs and final-value deltas
//! for two convergence histories.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::CliError;

/// Reference eigenvalue of the Dirichlet Laplacian on the L-shaped domain.
pub const L_SHAPE_LAMBDA1: f64 = 9.6397238440219;

#[derive(Debug, Clone, PartialEq)]
pub struct History {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl History {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    /// Keeps only the last `n` rows.
    pub fn tail(&self, n: usize) -> History {
        let start = self.rows.len().saturating_sub(n);
        History {
            columns: self.columns.clone(),
            rows: self.rows[start..].to_vec(),
        }
    }
}

pub fn parse_history(text: &str, origin: &str) -> Result<History, CliError> {
    let err = |msg: String| CliError::Parse(format!("{origin}: {msg}"));
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let columns: Vec<String> = reader
        .headers()
        .map_err(|e| err(e.to_string()))?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();
    if columns.iter().all(String::is_empty) {
        return Err(err("empty file".into()));
    }
    if !columns.iter().any(|c| c == "dofs") {
        return Err(err("missing `dofs` column".into()));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let row = rec
            .iter()
            .map(|cell| {
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| err(format!("row {}: `{cell}` is not a number", i + 2)))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(err("no data rows".into()));
    }
    Ok(History { columns, rows })
}

pub fn read_history(path: &Path) -> Result<History, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
    parse_history(&text, &path.display().to_string())
}

/// Least-squares slope of `ln y` against `ln x` over pairs with both
/// positive and finite; `None` with fewer than two such pairs.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = x
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0 && a.is_finite() && b.is_finite())
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnReport {
    pub name: String,
    /// Slope of `|value - reference|` (or `|value|`) against DOFs.
    pub slope_a: Option<f64>,
    pub slope_b: Option<f64>,
    pub final_a: f64,
    pub final_b: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub columns: Vec<ColumnReport>,
}

impl Comparison {
    pub fn get(&self, name: &str) -> Option<&ColumnReport> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let fmt = |s: Option<f64>| s.map_or_else(|| "n/a".to_string(), |v| format!("{v:.16e}"));
        let mut out = String::from("column,slope_a,slope_b,final_a,final_b,delta\n");
        for c in &self.columns {
            let _ = writeln!(
                out,
                "{},{},{},{:.16e},{:.16e},{:.16e}",
                c.name,
                fmt(c.slope_a),
                fmt(c.slope_b),
                c.final_a,
                c.final_b,
                c.delta
            );
        }
        out
    }
}

fn error_series(h: &History, col: &str, reference: Option<f64>) -> (Vec<f64>, Vec<f64>) {
    let dofs = h.column("dofs").unwrap_or_default();
    let vals = h
        .column(col)
        .unwrap_or_default()
        .into_iter()
        .map(|v| (v - reference.unwrap_or(0.0)).abs())
        .collect();
    (dofs, vals)
}

/// Compares every column except `k` and `dofs`. Entries of `references`
/// turn a column into an error `|value - reference|` before fitting.
pub fn compare(a: &History, b: &History, references: &BTreeMap<String, f64>) -> Result<Comparison, CliError> {
    if a.columns != b.columns {
        return Err(CliError::Parse(format!(
            "column sets differ: [{}] vs [{}]",
            a.columns.join(","),
            b.columns.join(",")
        )));
    }
    if let Some(name) = references.keys().find(|n| !a.columns.contains(n)) {
        return Err(CliError::Parse(format!("reference names unknown column `{name}`")));
    }
    let mut columns = Vec::new();
    for (i, name) in a.columns.iter().enumerate() {
        if name == "k" || name == "dofs" {
            continue;
        }
        let r = references.get(name).copied();
        let (xa, ya) = error_series(a, name, r);
        let (xb, yb) = error_series(b, name, r);
        let final_a = a.rows.last().map_or(f64::NAN, |row| row[i]);
        let final_b = b.rows.last().map_or(f64::NAN, |row| row[i]);
        columns.push(ColumnReport {
            name: name.clone(),
            slope_a: loglog_slope(&xa, &ya),
            slope_b: loglog_slope(&xb, &yb),
            final_a,
            final_b,
            delta: final_b - final_a,
        });
    }
    Ok(Comparison { columns })
}

/// Parses `name=value`.
pub fn parse_reference(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|_| format!("`{v}` is not a number"))?;
    Ok((k.trim().to_string(), v))
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = "k,dofs,h_max,eta,energy,mu_1,marked,scf_iters,wall_ms\n\
0,10,1.0,4.0,20.0,20.0,3,1,0.0\n\
1,100,0.5,0.4,19.8,19.8,3,1,0.0\n";

    #[test]
    fn identical_files_have_zero_deltas() {
        let h = parse_history(A, "a").unwrap();
        let c = compare(&h, &h, &BTreeMap::new()).unwrap();
        assert!(c.columns.iter().all(|r| r.delta == 0.0));
        let eta = c.get("eta").unwrap();
        assert!((eta.slope_a.unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_turns_value_into_error() {
        let h = parse_history(A, "a").unwrap();
        let refs = BTreeMap::from([("mu_1".to_string(), 19.79)]);
        let c = compare(&h, &h, &refs).unwrap();
        let s = c.get("mu_1").unwrap().slope_a.unwrap();
        // errors 0.21 and 0.01 over one decade
        assert!((s - (0.01f64 / 0.21).log10()).abs() < 1e-9);
        let bad = BTreeMap::from([("mu_9".to_string(), 1.0)]);
        assert!(compare(&h, &h, &bad).is_err());
    }

    #[test]
    fn malformed_inputs() {
        assert!(matches!(parse_history("", "e"), Err(CliError::Parse(_))));
        assert!(matches!(parse_history("k,dofs\n", "e"), Err(CliError::Parse(_))));
        assert!(matches!(parse_history("k,dofs\n1,x\n", "e"), Err(CliError::Parse(_))));
        assert!(matches!(parse_history("k,dofs\n1,2,3\n", "e"), Err(CliError::Parse(_))));
        assert!(matches!(parse_history("k,eta\n1,2\n", "e"), Err(CliError::Parse(_))));
        let a = parse_history(A, "a").unwrap();
        let b = parse_history("k,dofs,eta\n0,1,1\n", "b").unwrap();
        assert!(compare(&a, &b, &BTreeMap::new()).is_err());
    }

    #[test]
    fn slope_fit() {
        let x = [1.0, 10.0, 100.0, 1000.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-0.75)).collect();
        assert!((loglog_slope(&x, &y).unwrap() + 0.75).abs() < 1e-12);
        assert_eq!(loglog_slope(&[1.0], &[1.0]), None);
        assert_eq!(loglog_slope(&[2.0, 2.0], &[1.0, 3.0]), None);
        assert_eq!(parse_reference("mu_1=9.5"), Ok(("mu_1".into(), 9.5)));
        assert!(parse_reference("mu_1").is_err());
    }
}
