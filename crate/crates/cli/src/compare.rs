//! Side-by-side comparison of two run manifests.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use robinlab_core::verify::report::{fmt_f64, Value};
use robinlab_core::verify::Report;
use thiserror::Error;

/// Relative difference above which a numeric field is reported.
pub const REL_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("{which}: {msg}")]
    Parse { which: String, msg: String },
    #[error("schema mismatch: {0}")]
    Schema(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffRow {
    pub key: String,
    pub a: String,
    pub b: String,
    /// `None` for non-numeric fields.
    pub rel_diff: Option<f64>,
}

fn render(v: Option<&Value>) -> String {
    match v {
        None => "-".into(),
        Some(Value::Number(x)) => fmt_f64(*x),
        Some(Value::Integer(i)) => i.to_string(),
        Some(Value::Bool(b)) => b.to_string(),
        Some(Value::Text(s)) => s.clone(),
        Some(Value::Array(xs)) => xs.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
    }
}

fn rel_diff(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() {
        return Some(f64::INFINITY);
    }
    let mut worst = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        if x == y {
            continue;
        }
        let scale = x.abs().max(y.abs());
        let d = if scale == 0.0 || !scale.is_finite() { f64::INFINITY } else { (x - y).abs() / scale };
        worst = worst.max(d);
    }
    Some(worst)
}

fn check_names(r: &Report) -> BTreeSet<String> {
    r.keys().filter_map(|k| k.strip_suffix(".status")).map(str::to_string).collect()
}

/// Rows whose values differ: numeric fields by more than [`REL_TOL`]
/// relative, other fields by any change.
pub fn compare(a: &Report, b: &Report) -> Result<Vec<DiffRow>, CompareError> {
    let (ca, cb) = (check_names(a), check_names(b));
    if ca.is_empty() || cb.is_empty() {
        return Err(CompareError::Schema("a manifest lists no checks".into()));
    }
    if ca != cb {
        let only_a: Vec<_> = ca.difference(&cb).cloned().collect();
        let only_b: Vec<_> = cb.difference(&ca).cloned().collect();
        return Err(CompareError::Schema(format!(
            "check sets differ (only in first: [{}], only in second: [{}])",
            only_a.join(", "),
            only_b.join(", ")
        )));
    }
    let mut keys: Vec<&str> = a.keys().collect();
    for k in b.keys() {
        if a.get(k).is_none() {
            keys.push(k);
        }
    }
    let mut rows = Vec::new();
    for key in keys {
        let (va, vb) = (a.get(key), b.get(key));
        let numeric = match (va.and_then(Value::numbers), vb.and_then(Value::numbers)) {
            (Some(x), Some(y)) => rel_diff(&x, &y),
            _ => None,
        };
        let differs = match numeric {
            Some(d) => d > REL_TOL,
            None => va != vb,
        };
        if differs {
            rows.push(DiffRow { key: key.to_string(), a: render(va), b: render(vb), rel_diff: numeric });
        }
    }
    Ok(rows)
}

pub fn compare_text(a: &str, b: &str) -> Result<Vec<DiffRow>, CompareError> {
    let ra = Report::parse(a).map_err(|msg| CompareError::Parse { which: "first manifest".into(), msg })?;
    let rb = Report::parse(b).map_err(|msg| CompareError::Parse { which: "second manifest".into(), msg })?;
    compare(&ra, &rb)
}

/// Tab-separated table with a header row; empty input gives an empty string.
pub fn format_rows(rows: &[DiffRow]) -> String {
    if rows.is_empty() {
        return String::new();
    }
    let mut out = String::from("key\tfirst\tsecond\trel_diff\n");
    for r in rows {
        let d = r.rel_diff.map_or("-".to_string(), fmt_f64);
        let _ = writeln!(out, "{}\t{}\t{}\t{}", r.key, r.a, r.b, d);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: &str = "scenario.name: a\nnash.status: pass\nnash.implied_constant: 1.0\nultra.status: fail\n";

    #[test]
    fn identical_is_empty() {
        assert!(compare_text(A, A).unwrap().is_empty());
        assert_eq!(format_rows(&[]), "");
    }

    #[test]
    fn small_differences_are_ignored() {
        let b = A.replace("1.0", "1.0000000001");
        assert!(compare_text(A, &b).unwrap().is_empty());
        let b = A.replace("1.0", "1.001");
        let rows = compare_text(A, &b).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].key, "nash.implied_constant");
        assert!((rows[0].rel_diff.unwrap() - 0.001 / 1.001).abs() < 1e-12);
    }

    #[test]
    fn text_changes_are_rows() {
        let b = A.replace("ultra.status: fail", "ultra.status: pass");
        let rows = compare_text(A, &b).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].rel_diff, None);
    }

    #[test]
    fn different_checks_are_a_schema_error() {
        let b = A.replace("ultra.status: fail\n", "");
        assert!(matches!(compare_text(A, &b), Err(CompareError::Schema(_))));
    }

    #[test]
    fn parse_errors_name_the_manifest() {
        let err = compare_text(A, "garbage").unwrap_err();
        assert!(err.to_string().starts_with("second manifest: line 1"), "{err}");
    }
}
