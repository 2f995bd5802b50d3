//! Plain-text report documents (`key: value` lines) and per-time CSV tables.

use std::fmt::Write as _;

use super::VerifyError;
use crate::semigroup::SemigroupEvaluator;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Number(f64),
    Integer(i64),
    Bool(bool),
    Text(String),
    Array(Vec<f64>),
}

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

impl Value {
    fn render(&self) -> String {
        match self {
            Value::Number(x) => fmt_f64(*x),
            Value::Integer(i) => i.to_string(),
            Value::Bool(b) => b.to_string(),
            Value::Text(s) => s.clone(),
            Value::Array(v) => v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(","),
        }
    }

    fn parse(s: &str) -> Self {
        let s = s.trim();
        match s {
            "true" => return Value::Bool(true),
            "false" => return Value::Bool(false),
            _ => {}
        }
        if let Ok(i) = s.parse::<i64>() {
            return Value::Integer(i);
        }
        if let Ok(x) = s.parse::<f64>() {
            return Value::Number(x);
        }
        if s.contains(',') {
            let parts: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
            if let Ok(v) = parts {
                return Value::Array(v);
            }
        }
        if s.is_empty() {
            return Value::Array(Vec::new());
        }
        Value::Text(s.to_string())
    }

    /// Numeric view used for comparisons.
    pub fn numbers(&self) -> Option<Vec<f64>> {
        match self {
            Value::Number(x) => Some(vec![*x]),
            Value::Integer(i) => Some(vec![*i as f64]),
            Value::Array(v) => Some(v.clone()),
            _ => None,
        }
    }
}

/// Ordered `key: value` document.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: Value) -> &mut Self {
        self.entries.push((key.into(), value));
        self
    }

    pub fn num(&mut self, key: impl Into<String>, x: f64) -> &mut Self {
        self.push(key, Value::Number(x))
    }

    pub fn int(&mut self, key: impl Into<String>, i: i64) -> &mut Self {
        self.push(key, Value::Integer(i))
    }

    pub fn flag(&mut self, key: impl Into<String>, b: bool) -> &mut Self {
        self.push(key, Value::Bool(b))
    }

    pub fn text(&mut self, key: impl Into<String>, s: impl Into<String>) -> &mut Self {
        self.push(key, Value::Text(s.into()))
    }

    pub fn array(&mut self, key: impl Into<String>, v: &[f64]) -> &mut Self {
        self.push(key, Value::Array(v.to_vec()))
    }

    /// Append `other` with every key prefixed by `prefix.`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &Report) -> &mut Self {
        for (k, v) in &other.entries {
            self.entries.push((format!("{prefix}.{k}"), v.clone()));
        }
        self
    }

    pub fn entries(&self) -> &[(String, Value)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k}: {}", v.render());
        }
        out
    }

    /// Inverse of [`Report::render`]. Blank lines and `#` comments are
    /// skipped; any other line without `": "` is an error naming the line.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut r = Report::new();
        for (no, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.trim_start().starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once(':')
                .ok_or_else(|| format!("line {}: expected `key: value`", no + 1))?;
            r.entries.push((k.trim().to_string(), Value::parse(v)));
        }
        Ok(r)
    }
}

pub const CSV_HEADER: &str = "t,norm_2_to_inf,norm_1_to_2,norm_inf_to_inf,min_entry";

/// One row per time of the primal and adjoint norm queries.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    /// `‖e^{-tL(B)}‖_{2→∞}`.
    pub norm_2_to_inf: Vec<f64>,
    /// `‖e^{-tL(B)*}‖_{1→2}` of the adjoint semigroup.
    pub norm_1_to_2: Vec<f64>,
    /// `‖e^{-tL(B)}‖_{∞→∞}`.
    pub norm_inf_to_inf: Vec<f64>,
    /// Smallest entry of `e^{-tL̃(B)}`.
    pub min_entry: Vec<f64>,
}

impl TimeSeries {
    pub fn compute(primal: &SemigroupEvaluator, adjoint: &SemigroupEvaluator, times: &[f64]) -> Result<Self, VerifyError> {
        primal.precompute(times)?;
        adjoint.precompute(times)?;
        let mut s = TimeSeries {
            t: times.to_vec(),
            norm_2_to_inf: Vec::new(),
            norm_1_to_2: Vec::new(),
            norm_inf_to_inf: Vec::new(),
            min_entry: Vec::new(),
        };
        for &t in times {
            s.norm_2_to_inf.push(primal.norm_2_to_inf(t, true)?);
            s.norm_1_to_2.push(adjoint.norm_1_to_2(t, true)?);
            s.norm_inf_to_inf.push(primal.norm_inf_to_inf(t, true)?);
            s.min_entry.push(primal.min_entry(t)?);
        }
        Ok(s)
    }

    /// Largest `|a − b| / max(|a|, |b|)` between the 2→∞ and adjoint 1→2
    /// columns.
    pub fn duality_defect(&self) -> f64 {
        self.norm_2_to_inf
            .iter()
            .zip(&self.norm_1_to_2)
            .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()))
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for k in 0..self.t.len() {
            let row = [self.t[k], self.norm_2_to_inf[k], self.norm_1_to_2[k], self.norm_inf_to_inf[k], self.min_entry[k]];
            let cells: Vec<String> = row.iter().map(|x| fmt_f64(*x)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}
