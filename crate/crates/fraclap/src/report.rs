//! Machine-readable run reports: one JSON document per experiment plus a
//! flat CSV for plotting. JSON key order is the declaration order below,
//! so reports are byte-stable for a fixed config and seed (timing fields
//! excepted).

use crate::config::ExperimentConfig;
use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{Map, Value};
use std::path::Path;

pub const SCHEMA_VERSION: u32 = 1;

/// Near-equality margin below which a slack is flagged as degenerate
/// (strictness cannot be certified in floating point).
const DEGENERATE_MARGIN: f64 = 1e-13;

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    /// Stable machine-checkable property identifier.
    pub property: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`; the assertion is an inequality `lhs <= rhs`.
    pub slack: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Slack within roundoff of zero: the inequality held but not strictly.
    pub degenerate: bool,
}

impl Assertion {
    /// Inequality `lhs <= rhs` with slack tolerance relative to the
    /// larger magnitude (floor 1).
    pub fn ineq(property: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let slack = rhs - lhs;
        Self {
            property: property.into(),
            lhs,
            rhs,
            slack,
            tolerance: tol,
            pass: slack >= -tol * scale,
            degenerate: slack.abs() < DEGENERATE_MARGIN * scale,
        }
    }

    /// Equality `|lhs - rhs| <= tol * scale` recorded as two-sided slack.
    pub fn close(property: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        let scale = lhs.abs().max(rhs.abs()).max(1.0);
        let slack = rhs - lhs;
        Self {
            property: property.into(),
            lhs,
            rhs,
            slack,
            tolerance: tol,
            pass: slack.abs() <= tol * scale,
            degenerate: false,
        }
    }

    /// Plain boolean fact with recorded evidence values.
    pub fn fact(property: impl Into<String>, pass: bool, lhs: f64, rhs: f64) -> Self {
        Self {
            property: property.into(),
            lhs,
            rhs,
            slack: rhs - lhs,
            tolerance: 0.0,
            pass,
            degenerate: false,
        }
    }
}

/// One record of a sweep; ordered keys keep the JSON stable.
pub type Cell = Map<String, Value>;

pub fn cell(entries: &[(&str, Value)]) -> Cell {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert((*k).to_string(), v.clone());
    }
    m
}

pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x)
        .map(Value::Number)
        .unwrap_or(Value::Null)
}

#[derive(Debug, Serialize)]
pub struct ExperimentReport {
    pub schema_version: u32,
    pub experiment: String,
    pub config: ExperimentConfig,
    pub cells: Vec<Cell>,
    pub assertions: Vec<Assertion>,
    pub passed: bool,
    pub elapsed_seconds: f64,
}

impl ExperimentReport {
    pub fn new(experiment: &str, config: &ExperimentConfig) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            experiment: experiment.to_string(),
            config: config.clone(),
            cells: Vec::new(),
            assertions: Vec::new(),
            passed: true,
            elapsed_seconds: 0.0,
        }
    }

    pub fn push_assertion(&mut self, a: Assertion) {
        self.passed &= a.pass;
        self.assertions.push(a);
    }

    /// Sort cells by (s, ell) when those keys are present, so report
    /// assembly is order-stable no matter how the sweep was scheduled.
    pub fn sort_cells(&mut self) {
        let key = |c: &Cell| {
            let f = |k: &str| c.get(k).and_then(Value::as_f64).unwrap_or(f64::NEG_INFINITY);
            (f("s"), f("ell"))
        };
        self.cells.sort_by(|a, b| {
            key(a)
                .partial_cmp(&key(b))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n")
            .with_context(|| format!("writing report {}", path.display()))?;
        Ok(())
    }

    /// Flat CSV of the cells: the given columns, '.' decimal, RFC-4180.
    pub fn write_csv(&self, path: &Path, columns: &[&str]) -> Result<()> {
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        let mut w = csv::Writer::from_path(path)
            .with_context(|| format!("writing csv {}", path.display()))?;
        w.write_record(columns)?;
        for c in &self.cells {
            let row: Vec<String> = columns
                .iter()
                .map(|&k| match c.get(k) {
                    Some(Value::Number(n)) => n.to_string(),
                    Some(Value::String(s)) => s.clone(),
                    Some(Value::Bool(b)) => b.to_string(),
                    _ => String::new(),
                })
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}
