//! Report records shared by the CLI and the acceptance suite.
//!
//! Every check carries `lhs`, `rhs`, `rel_err` and `tol`, and passes exactly
//! when `rel_err <= tol`. How `rel_err` is formed depends on the [`CheckKind`]:
//!
//! * `relative`: `|lhs - rhs| / |rhs|` (absolute when `rhs = 0`).
//! * `at_most`: `lhs` is a residual, `rhs` is 0 and `rel_err = lhs`.
//! * `at_least`: `lhs` must reach `rhs`; `rel_err` is the relative shortfall
//!   `max(0, (rhs - lhs) / |rhs|)` and `tol` is 0.
//! * `exact`: integer or categorical equality, `tol` is 0.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::quad::IdentityReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Relative,
    AtMost,
    AtLeast,
    Exact,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    #[serde(deserialize_with = "nullable")]
    pub lhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub rhs: f64,
    #[serde(deserialize_with = "nullable")]
    pub rel_err: f64,
    pub tol: f64,
    pub pass: bool,
    /// Enough to re-run this check on its own.
    pub params: BTreeMap<String, Value>,
}

impl Check {
    fn build(name: &str, kind: CheckKind, lhs: f64, rhs: f64, rel_err: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            kind,
            lhs,
            rhs,
            rel_err,
            tol,
            pass: rel_err <= tol,
            params: BTreeMap::new(),
        }
    }

    pub fn relative(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        let rel = if rhs == 0.0 {
            (lhs - rhs).abs()
        } else {
            (lhs - rhs).abs() / rhs.abs()
        };
        // NaN must fail
        let rel = if rel.is_nan() { f64::INFINITY } else { rel };
        Self::build(name, CheckKind::Relative, lhs, rhs, rel, tol)
    }

    pub fn at_most(name: &str, value: f64, bound: f64) -> Self {
        let rel = if value.is_nan() { f64::INFINITY } else { value };
        Self::build(name, CheckKind::AtMost, value, 0.0, rel, bound)
    }

    pub fn at_least(name: &str, value: f64, bound: f64) -> Self {
        let rel = if value.is_nan() {
            f64::INFINITY
        } else {
            ((bound - value) / bound.abs().max(f64::MIN_POSITIVE)).max(0.0)
        };
        Self::build(name, CheckKind::AtLeast, value, bound, rel, 0.0)
    }

    pub fn exact(name: &str, lhs: f64, rhs: f64) -> Self {
        let rel = if lhs == rhs { 0.0 } else { 1.0 };
        Self::build(name, CheckKind::Exact, lhs, rhs, rel, 0.0)
    }

    pub fn flag(name: &str, holds: bool) -> Self {
        Self::exact(name, f64::from(u8::from(holds)), 1.0)
    }

    /// A check that could not be evaluated.
    pub fn failed(name: &str, message: &str) -> Self {
        let mut c = Self::build(name, CheckKind::Exact, f64::NAN, 0.0, 1.0, 0.0);
        c.pass = false;
        c.params.insert("error".into(), Value::String(message.to_string()));
        c
    }

    pub fn from_identity(report: &IdentityReport, tol: f64) -> Self {
        let mut c = Self::relative(&report.name, report.lhs, report.rhs, tol);
        c.rel_err = report.rel_err;
        c.pass = report.passes(tol);
        for (k, v) in &report.params {
            c = c.with(k, *v);
        }
        c
    }

    pub fn with(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// JSON writes non-finite floats as `null`; read them back as NaN.
fn nullable<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub params: BTreeMap<String, Value>,
    pub checks: Vec<Check>,
    pub elapsed_ms: f64,
    /// Command-specific payload such as a defect basis or a scenario trace.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            params: BTreeMap::new(),
            checks: Vec::new(),
            elapsed_ms: 0.0,
            data: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report values are finite or null");
        s.push('\n');
        s
    }

    /// One row per check; parameters and payload are dropped.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("command,name,kind,lhs,rhs,rel_err,tol,pass\n");
        for c in &self.checks {
            let kind = serde_json::to_value(c.kind).expect("unit enum");
            let _ = writeln!(
                s,
                "{},{},{},{:e},{:e},{:e},{:e},{}",
                self.command,
                c.name,
                kind.as_str().unwrap_or_default(),
                c.lhs,
                c.rhs,
                c.rel_err,
                c.tol,
                c.pass
            );
        }
        s
    }
}
