//! Versioned JSON report emitted by every subcommand.

use g2hitchin::quadrature::QuadratureSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const SCHEMA_VERSION: u32 = 1;

/// A computed number with its error estimate (0 for deterministic rules).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
    pub error: f64,
}

/// A pass/fail check and the tolerance it was judged against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub tolerance: Option<f64>,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub params: Value,
    pub version: String,
    pub quadrature: Option<QuadratureSpec>,
    /// Plateau fractions (a, b) of the bump profile.
    pub bump: Option<(f64, f64)>,
    pub values: Vec<NamedValue>,
    pub verdicts: Vec<Verdict>,
    pub details: Value,
    pub error: Option<String>,
    pub wall_time_s: f64,
    pub passed: bool,
}

impl Report {
    pub fn new(command: &str, params: Value) -> Self {
        Report {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            params,
            version: env!("CARGO_PKG_VERSION").to_string(),
            quadrature: None,
            bump: None,
            values: Vec::new(),
            verdicts: Vec::new(),
            details: Value::Null,
            error: None,
            wall_time_s: 0.0,
            passed: false,
        }
    }

    pub fn value(&mut self, name: impl Into<String>, value: f64, error: f64) {
        self.values.push(NamedValue { name: name.into(), value, error });
    }

    pub fn verdict(&mut self, name: impl Into<String>, passed: bool, tolerance: Option<f64>, detail: impl Into<String>) {
        self.verdicts.push(Verdict { name: name.into(), passed, tolerance, detail: detail.into() });
    }

    /// Passed iff there is no error, at least one verdict and every verdict passed.
    pub fn finish(&mut self, wall_time_s: f64) {
        self.wall_time_s = wall_time_s;
        self.passed = self.error.is_none() && !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.passed);
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|v| v.name == name).map(|v| v.value)
    }
}
