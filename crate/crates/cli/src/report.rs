//! The versioned JSON envelope shared by every command.

use berkdyn::error::Error;
use serde::Serialize;
use serde_json::Value;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Debug, Serialize)]
pub struct Tool {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct FamilyInfo {
    pub source: String,
    pub canonical: String,
    pub degree: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageError {
    pub stage: String,
    pub kind: &'static str,
    pub message: String,
}

impl StageError {
    pub fn new(stage: &str, e: &Error) -> Self {
        Self { stage: stage.to_string(), kind: error_kind(e), message: e.to_string() }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Tolerances {
    pub coefficient_cancel: f64,
    pub barycenter: f64,
    pub cycle_detection: f64,
    pub quadrature_samples: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            coefficient_cancel: 1e-9,
            barycenter: berkdyn::hyperbolic::BARYCENTER_TOL,
            cycle_detection: crate::render::CYCLE_TOL,
            quadrature_samples: berkdyn::hyperbolic::DEFAULT_SAMPLES,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandReport {
    pub schema_version: &'static str,
    pub tool: Tool,
    pub command: &'static str,
    pub family: Option<FamilyInfo>,
    pub parameters: Value,
    pub seed: u64,
    pub tolerances: Tolerances,
    pub result: Value,
    pub errors: Vec<StageError>,
}

impl CommandReport {
    pub fn new(command: &'static str, family: Option<FamilyInfo>, parameters: Value, seed: u64) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: Tool { name: "berkdyn", version: env!("CARGO_PKG_VERSION") },
            command,
            family,
            parameters,
            seed,
            tolerances: Tolerances::default(),
            result: Value::Null,
            errors: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports always serialize")
    }
}

pub fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Precision(_) => "precision",
        Error::Classification(_) => "classification",
        Error::Domain(_) => "domain",
        Error::Numerical(_) => "numerical",
        Error::Size(_) => "size",
    }
}

/// 2 for parse errors, 3 for precision loss, 4 for a violated classification
/// precondition, 1 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse { .. } => 2,
        Error::Precision(_) => 3,
        Error::Classification(_) => 4,
        _ => 1,
    }
}

pub fn kind_exit_code(kind: &str) -> i32 {
    match kind {
        "parse" => 2,
        "precision" => 3,
        "classification" => 4,
        _ => 1,
    }
}
