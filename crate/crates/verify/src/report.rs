//! Deterministic JSON reports: sorted keys, shortest round-trip floats and a
//! versioned schema.

use std::collections::BTreeMap;

use esm_core::exact::QMatrix;
use esm_core::residuals::{Conventions, NormPair};
use esm_core::symplectic::EsmParameters;
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: &str = "esm-verify.report/1";

/// Name of the cellular model used for twisted cohomology of grid scenarios.
pub const COCHAIN_MODEL: &str =
    "minimal torus complex: one cell per subset of periodic axes, transitions rho(winding) on cut-crossing faces";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

impl Status {
    pub fn from_passed(passed: bool) -> Self {
        if passed {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Inconclusive => "inconclusive",
        }
    }

    /// 0 for pass, 1 for a failed or inconclusive check.
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Pass => 0,
            Status::Fail | Status::Inconclusive => 1,
        }
    }
}

/// Command result before the header is attached.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub status: Status,
    pub results: Value,
    pub params: EsmParameters,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub scenario_name: String,
    pub scenario_hash: String,
    pub outcome: Outcome,
    /// Wall-clock milliseconds per phase; omitted unless requested since
    /// they break byte-identical reruns.
    pub timings: Option<BTreeMap<String, f64>>,
}

impl Report {
    pub fn to_value(&self) -> Value {
        let mut root = Map::new();
        root.insert("schema_version".into(), json!(SCHEMA_VERSION));
        root.insert("command".into(), json!(self.command));
        root.insert("scenario".into(), json!({ "name": self.scenario_name, "hash": self.scenario_hash }));
        root.insert("conventions".into(), conventions(&self.outcome.params));
        root.insert("results".into(), self.outcome.results.clone());
        root.insert("status".into(), json!(self.outcome.status.as_str()));
        if let Some(t) = &self.timings {
            root.insert("timings".into(), Value::Object(t.iter().map(|(k, v)| (k.clone(), num(*v))).collect()));
        }
        Value::Object(root)
    }

    /// Pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value()).expect("report values serialize");
        s.push('\n');
        s
    }
}

/// Every convention in force, including tolerances.
pub fn conventions(params: &EsmParameters) -> Value {
    let mut map: Map<String, Value> =
        Conventions::new(params).entries.into_iter().map(|(k, v)| (k.to_string(), json!(v))).collect();
    let tolerances: Map<String, Value> = params.tolerances.entries().map(|(k, v)| (k.to_string(), num(v))).collect();
    map.insert("tolerances".into(), Value::Object(tolerances));
    map.insert("cochain_model".into(), json!(COCHAIN_MODEL));
    Value::Object(map)
}

/// Finite floats as numbers, the rest as strings.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or_else(|| json!(x.to_string()), Value::Number)
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn norm_pair(n: &NormPair) -> Value {
    json!({ "max": num(n.max), "rms": num(n.rms) })
}

/// Exact matrix as rows of `"p/q"` strings.
pub fn exact(m: &QMatrix) -> Value {
    Value::Array((0..m.rows()).map(|r| Value::Array(m.row(r).iter().map(|q| json!(q.to_string())).collect())).collect())
}

pub fn float_matrix(m: &DMatrix<f64>) -> Value {
    Value::Array((0..m.nrows()).map(|r| Value::Array((0..m.ncols()).map(|c| num(m[(r, c)])).collect())).collect())
}

/// Variant name of a core error, e.g. `NotAlmostComplex`.
pub fn error_kind(e: &esm_core::Error) -> String {
    format!("{e:?}").chars().take_while(|c| c.is_alphanumeric()).collect()
}

pub fn error_value(e: &esm_core::Error) -> Value {
    json!({ "kind": error_kind(e), "message": e.to_string() })
}
