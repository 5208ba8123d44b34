//! Request and response bodies of the tablog HTTP service.
//!
//! Programs travel as source text. Optional fields may be omitted from JSON;
//! they take the defaults documented on each field.

use serde::{Deserialize, Serialize};

pub const HEALTH: &str = "/health";
pub const RUN: &str = "/v1/run";
pub const TRANSFORM: &str = "/v1/transform";
pub const CHECK: &str = "/v1/check";
pub const BENCH: &str = "/v1/bench";
pub const INGEST_DEMO: &str = "/v1/ingest-demo";
pub const SESSIONS: &str = "/v1/sessions";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TraceMode {
    #[default]
    Off,
    Log,
    Machines,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Schedule {
    #[default]
    Model,
    Eager,
}

/// Engine settings shared by one-shot runs and sessions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EngineOptions {
    #[serde(default)]
    pub schedule: Schedule,
    /// Scheduler steps allowed per query; the engine default when absent.
    #[serde(default)]
    pub step_limit: Option<u64>,
    /// Deliver query answers as they are derived rather than at completion.
    #[serde(default)]
    pub stream: bool,
    /// Directory for relative `data_records/3` file names; the server's default when absent.
    #[serde(default)]
    pub data_root: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRequest {
    pub program: String,
    pub query: String,
    #[serde(default)]
    pub trace: TraceMode,
    #[serde(default, flatten)]
    pub options: EngineOptions,
    /// Include every table entry in the response.
    #[serde(default)]
    pub tables: bool,
}

/// One answer, as in the line-delimited record output.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnswerRecord {
    pub query: String,
    /// `X = a, Y = b`, or `true` for a query without variables.
    pub answer: String,
    /// 1-based position among the query's answers.
    pub ordinal: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suspension {
    pub consumer: String,
    /// Number of answers the consumer has already been offered.
    pub cursor: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableEntry {
    pub goal: String,
    pub answers: Vec<String>,
    pub suspensions: Vec<Suspension>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunResponse {
    pub answers: Vec<AnswerRecord>,
    pub steps: u64,
    /// Rendered log or machine-state trace, when one was requested.
    #[serde(default)]
    pub trace: Option<String>,
    #[serde(default)]
    pub tables: Option<Vec<TableEntry>>,
    /// Data files opened by `data_records/3` so far.
    pub file_opens: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformRequest {
    pub program: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransformResponse {
    pub program: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckRequest {
    pub program: String,
    pub query: String,
    /// Also return the bottom-up iteration log.
    #[serde(default)]
    pub iterations: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    /// Every predicate is reachable from the query predicate.
    pub reachable: bool,
    /// Every rule body has an instance true in the least model.
    pub bodies: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDiff {
    /// Least-model facts absent from the fully abstracted tables.
    pub missing: Vec<String>,
    /// Table answers outside the least model.
    pub extra: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResponse {
    /// Distinct answer texts, sorted.
    pub engine: Vec<String>,
    pub oracle: Vec<String>,
    pub agrees: bool,
    /// Absent for conjunctive queries.
    pub conditions: Option<Conditions>,
    /// Present only when the conditions hold.
    pub model: Option<ModelDiff>,
    pub iterations: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRequest {
    /// Proposition-occurrence targets, increasing.
    pub sizes: Vec<u64>,
    pub reps: usize,
    #[serde(default = "one")]
    pub warmup: usize,
    #[serde(default)]
    pub schedule: Schedule,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchPoint {
    pub target: u64,
    /// Rules in the triangular program run.
    pub n: u64,
    pub occurrences: u64,
    pub median_ms: f64,
    pub times_ms: Vec<f64>,
    pub steps: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchResponse {
    pub points: Vec<BenchPoint>,
    /// Median time of each size over the previous one.
    pub ratios: Vec<f64>,
    /// Least-squares slope of log time against log occurrences.
    pub exponent: Option<f64>,
    /// Human-readable table of the above.
    pub table: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDemoRequest {
    /// File of `emp(Id,Name,Addr).` records, resolved against the data root.
    pub file: String,
    /// Employee ids to look up, one query each.
    pub ids: Vec<i64>,
    #[serde(default)]
    pub data_root: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestDemoResponse {
    pub answers: Vec<AnswerRecord>,
    /// Files opened over all the queries.
    pub file_opens: usize,
    /// `emp_data/4` table goals with their answer counts.
    pub tables: Vec<(String, usize)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionRequest {
    pub program: String,
    #[serde(default, flatten)]
    pub options: EngineOptions,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionInfo {
    pub id: String,
}

/// A query against a session; tables persist between queries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SessionQuery {
    pub query: String,
    #[serde(default)]
    pub trace: TraceMode,
    #[serde(default)]
    pub tables: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

/// Body of every non-2xx response.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    /// Short category such as `syntax`, `illegal_mode` or `step_limit`.
    pub kind: String,
    pub message: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_fields_default() {
        let r: RunRequest = serde_json::from_str(r#"{"program":"p.","query":"p"}"#).unwrap();
        assert_eq!(r.trace, TraceMode::Off);
        assert_eq!(r.options, EngineOptions::default());
        assert!(!r.tables);
        let b: BenchRequest = serde_json::from_str(r#"{"sizes":[10],"reps":1}"#).unwrap();
        assert_eq!(b.warmup, 1);
    }

    #[test]
    fn options_are_flattened() {
        let r = RunRequest {
            program: "p.".into(),
            query: "p".into(),
            trace: TraceMode::Machines,
            options: EngineOptions { schedule: Schedule::Eager, step_limit: Some(5), ..Default::default() },
            tables: false,
        };
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["schedule"], "eager");
        assert_eq!(json["trace"], "machines");
        assert_eq!(json["step_limit"], 5);
        assert_eq!(serde_json::from_value::<RunRequest>(json).unwrap(), r);
    }
}
