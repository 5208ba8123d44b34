//! HTTP/JSON front end to the engine.
//!
//! Every request is evaluated on a blocking worker. One-shot endpoints build a
//! fresh engine per request; sessions keep an engine, and so its tables, alive
//! across queries until deleted.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use tablog_api as api;
use tablog_core::bench::{run_bench, BenchSpec};
use tablog_core::engine::{Engine, EngineConfig, Schedule, TraceEvent, TraceMode};
use tablog_core::index::transform_program;
use tablog_core::oracle::{diff_with_engine, least_model};
use tablog_core::program::{parse_program, print_term};
use tablog_core::term::Term;
use tablog_core::workload::EMP_DATA;
use tablog_core::Error;

/// An error on its way to the wire.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: api::ErrorBody,
}

impl ApiError {
    fn not_found(what: String) -> Self {
        ApiError { status: StatusCode::NOT_FOUND, body: api::ErrorBody { kind: "not_found".into(), message: what } }
    }

    fn internal(message: String) -> Self {
        ApiError { status: StatusCode::INTERNAL_SERVER_ERROR, body: api::ErrorBody { kind: "internal".into(), message } }
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::StepLimit(_) | Error::IterationCap(_) => StatusCode::UNPROCESSABLE_ENTITY,
            _ => StatusCode::BAD_REQUEST,
        };
        ApiError { status, body: api::ErrorBody { kind: e.kind().into(), message: e.to_string() } }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Engine>>>>>,
    next_session: Arc<AtomicU64>,
}

pub fn router() -> Router {
    Router::new()
        .route(api::HEALTH, get(health))
        .route(api::RUN, post(run))
        .route(api::TRANSFORM, post(transform))
        .route(api::CHECK, post(check))
        .route(api::BENCH, post(bench))
        .route(api::INGEST_DEMO, post(ingest_demo))
        .route(api::SESSIONS, post(create_session))
        .route(&format!("{}/{{id}}/query", api::SESSIONS), post(session_query))
        .route(&format!("{}/{{id}}", api::SESSIONS), delete(delete_session))
        .with_state(AppState::default())
}

/// Serves on `listener` until the task is dropped.
pub async fn serve(listener: TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

/// Starts a server on an ephemeral local port.
pub async fn spawn_local() -> std::io::Result<(SocketAddr, JoinHandle<std::io::Result<()>>)> {
    let listener = TcpListener::bind(("127.0.0.1", 0)).await?;
    let addr = listener.local_addr()?;
    Ok((addr, tokio::spawn(serve(listener))))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> Result<T, ApiError> + Send + 'static) -> ApiResult<T> {
    match tokio::task::spawn_blocking(f).await {
        Ok(r) => r.map(Json),
        Err(e) => Err(ApiError::internal(format!("evaluation task failed: {e}"))),
    }
}

fn engine_config(options: &api::EngineOptions, trace: api::TraceMode) -> EngineConfig {
    let mut config = EngineConfig {
        schedule: match options.schedule {
            api::Schedule::Model => Schedule::Model,
            api::Schedule::Eager => Schedule::Eager,
        },
        trace: match trace {
            api::TraceMode::Off => TraceMode::Off,
            api::TraceMode::Log => TraceMode::Log,
            api::TraceMode::Machines => TraceMode::Machines,
        },
        stream: options.stream,
        ..Default::default()
    };
    if let Some(limit) = options.step_limit {
        config.step_limit = limit;
    }
    if let Some(root) = &options.data_root {
        config.data_root = PathBuf::from(root);
    }
    config
}

fn records(query: &str, answers: &[tablog_core::engine::Answer]) -> Vec<api::AnswerRecord> {
    answers
        .iter()
        .enumerate()
        .map(|(i, a)| api::AnswerRecord { query: query.to_string(), answer: a.to_text(), ordinal: i + 1 })
        .collect()
}

fn tables(engine: &Engine) -> Vec<api::TableEntry> {
    engine
        .dump_tables()
        .into_iter()
        .map(|e| api::TableEntry {
            goal: e.goal,
            answers: e.answers,
            suspensions: e.suspensions.into_iter().map(|(consumer, cursor)| api::Suspension { consumer, cursor }).collect(),
        })
        .collect()
}

/// Runs one query; the engine's trace mode decides which trace is rendered.
fn query(engine: &mut Engine, query: &str, with_tables: bool) -> Result<api::RunResponse, ApiError> {
    let solution = engine.solve_text(query)?;
    let trace = match engine.config().trace {
        TraceMode::Off => None,
        TraceMode::Log => Some(engine.render_log()),
        TraceMode::Machines => Some(engine.render_states()),
    };
    Ok(api::RunResponse {
        answers: records(query, &solution.answers),
        steps: solution.steps,
        trace,
        tables: with_tables.then(|| tables(engine)),
        file_opens: engine.file_opens(),
    })
}

async fn health() -> Json<api::Health> {
    Json(api::Health { status: "ok".into(), version: env!("CARGO_PKG_VERSION").into() })
}

async fn run(Json(req): Json<api::RunRequest>) -> ApiResult<api::RunResponse> {
    blocking(move || {
        let program = parse_program(&req.program)?;
        let mut engine = Engine::new(&program, engine_config(&req.options, req.trace))?;
        query(&mut engine, &req.query, req.tables)
    })
    .await
}

async fn transform(Json(req): Json<api::TransformRequest>) -> ApiResult<api::TransformResponse> {
    blocking(move || {
        let program = parse_program(&req.program)?;
        Ok(api::TransformResponse { program: transform_program(&program)? })
    })
    .await
}

async fn check(Json(req): Json<api::CheckRequest>) -> ApiResult<api::CheckResponse> {
    blocking(move || {
        let program = parse_program(&req.program)?;
        let report = diff_with_engine(&program, &req.query)?;
        let iterations = if req.iterations { Some(least_model(&program)?.render_iterations()) } else { None };
        let texts = |ts: &[Term]| ts.iter().map(print_term).collect();
        Ok(api::CheckResponse {
            agrees: report.agrees(),
            conditions: report.conditions.as_ref().map(|c| api::Conditions {
                reachable: c.reachable_ok,
                bodies: c.bodies_ok,
                witness: c.witness.clone(),
            }),
            model: report.model.as_ref().map(|m| api::ModelDiff { missing: texts(&m.missing), extra: texts(&m.extra) }),
            engine: report.engine,
            oracle: report.oracle,
            iterations,
        })
    })
    .await
}

async fn bench(Json(req): Json<api::BenchRequest>) -> ApiResult<api::BenchResponse> {
    blocking(move || {
        let schedule = engine_config(&api::EngineOptions { schedule: req.schedule, ..Default::default() }, api::TraceMode::Off).schedule;
        let spec = BenchSpec { sizes: req.sizes, reps: req.reps, warmup: req.warmup, schedule };
        let report = run_bench(&spec)?;
        let ms = |d: std::time::Duration| d.as_secs_f64() * 1e3;
        Ok(api::BenchResponse {
            points: report
                .points
                .iter()
                .map(|p| api::BenchPoint {
                    target: p.target,
                    n: p.n,
                    occurrences: p.occurrences,
                    median_ms: ms(p.median()),
                    times_ms: p.times.iter().map(|t| ms(*t)).collect(),
                    steps: p.steps,
                })
                .collect(),
            ratios: report.ratios(),
            exponent: report.exponent(),
            table: report.render(),
        })
    })
    .await
}

async fn ingest_demo(Json(req): Json<api::IngestDemoRequest>) -> ApiResult<api::IngestDemoResponse> {
    blocking(move || {
        let options = api::EngineOptions { data_root: req.data_root, ..Default::default() };
        let program = parse_program(EMP_DATA)?;
        let mut engine = Engine::new(&program, engine_config(&options, api::TraceMode::Log))?;
        let file = print_term(&Term::atom(&req.file));
        let mut answers = Vec::new();
        let mut opens = 0;
        for id in &req.ids {
            let q = format!("emp_data({file},{id},Name,Addr)");
            let solution = engine.solve_text(&q)?;
            answers.extend(records(&q, &solution.answers));
            opens += engine.trace_events().iter().filter(|e| matches!(e, TraceEvent::FileOpen { .. })).count();
        }
        let tables = engine.table_contents().into_iter().map(|(goal, answers)| (print_term(&goal), answers.len())).collect();
        Ok(api::IngestDemoResponse { answers, file_opens: opens, tables })
    })
    .await
}

async fn create_session(State(state): State<AppState>, Json(req): Json<api::SessionRequest>) -> ApiResult<api::SessionInfo> {
    let engine = blocking(move || {
        let program = parse_program(&req.program)?;
        Ok(Engine::new(&program, engine_config(&req.options, api::TraceMode::Off))?)
    })
    .await?
    .0;
    let id = format!("s{}", state.next_session.fetch_add(1, Ordering::Relaxed) + 1);
    state.sessions.lock().expect("session map poisoned").insert(id.clone(), Arc::new(Mutex::new(engine)));
    Ok(Json(api::SessionInfo { id }))
}

fn session(state: &AppState, id: &str) -> Result<Arc<Mutex<Engine>>, ApiError> {
    let sessions = state.sessions.lock().expect("session map poisoned");
    sessions.get(id).cloned().ok_or_else(|| ApiError::not_found(format!("no session {id}")))
}

async fn session_query(
    State(state): State<AppState>,
    Path(id): Path<String>,
    Json(req): Json<api::SessionQuery>,
) -> ApiResult<api::RunResponse> {
    let engine = session(&state, &id)?;
    blocking(move || {
        let mut engine = engine.lock().map_err(|_| ApiError::internal("session poisoned by an earlier failure".into()))?;
        engine.config_mut().trace = engine_config(&api::EngineOptions::default(), req.trace).trace;
        query(&mut engine, &req.query, req.tables)
    })
    .await
}

async fn delete_session(State(state): State<AppState>, Path(id): Path<String>) -> Result<StatusCode, ApiError> {
    match state.sessions.lock().expect("session map poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT),
        None => Err(ApiError::not_found(format!("no session {id}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use axum::body::Body;
    use axum::http::Request;
    use http_body_util::BodyExt;
    use tower::ServiceExt;

    async fn call(app: &Router, method: &str, uri: &str, body: serde_json::Value) -> (StatusCode, serde_json::Value) {
        let req = Request::builder()
            .method(method)
            .uri(uri)
            .header("content-type", "application/json")
            .body(Body::from(body.to_string()))
            .unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        let status = resp.status();
        let bytes = resp.into_body().collect().await.unwrap().to_bytes();
        let json = if bytes.is_empty() { serde_json::Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
        (status, json)
    }

    const GRAPH: &str = include_str!("../../core/programs/graph.pl");

    #[tokio::test]
    async fn run_returns_answers_in_order() {
        let app = router();
        let (status, body) = call(&app, "POST", api::RUN, serde_json::json!({"program": GRAPH, "query": "p(a,A)"})).await;
        assert_eq!(status, StatusCode::OK);
        let resp: api::RunResponse = serde_json::from_value(body).unwrap();
        let answers: Vec<&str> = resp.answers.iter().map(|a| a.answer.as_str()).collect();
        assert_eq!(answers, ["A = b", "A = c"]);
        assert_eq!(resp.answers[1].ordinal, 2);
    }

    #[tokio::test]
    async fn errors_carry_their_kind() {
        let app = router();
        let (status, body) = call(&app, "POST", api::RUN, serde_json::json!({"program": "p(", "query": "p"})).await;
        assert_eq!(status, StatusCode::BAD_REQUEST);
        assert_eq!(body["kind"], "syntax");
        let (status, body) =
            call(&app, "POST", api::RUN, serde_json::json!({"program": GRAPH, "query": "p(a,A)", "step_limit": 3})).await;
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
        assert_eq!(body["kind"], "step_limit");
    }

    #[tokio::test]
    async fn sessions_keep_tables() {
        let app = router();
        let (_, body) = call(&app, "POST", api::SESSIONS, serde_json::json!({"program": GRAPH})).await;
        let id = body["id"].as_str().unwrap().to_string();
        let uri = format!("{}/{id}/query", api::SESSIONS);
        let (_, first) = call(&app, "POST", &uri, serde_json::json!({"query": "p(a,A)", "tables": true})).await;
        let (_, second) = call(&app, "POST", &uri, serde_json::json!({"query": "p(a,A)", "tables": true})).await;
        assert_eq!(first["tables"][0]["answers"], second["tables"][0]["answers"]);
        assert!(second["steps"].as_u64().unwrap() < first["steps"].as_u64().unwrap());
        let (status, _) = call(&app, "DELETE", &format!("{}/{id}", api::SESSIONS), serde_json::Value::Null).await;
        assert_eq!(status, StatusCode::NO_CONTENT);
        let (status, _) = call(&app, "POST", &uri, serde_json::json!({"query": "p(a,A)"})).await;
        assert_eq!(status, StatusCode::NOT_FOUND);
    }

    #[tokio::test]
    async fn transform_and_check() {
        let app = router();
        let p4 = include_str!("../../core/programs/p4.pl");
        let (status, body) = call(&app, "POST", api::TRANSFORM, serde_json::json!({"program": p4})).await;
        assert_eq!(status, StatusCode::OK);
        assert!(body["program"].as_str().unwrap().contains("p4231(A,B,C,D)"));
        let (status, body) = call(&app, "POST", api::TRANSFORM, serde_json::json!({"program": "p(a)."})).await;
        assert_eq!((status, body["kind"].as_str()), (StatusCode::BAD_REQUEST, Some("invalid")));

        let (_, body) =
            call(&app, "POST", api::CHECK, serde_json::json!({"program": GRAPH, "query": "p(a,X)", "iterations": true})).await;
        let resp: api::CheckResponse = serde_json::from_value(body).unwrap();
        assert!(resp.agrees);
        assert!(resp.iterations.unwrap().ends_with("Iteration 5: nothing new\n"));
    }

    #[tokio::test]
    async fn ingest_demo_opens_once() {
        let app = router();
        let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/programs/data");
        let (status, body) = call(
            &app,
            "POST",
            api::INGEST_DEMO,
            serde_json::json!({"file": "emp.txt", "ids": [1, 3, 9], "data_root": data}),
        )
        .await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let resp: api::IngestDemoResponse = serde_json::from_value(body).unwrap();
        assert_eq!(resp.file_opens, 1);
        assert_eq!(resp.answers.len(), 2);
        assert_eq!(resp.tables.len(), 1);
        assert!(resp.tables[0].0.starts_with("emp_data('emp.txt',"));
        assert_eq!(resp.tables[0].1, 3);
    }

    #[tokio::test]
    async fn bench_reports_each_size() {
        let app = router();
        let (status, body) =
            call(&app, "POST", api::BENCH, serde_json::json!({"sizes": [15, 100], "reps": 1, "warmup": 0})).await;
        assert_eq!(status, StatusCode::OK, "{body}");
        let resp: api::BenchResponse = serde_json::from_value(body).unwrap();
        assert_eq!(resp.points.len(), 2);
        assert_eq!(resp.points[0].occurrences, 15);
    }
}
