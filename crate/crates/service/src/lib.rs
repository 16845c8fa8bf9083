//! HTTP/JSON service: loaded models, counting, matching and live
//! derivation sessions. All state is in memory and keyed by sequential
//! integer ids.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path, Query, State as Extract};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{delete, get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::Mutex;

use plderive::io::{
    model_to_json, parse_any_draft, parse_lexicon, parse_requirements, ParseError, ParseErrorKind, SourceDocument,
};
use plderive::matcher::{match_requirements, Lexicon, MatchReport, Metric, StakeholderRequirement, Thresholds};
use plderive::rational::{decimal, format_decimal};
use plderive::session::{Decision, Session, SessionError};
use plderive::solver::{
    attribute_totals, count, optimize, Consequences, Direction, Objective, SolutionCursor, SolverError,
};
use plderive::validator::{validate, Validation};
use plderive::{compile, Configuration, ConstraintSystem, Diagnostic, FeatureModel, Rational, State};

/// A loaded model. Immutable once stored.
#[derive(Debug)]
pub struct ModelHandle {
    pub id: u64,
    pub model: Arc<FeatureModel>,
    pub system: Arc<ConstraintSystem>,
    pub validation: Validation,
}

#[derive(Debug)]
pub struct SessionHandle {
    pub id: u64,
    pub model_id: u64,
    pub session: Session,
    cursor: Option<SolutionCursor>,
    /// A solution taken from the cursor but not yet delivered.
    lookahead: Option<Configuration>,
}

impl SessionHandle {
    fn reset_cursor(&mut self) {
        self.cursor = None;
        self.lookahead = None;
    }
}

#[derive(Debug, Default)]
struct Registry {
    models: RwLock<HashMap<u64, Arc<ModelHandle>>>,
    sessions: RwLock<HashMap<u64, Arc<Mutex<SessionHandle>>>>,
    next_model: AtomicU64,
    next_session: AtomicU64,
}

/// Shared service state; cheap to clone.
#[derive(Clone, Debug, Default)]
pub struct AppState {
    inner: Arc<Registry>,
}

/// Error response body `{code, message, details}`.
#[derive(Debug)]
pub struct ApiError {
    pub status: StatusCode,
    pub code: &'static str,
    pub message: String,
    pub details: Value,
}

impl ApiError {
    fn new(status: StatusCode, code: &'static str, message: impl Into<String>) -> Self {
        ApiError { status, code, message: message.into(), details: Value::Null }
    }

    fn details(mut self, details: Value) -> Self {
        self.details = details;
        self
    }

    fn usage(message: impl Into<String>) -> Self {
        ApiError::new(StatusCode::BAD_REQUEST, "usage", message)
    }

    fn not_found(what: &str, id: &str) -> Self {
        ApiError::new(StatusCode::NOT_FOUND, "not_found", format!("no {what} with id {id}"))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({"code": self.code, "message": self.message, "details": self.details})))
            .into_response()
    }
}

impl From<ParseError> for ApiError {
    fn from(e: ParseError) -> Self {
        let details = serde_json::to_value(&e).expect("parse errors serialize");
        match e.kind {
            ParseErrorKind::Syntax => ApiError::usage(e.to_string()).details(details),
            ParseErrorKind::Semantic => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", e.to_string()).details(details)
            }
        }
    }
}

impl From<SessionError> for ApiError {
    fn from(e: SessionError) -> Self {
        let message = e.to_string();
        match e {
            SessionError::Rejected(diagnostics) => {
                ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", message)
                    .details(json!({ "diagnostics": diagnostics }))
            }
            SessionError::UnknownFeature(_) | SessionError::UnknownRequirement(_) => ApiError::usage(message),
            SessionError::NotOpen { feature, how, state } => ApiError::new(StatusCode::CONFLICT, "not_open", message)
                .details(json!({"feature": feature, "determination": how, "state": state})),
            SessionError::EmptyStack => ApiError::new(StatusCode::CONFLICT, "empty_stack", message),
            SessionError::Conflicted => ApiError::new(StatusCode::CONFLICT, "conflicted", message),
            SessionError::Incomplete => ApiError::new(StatusCode::CONFLICT, "incomplete", message),
            SessionError::Solver(e) => e.into(),
        }
    }
}

impl From<SolverError> for ApiError {
    fn from(e: SolverError) -> Self {
        let message = e.to_string();
        match e {
            SolverError::Unsat(conflict) => {
                ApiError::new(StatusCode::CONFLICT, "unsat", message).details(json!({ "conflict": conflict }))
            }
            SolverError::StaleCursor | SolverError::Overflow(_) => {
                ApiError::new(StatusCode::INTERNAL_SERVER_ERROR, "internal", message)
            }
            SolverError::UnknownFeature(_) | SolverError::UnknownAttribute(_) | SolverError::Contradictory(_) => {
                ApiError::usage(message)
            }
        }
    }
}

type ApiResult<T> = Result<T, ApiError>;

impl AppState {
    pub fn new() -> Self {
        AppState::default()
    }

    /// Parses and validates a model document (DSL or JSON) and stores it
    /// when it has no error diagnostics.
    pub fn load_model(&self, doc: &SourceDocument) -> ApiResult<(u64, Vec<Diagnostic>)> {
        let draft = parse_any_draft(doc)?;
        let (validation, model) = validate(&draft);
        let model = match model {
            Some(model) if !validation.has_errors() => model,
            _ => {
                return Err(ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", "model has errors")
                    .details(json!({ "diagnostics": validation.diagnostics })))
            }
        };
        let id = self.inner.next_model.fetch_add(1, Ordering::SeqCst) + 1;
        let diagnostics = validation.diagnostics.clone();
        let system = Arc::new(compile(&model));
        let handle = ModelHandle { id, model: Arc::new(model), system, validation };
        self.inner.models.write().expect("registry lock").insert(id, Arc::new(handle));
        Ok((id, diagnostics))
    }

    pub fn model(&self, id: &str) -> ApiResult<Arc<ModelHandle>> {
        id.parse::<u64>()
            .ok()
            .and_then(|n| self.inner.models.read().expect("registry lock").get(&n).cloned())
            .ok_or_else(|| ApiError::not_found("model", id))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<SessionHandle>>> {
        id.parse::<u64>()
            .ok()
            .and_then(|n| self.inner.sessions.read().expect("registry lock").get(&n).cloned())
            .ok_or_else(|| ApiError::not_found("session", id))
    }

    fn open_session(&self, model: &ModelHandle) -> ApiResult<(u64, Value)> {
        let session = Session::with_system(model.model.clone(), model.system.clone())?;
        let view = session_view(&session);
        let id = self.inner.next_session.fetch_add(1, Ordering::SeqCst) + 1;
        let handle = SessionHandle { id, model_id: model.id, session, cursor: None, lookahead: None };
        self.inner.sessions.write().expect("registry lock").insert(id, Arc::new(Mutex::new(handle)));
        Ok((id, view))
    }
}

pub fn router(state: AppState) -> Router {
    Router::new()
        .route("/models", post(post_model))
        .route("/models/{id}", get(get_model))
        .route("/models/{id}/count", get(get_count))
        .route("/models/{id}/sessions", post(post_session))
        .route("/models/{id}/match", post(post_match))
        .route("/sessions/{id}/decisions", post(post_decision))
        .route("/sessions/{id}/decisions/last", delete(delete_decision))
        .route("/sessions/{id}/whatif", post(post_whatif))
        .route("/sessions/{id}/solutions", get(get_solutions))
        .route("/sessions/{id}/optimize", post(post_optimize))
        .route("/sessions/{id}/musts", post(post_musts))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "not_found", "no such endpoint") })
        .with_state(state)
}

/// Serves until the listener fails.
pub async fn serve(listener: tokio::net::TcpListener, state: AppState) -> std::io::Result<()> {
    axum::serve(listener, router(state)).await
}

fn json_body<T: for<'de> Deserialize<'de>>(body: &Bytes) -> ApiResult<T> {
    serde_json::from_slice(body).map_err(|e| ApiError::usage(format!("malformed JSON body: {e}")))
}

fn decision_json(d: &Decision) -> Value {
    serde_json::to_value(d).expect("decisions serialize")
}

/// Consequence JSON: `{forced_in, forced_out, open, decided, status, conflict?}`.
fn consequences_view(c: &Consequences, decided: Vec<Value>) -> Value {
    let status = if c.is_conflict() {
        "conflicted"
    } else if c.open.is_empty() {
        "complete"
    } else {
        "open"
    };
    let mut view = json!({
        "forced_in": c.forced_in,
        "forced_out": c.forced_out,
        "open": c.open,
        "decided": decided,
        "status": status,
    });
    if let Some(conflict) = c.conflict() {
        view["conflict"] = serde_json::to_value(conflict).expect("conflicts serialize");
    }
    view
}

fn session_view(s: &Session) -> Value {
    consequences_view(s.consequences(), s.decisions().iter().map(decision_json).collect())
}

async fn post_model(Extract(state): Extract<AppState>, headers: HeaderMap, body: Bytes) -> ApiResult<Response> {
    let text = String::from_utf8(body.to_vec()).map_err(|_| ApiError::usage("body is not UTF-8"))?;
    let content_type = headers.get(header::CONTENT_TYPE).and_then(|v| v.to_str().ok()).unwrap_or("");
    if content_type.starts_with("application/json") && !text.trim_start().starts_with('{') {
        return Err(ApiError::usage("JSON model body must be an object"));
    }
    let (id, diagnostics) = state.load_model(&SourceDocument::new("request", text))?;
    Ok((StatusCode::CREATED, Json(json!({"model_id": id, "diagnostics": diagnostics}))).into_response())
}

async fn get_model(Extract(state): Extract<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let m = state.model(&id)?;
    Ok(Json(json!({
        "model_id": m.id,
        "model": model_to_json(&m.model),
        "diagnostics": m.validation.diagnostics,
    })))
}

async fn get_count(Extract(state): Extract<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let m = state.model(&id)?;
    let n = count(&m.system, &Default::default())?;
    Ok(Json(json!({ "count": n })))
}

async fn post_session(Extract(state): Extract<AppState>, Path(id): Path<String>) -> ApiResult<Response> {
    let m = state.model(&id)?;
    let (session_id, view) = state.open_session(&m)?;
    Ok((StatusCode::CREATED, Json(json!({"session_id": session_id, "consequences": view}))).into_response())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DecisionBody {
    feature: String,
    state: State,
}

async fn post_decision(
    Extract(state): Extract<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let body: DecisionBody = json_body(&body)?;
    let handle = state.session(&id)?;
    let mut h = handle.lock().await;
    h.session.decide(&body.feature, body.state)?;
    h.reset_cursor();
    Ok(Json(session_view(&h.session)))
}

async fn delete_decision(Extract(state): Extract<AppState>, Path(id): Path<String>) -> ApiResult<Json<Value>> {
    let handle = state.session(&id)?;
    let mut h = handle.lock().await;
    h.session.undo()?;
    h.reset_cursor();
    Ok(Json(session_view(&h.session)))
}

async fn post_whatif(Extract(state): Extract<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: DecisionBody = json_body(&body)?;
    let handle = state.session(&id)?;
    let h = handle.lock().await;
    let c = h.session.what_if(&body.feature, body.state)?;
    let mut decided: Vec<Value> = h.session.decisions().iter().map(decision_json).collect();
    decided.push(json!({"feature": body.feature, "state": body.state, "origin": "what-if"}));
    Ok(Json(json!({ "consequences": consequences_view(&c, decided) })))
}

#[derive(Deserialize)]
struct SolutionsQuery {
    limit: Option<usize>,
    restart: Option<bool>,
}

async fn get_solutions(
    Extract(state): Extract<AppState>,
    Path(id): Path<String>,
    query: Result<Query<SolutionsQuery>, axum::extract::rejection::QueryRejection>,
) -> ApiResult<Json<Value>> {
    let Query(query) = query.map_err(|e| ApiError::usage(e.body_text()))?;
    let limit = query.limit.unwrap_or(10);
    let handle = state.session(&id)?;
    let mut guard = handle.lock().await;
    let h = &mut *guard;
    if h.session.consequences().is_conflict() {
        return Err(SessionError::Conflicted.into());
    }
    if query.restart.unwrap_or(false) {
        h.reset_cursor();
    }
    let system = h.session.system().clone();
    if h.cursor.is_none() {
        let mut cursor = SolutionCursor::new(&system, &h.session.partial())?;
        h.lookahead = cursor.next(&system)?;
        h.cursor = Some(cursor);
    }
    let cursor = h.cursor.as_mut().expect("cursor installed");
    let mut configurations = Vec::new();
    while configurations.len() < limit {
        let Some(next) = h.lookahead.take() else { break };
        configurations.push(next.selected);
        h.lookahead = cursor.next(&system)?;
    }
    Ok(Json(json!({"configurations": configurations, "exhausted": h.lookahead.is_none()})))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct OptimizeBody {
    attr: String,
    #[serde(default = "minimize")]
    direction: Direction,
}

fn minimize() -> Direction {
    Direction::Minimize
}

fn totals_json(model: &FeatureModel, config: &Configuration) -> Value {
    attribute_totals(model, config).into_iter().map(|(k, v)| (k, Value::String(format_decimal(&v)))).collect()
}

async fn post_optimize(
    Extract(state): Extract<AppState>,
    Path(id): Path<String>,
    body: Bytes,
) -> ApiResult<Json<Value>> {
    let body: OptimizeBody = json_body(&body)?;
    let handle = state.session(&id)?;
    let h = handle.lock().await;
    if h.session.consequences().is_conflict() {
        return Err(SessionError::Conflicted.into());
    }
    let system = h.session.system();
    let objective = Objective::attribute(system, &body.attr, body.direction)?;
    let best = optimize(system, &h.session.partial(), &objective)?;
    Ok(Json(json!({
        "configuration": best.configuration.selected,
        "value": format_decimal(&best.value),
        "totals": totals_json(h.session.model(), &best.configuration),
    })))
}

/// Requirements or a lexicon given either as document text or as JSON.
#[derive(Deserialize)]
#[serde(untagged)]
enum Inline<T> {
    Text(String),
    Json(T),
}

#[derive(Deserialize)]
struct LexiconJson {
    #[serde(default, with = "decimal::option")]
    a: Option<Rational>,
    #[serde(default, with = "decimal::option")]
    b: Option<Rational>,
    #[serde(default)]
    homonyms: Vec<(String, String)>,
    /// `(child, parent)` pairs.
    #[serde(default)]
    hyponyms: Vec<(String, String)>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MatchBody {
    requirements: Inline<Vec<StakeholderRequirement>>,
    lexicon: Option<Inline<LexiconJson>>,
    #[serde(default)]
    metric: Option<String>,
    #[serde(default, with = "decimal::option")]
    threshold: Option<Rational>,
    #[serde(default, with = "decimal::option")]
    gap: Option<Rational>,
}

fn match_error(e: impl std::fmt::Display) -> ApiError {
    ApiError::new(StatusCode::UNPROCESSABLE_ENTITY, "validation", e.to_string())
}

impl MatchBody {
    fn requirements(&self) -> ApiResult<Vec<StakeholderRequirement>> {
        match &self.requirements {
            Inline::Text(text) => Ok(parse_requirements(&SourceDocument::new("requirements", text.clone()))?),
            Inline::Json(reqs) => Ok(reqs.clone()),
        }
    }

    fn lexicon(&self) -> ApiResult<Lexicon> {
        match &self.lexicon {
            None => Ok(Lexicon::default()),
            Some(Inline::Text(text)) => Ok(parse_lexicon(&SourceDocument::new("lexicon", text.clone()))?),
            Some(Inline::Json(j)) => {
                let mut lexicon = Lexicon::default();
                if let Some(a) = &j.a {
                    lexicon.set_a(a.clone()).map_err(match_error)?;
                }
                if let Some(b) = &j.b {
                    lexicon.set_b(b.clone()).map_err(match_error)?;
                }
                for (t1, t2) in &j.homonyms {
                    lexicon.add_homonym(t1, t2).map_err(match_error)?;
                }
                for (child, parent) in &j.hyponyms {
                    lexicon.add_hyponym(child, parent).map_err(match_error)?;
                }
                Ok(lexicon)
            }
        }
    }

    fn report(&self, model: &FeatureModel) -> ApiResult<(Vec<StakeholderRequirement>, MatchReport)> {
        let reqs = self.requirements()?;
        let lexicon = self.lexicon()?;
        let metric = match &self.metric {
            Some(m) => m.parse::<Metric>().map_err(ApiError::usage)?,
            None => Metric::Dice,
        };
        let defaults = Thresholds::default();
        let thresholds = Thresholds::new(
            self.threshold.clone().unwrap_or(defaults.matched),
            self.gap.clone().unwrap_or(defaults.gap),
        )
        .map_err(match_error)?;
        let report = match_requirements(&reqs, model, &lexicon, metric, &thresholds).map_err(match_error)?;
        Ok((reqs, report))
    }
}

async fn post_match(Extract(state): Extract<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: MatchBody = json_body(&body)?;
    let m = state.model(&id)?;
    let (_, report) = body.report(&m.model)?;
    Ok(Json(serde_json::to_value(report).expect("reports serialize")))
}

async fn post_musts(Extract(state): Extract<AppState>, Path(id): Path<String>, body: Bytes) -> ApiResult<Json<Value>> {
    let body: MatchBody = json_body(&body)?;
    let handle = state.session(&id)?;
    let mut h = handle.lock().await;
    let (reqs, report) = body.report(h.session.model())?;
    let outcome = h.session.apply_musts(&reqs, &report)?;
    h.reset_cursor();
    let view = session_view(&h.session);
    if h.session.consequences().is_conflict() {
        return Err(ApiError::new(StatusCode::CONFLICT, "conflicted", "must requirements conflict")
            .details(json!({"outcome": outcome, "consequences": view})));
    }
    Ok(Json(json!({
        "outcome": outcome,
        "consequences": view,
        "capitalization_candidates": h.session.capitalization_candidates(),
        "report": report,
    })))
}
