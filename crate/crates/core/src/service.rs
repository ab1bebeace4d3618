//! JSON-over-HTTP API under `/api/v1`.
//!
//! Sessions live in `data_dir/sessions/<id>/log.json`, rewritten after every
//! answer; a session missing from memory is rebuilt from that log. Graphs are
//! stored by content hash in `data_dir/graphs/<sha256>.json`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use axum::extract::{Path as UrlPath, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::catalogs::{render_pair, Catalog, RenderedPair};
use crate::encoding::{Answer, EncodingError, Session, SessionLog, SessionOptions, SessionState};
use crate::graph::{ConstraintGraph, ElementId, GraphError};
use crate::prioritization::{prioritize, render_sizes, RankedSet};
use crate::scoring::{feasible_distances, generate_scores, peg_and_regenerate, ScoringConfig, ScoringError};
use crate::unification::{unify_with_degrees, UnificationError};

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    message: String,
}

impl ApiError {
    fn new(status: StatusCode, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }

    fn not_found(what: &str, id: &str) -> Self {
        Self::new(StatusCode::NOT_FOUND, format!("unknown {what} {id}"))
    }

    fn internal(e: impl std::fmt::Display) -> Self {
        Self::new(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(json!({ "error": self.message }))).into_response()
    }
}

impl From<EncodingError> for ApiError {
    fn from(e: EncodingError) -> Self {
        let status = match e {
            EncodingError::Stale { .. } | EncodingError::SessionDone => StatusCode::CONFLICT,
            _ => StatusCode::UNPROCESSABLE_ENTITY,
        };
        Self::new(status, e.to_string())
    }
}

impl From<GraphError> for ApiError {
    fn from(e: GraphError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl From<ScoringError> for ApiError {
    fn from(e: ScoringError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

impl From<UnificationError> for ApiError {
    fn from(e: UnificationError) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

struct Inner {
    data_dir: PathBuf,
    catalog: Option<Catalog>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
}

#[derive(Clone)]
pub struct AppState(Arc<Inner>);

impl AppState {
    pub fn new(data_dir: impl Into<PathBuf>, catalog: Option<Catalog>) -> std::io::Result<Self> {
        let data_dir = data_dir.into();
        fs::create_dir_all(data_dir.join("sessions"))?;
        fs::create_dir_all(data_dir.join("graphs"))?;
        Ok(Self(Arc::new(Inner {
            data_dir,
            catalog,
            sessions: Mutex::new(HashMap::new()),
        })))
    }

    fn session_dir(&self, id: &str) -> PathBuf {
        self.0.data_dir.join("sessions").join(id)
    }

    fn graph_path(&self, id: &str) -> PathBuf {
        self.0.data_dir.join("graphs").join(format!("{id}.json"))
    }

    fn session(&self, id: &str) -> ApiResult<Arc<Mutex<Session>>> {
        if uuid::Uuid::parse_str(id).is_err() {
            return Err(ApiError::not_found("session", id));
        }
        let mut map = self.0.sessions.lock().expect("session map lock");
        if let Some(s) = map.get(id) {
            return Ok(s.clone());
        }
        let path = self.session_dir(id).join("log.json");
        let text = fs::read_to_string(&path).map_err(|_| ApiError::not_found("session", id))?;
        let log = SessionLog::from_json(&text)?;
        let session = Session::replay(&log, &log.options.insertion_order)?;
        let s = Arc::new(Mutex::new(session));
        map.insert(id.to_string(), s.clone());
        Ok(s)
    }

    fn checkpoint(&self, id: &str, session: &Session) -> ApiResult<()> {
        let dir = self.session_dir(id);
        fs::create_dir_all(&dir).map_err(ApiError::internal)?;
        write_atomic(&dir.join("log.json"), &session.log().to_json())
    }

    /// Stores a graph under its content hash and returns the id.
    pub fn store_graph(&self, g: &ConstraintGraph) -> ApiResult<String> {
        let id = g.content_hash();
        let path = self.graph_path(&id);
        if !path.exists() {
            write_atomic(&path, &g.to_json())?;
        }
        Ok(id)
    }

    pub fn load_graph(&self, id: &str) -> ApiResult<ConstraintGraph> {
        let valid = id.len() == 64 && id.bytes().all(|b| b.is_ascii_hexdigit());
        if !valid {
            return Err(ApiError::not_found("graph", id));
        }
        let text =
            fs::read_to_string(self.graph_path(id)).map_err(|_| ApiError::not_found("graph", id))?;
        ConstraintGraph::from_json(&text).map_err(ApiError::internal)
    }
}

fn write_atomic(path: &Path, text: &str) -> ApiResult<()> {
    let tmp = path.with_extension("json.tmp");
    fs::write(&tmp, text).map_err(ApiError::internal)?;
    fs::rename(&tmp, path).map_err(ApiError::internal)
}

fn json_text(text: String) -> Response {
    ([(header::CONTENT_TYPE, "application/json")], text).into_response()
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CreateSessionRequest {
    #[serde(default)]
    pub catalog_ref: Option<String>,
    #[serde(default = "yes")]
    pub allow_equal: bool,
    #[serde(default = "yes")]
    pub allow_degree2: bool,
    /// Defaults to every comparable element of the configured catalog.
    #[serde(default)]
    pub insertion_order: Option<Vec<ElementId>>,
    #[serde(default)]
    pub rng_seed: u64,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct QuestionView {
    pub new_element: ElementId,
    pub probe: ElementId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rendered: Option<RenderedPair>,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionView {
    pub session_id: String,
    pub state: SessionState,
    /// Index the next answer must carry.
    pub index: usize,
    pub answered: usize,
    pub expected: usize,
    pub question: Option<QuestionView>,
    /// Stored graph id once the session is done.
    pub graph_id: Option<String>,
}

impl AppState {
    fn view(&self, id: &str, s: &Session) -> ApiResult<SessionView> {
        let question = match s.next_question() {
            Ok(q) => Some(QuestionView {
                rendered: self
                    .0
                    .catalog
                    .as_ref()
                    .and_then(|c| render_pair(c, q.new_element.as_str(), q.probe.as_str())),
                new_element: q.new_element,
                probe: q.probe,
            }),
            Err(_) => None,
        };
        let graph_id = if s.is_done() {
            Some(self.store_graph(&s.graph()?)?)
        } else {
            None
        };
        Ok(SessionView {
            session_id: id.to_string(),
            state: s.state(),
            index: s.answer_count(),
            answered: s.answer_count(),
            expected: s.expected_questions(),
            question,
            graph_id,
        })
    }
}

async fn create_session(
    State(st): State<AppState>,
    Json(req): Json<CreateSessionRequest>,
) -> ApiResult<(StatusCode, Json<SessionView>)> {
    let catalog_ids = st.0.catalog.as_ref().map(|c| c.element_ids());
    let order = match (req.insertion_order, &catalog_ids) {
        (Some(order), _) => order,
        (None, Some(ids)) => ids.clone(),
        (None, None) => {
            return Err(ApiError::new(
                StatusCode::UNPROCESSABLE_ENTITY,
                "insertionOrder is required when no catalog is configured",
            ))
        }
    };
    let universe = catalog_ids.unwrap_or_else(|| order.clone());
    let options = SessionOptions {
        allow_equal: req.allow_equal,
        allow_degree2: req.allow_degree2,
        insertion_order: order,
        rng_seed: req.rng_seed,
    };
    let catalog_ref = req.catalog_ref.unwrap_or_else(|| "default".to_string());
    let session = Session::start(catalog_ref, &universe, options)?;
    let id = uuid::Uuid::new_v4().to_string();
    st.checkpoint(&id, &session)?;
    let view = st.view(&id, &session)?;
    st.0.sessions
        .lock()
        .expect("session map lock")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)))
}

async fn get_question(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<SessionView>> {
    let s = st.session(&id)?;
    let s = s.lock().expect("session lock");
    Ok(Json(st.view(&id, &s)?))
}

#[derive(Debug, Deserialize)]
pub struct AnswerRequest {
    pub index: usize,
    pub answer: Answer,
}

async fn post_answer(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<AnswerRequest>,
) -> ApiResult<Json<SessionView>> {
    let s = st.session(&id)?;
    let mut s = s.lock().expect("session lock");
    s.submit_indexed(req.index, req.answer)?;
    st.checkpoint(&id, &s)?;
    Ok(Json(st.view(&id, &s)?))
}

async fn session_graph(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let g = s.lock().expect("session lock").graph()?;
    Ok(json_text(g.to_json()))
}

async fn session_log(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    let s = st.session(&id)?;
    let log = s.lock().expect("session lock").log();
    Ok(json_text(log.to_json()))
}

async fn post_graph(State(st): State<AppState>, body: String) -> ApiResult<(StatusCode, Json<Value>)> {
    let g = ConstraintGraph::from_json(&body)?;
    let id = st.store_graph(&g)?;
    Ok((StatusCode::CREATED, Json(json!({ "graphId": id }))))
}

async fn get_graph(State(st): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<Response> {
    Ok(json_text(st.load_graph(&id)?.to_json()))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UnifyRequest {
    pub graph_ids: Vec<String>,
}

async fn post_unify(State(st): State<AppState>, Json(req): Json<UnifyRequest>) -> ApiResult<Json<Value>> {
    let graphs = req
        .graph_ids
        .iter()
        .map(|id| st.load_graph(id))
        .collect::<ApiResult<Vec<_>>>()?;
    let (unified, report) = unify_with_degrees(&graphs)?;
    let id = st.store_graph(&unified)?;
    let graph: Value = serde_json::from_str(&unified.to_json()).map_err(ApiError::internal)?;
    Ok(Json(json!({ "graphId": id, "graph": graph, "report": report })))
}

#[derive(Debug, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ScoresRequest {
    #[serde(flatten)]
    pub config: ScoringConfig,
    /// Step of the feasibility curve; defaults to a hundredth of the range.
    #[serde(default)]
    pub d1_step: Option<f64>,
}

async fn post_scores(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<ScoresRequest>,
) -> ApiResult<Json<Value>> {
    let g = st.load_graph(&id)?;
    let assignment = generate_scores(&g, &req.config)?;
    let cfg = &req.config;
    let step = req.d1_step.unwrap_or((cfg.max_score - cfg.min_score) / 100.0);
    let curve = feasible_distances(&g, cfg.min_score, cfg.max_score, step);
    Ok(Json(json!({ "assignment": assignment, "curve": curve })))
}

#[derive(Debug, Deserialize)]
pub struct PegRequest {
    pub config: ScoringConfig,
    pub pegs: BTreeMap<ElementId, f64>,
}

async fn post_pegs(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(req): Json<PegRequest>,
) -> ApiResult<Json<Value>> {
    let g = st.load_graph(&id)?;
    let (config, assignment) = peg_and_regenerate(&g, &req.config, &req.pegs)?;
    Ok(Json(json!({ "config": config, "assignment": assignment })))
}

#[derive(Debug, Serialize)]
pub struct PrioritiesView {
    pub sets: Vec<RankedSet>,
    pub sizes: String,
}

async fn get_priorities(
    State(st): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> ApiResult<Json<PrioritiesView>> {
    let g = st.load_graph(&id)?;
    let sets = prioritize(&g);
    let sizes = render_sizes(&sets);
    Ok(Json(PrioritiesView { sets, sizes }))
}

async fn get_catalog(State(st): State<AppState>) -> ApiResult<Response> {
    match &st.0.catalog {
        Some(c) => Ok(json_text(c.to_json())),
        None => Err(ApiError::not_found("catalog", "(none configured)")),
    }
}

pub fn router(state: AppState) -> Router {
    let api = Router::new()
        .route("/catalog", get(get_catalog))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/question", get(get_question))
        .route("/sessions/{id}/answers", post(post_answer))
        .route("/sessions/{id}/graph", get(session_graph))
        .route("/sessions/{id}/log", get(session_log))
        .route("/graphs", post(post_graph))
        .route("/graphs/{id}", get(get_graph))
        .route("/graphs/{id}/scores", post(post_scores))
        .route("/graphs/{id}/pegs", post(post_pegs))
        .route("/graphs/{id}/priorities", get(get_priorities))
        .route("/unify", post(post_unify));
    Router::new().nest("/api/v1", api).with_state(state)
}

pub async fn serve(state: AppState, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    axum::serve(listener, router(state)).await
}
