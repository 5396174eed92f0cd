//! HTTP+JSON API over a shared engine.
//!
//! Sessions live in memory under sequential ids. Each session sits behind its
//! own mutex so its turns run one at a time while other sessions proceed.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use ontoquery::compiler::Card;
use ontoquery::dialogue::{BotReply, Condition, DialogueSession, ReplyKind};
use ontoquery::engine::{Engine, EngineError};
use serde::{Deserialize, Serialize};

pub struct AppState {
    engine: Engine,
    sessions: Mutex<BTreeMap<String, Arc<Mutex<DialogueSession>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(engine: Engine) -> Arc<AppState> {
        Arc::new(AppState {
            engine,
            sessions: Mutex::new(BTreeMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    fn session(&self, id: &str) -> Option<Arc<Mutex<DialogueSession>>> {
        self.sessions.lock().unwrap().get(id).cloned()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofEntry {
    pub solution: usize,
    pub pattern: String,
    pub triple: String,
}

/// One bot reply as sent over the wire.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApiReply {
    pub kind: ReplyKind,
    pub text: String,
    pub state: String,
    pub condition: Condition,
    pub cards: Vec<Card>,
    pub sparql: Option<String>,
    pub proof: Vec<ProofEntry>,
    pub candidate_count: Option<usize>,
    pub dot: String,
}

impl ApiReply {
    pub fn from_reply(reply: &BotReply, engine: &Engine) -> ApiReply {
        let kg = engine.kg().read().unwrap();
        let (cards, proof) = match &reply.answer {
            Some(a) => (
                a.cards.clone(),
                a.proof
                    .iter()
                    .map(|p| ProofEntry {
                        solution: p.solution,
                        pattern: p.pattern.clone(),
                        triple: kg.compact_triple(&p.triple),
                    })
                    .collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        ApiReply {
            kind: reply.kind,
            text: reply.text.clone(),
            state: reply.state.clone(),
            condition: reply.condition,
            cards,
            sparql: reply.sparql.clone(),
            proof,
            candidate_count: reply.candidate_count,
            dot: reply.dot.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionCreated {
    pub id: String,
    pub state: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MessageRequest {
    text: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextTurn {
    pub utterance: String,
    pub read_with: Vec<String>,
    pub reply: ApiReply,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionContext {
    pub id: String,
    pub state: String,
    pub pending: Option<Vec<String>>,
    pub turns: Vec<ContextTurn>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExtractRequest {
    text: String,
    #[serde(default = "yes")]
    commit: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractReport {
    pub sparql: String,
    pub triples: Vec<String>,
    pub inserted: usize,
    pub committed: bool,
    pub dot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(ErrorBody { error: self.1 })).into_response()
    }
}

fn body<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<T, ApiError> {
    serde_json::from_slice(bytes).map_err(|e| ApiError(StatusCode::BAD_REQUEST, format!("malformed body: {e}")))
}

fn non_empty(text: &str) -> Result<(), ApiError> {
    if text.trim().is_empty() {
        return Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, "text is empty".into()));
    }
    Ok(())
}

fn unknown_session(id: &str) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("no session {id}"))
}

async fn blocking<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> Result<T, ApiError> {
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))
}

async fn create_session(State(app): State<Arc<AppState>>) -> (StatusCode, Json<SessionCreated>) {
    let id = format!("session-{}", app.next_id.fetch_add(1, Ordering::SeqCst));
    let session = app.engine.new_session(id.clone());
    let state = session.state.clone();
    app.sessions
        .lock()
        .unwrap()
        .insert(id.clone(), Arc::new(Mutex::new(session)));
    (StatusCode::CREATED, Json(SessionCreated { id, state }))
}

async fn post_message(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    bytes: Bytes,
) -> Result<Json<ApiReply>, ApiError> {
    let session = app.session(&id).ok_or_else(|| unknown_session(&id))?;
    let request: MessageRequest = body(&bytes)?;
    non_empty(&request.text)?;
    let reply = blocking(move || {
        let mut s = session.lock().unwrap();
        let reply = app.engine.handle_turn(&mut s, &request.text);
        ApiReply::from_reply(&reply, &app.engine)
    })
    .await?;
    Ok(Json(reply))
}

async fn get_context(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionContext>, ApiError> {
    let session = app.session(&id).ok_or_else(|| unknown_session(&id))?;
    let s = session.lock().unwrap();
    Ok(Json(SessionContext {
        id: s.id.clone(),
        state: s.state.clone(),
        pending: s.pending.clone(),
        turns: s
            .history
            .iter()
            .map(|t| ContextTurn {
                utterance: t.utterance.clone(),
                read_with: t.read_with.clone(),
                reply: ApiReply::from_reply(&t.reply, &app.engine),
            })
            .collect(),
    }))
}

async fn graph_stats(State(app): State<Arc<AppState>>) -> Json<BTreeMap<String, usize>> {
    Json(app.engine.stats())
}

async fn extract(State(app): State<Arc<AppState>>, bytes: Bytes) -> Result<Json<ExtractReport>, ApiError> {
    let request: ExtractRequest = body(&bytes)?;
    non_empty(&request.text)?;
    let commit = request.commit;
    let result = blocking(move || app.engine.extract(&request.text, commit)).await?;
    match result {
        Ok(x) => Ok(Json(ExtractReport {
            sparql: x.sparql,
            triples: x.triples,
            inserted: x.inserted,
            committed: commit,
            dot: x.dot,
        })),
        Err(
            e @ (EngineError::Disconnected(_)
            | EngineError::Ambiguous(_)
            | EngineError::Compile(_)
            | EngineError::Pipeline(_)),
        ) => Err(ApiError(StatusCode::UNPROCESSABLE_ENTITY, e.to_string())),
        Err(e) => Err(ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string())),
    }
}

async fn health() -> Json<serde_json::Value> {
    Json(serde_json::json!({ "status": "ok" }))
}

pub fn router(app: Arc<AppState>) -> Router {
    Router::new()
        .route("/sessions", post(create_session))
        .route("/sessions/{id}/messages", post(post_message))
        .route("/sessions/{id}/context", get(get_context))
        .route("/graph/stats", get(graph_stats))
        .route("/extract", post(extract))
        .route("/health", get(health))
        .with_state(app)
}
