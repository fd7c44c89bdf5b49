//! HTTP session API over the tutoring engine.
//!
//! Each session is a suspended [`Session`] state machine. A request takes the
//! session's lock (a busy session answers 409), runs the engine on a blocking
//! thread until the next question or a terminal status, and returns every
//! message produced on the way.
//!
//! | method | path | body | reply |
//! |---|---|---|---|
//! | POST | `/sessions` | [`CreateRequest`] (may be empty) | 201 [`TurnReply`] |
//! | POST | `/sessions/{id}/answer` | [`Answer`] | [`TurnReply`] |
//! | GET | `/sessions/{id}` | | [`StateReply`] |
//! | GET | `/sessions/{id}/metrics` | | [`RunMetrics`] |
//! | GET | `/sessions/{id}/events` | | list of [`SessionEvent`] |
//! | DELETE | `/sessions/{id}` | | 204 |
//!
//! Errors come back as `{"error": "..."}` with 400 (bad request or config),
//! 404 (unknown id), 409 (no pending prompt, or the session is busy) or 422
//! (answer does not fit the prompt).

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::{Arc, Mutex as StdMutex};
use std::time::{SystemTime, UNIX_EPOCH};

use axum::body::Bytes;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use socratic_ga::metrics::compute;
use socratic_ga::stores::KnownEntry;
use socratic_ga::{
    Answer, Domain, Error, GaConfig, Prompt, RunMetrics, Session, SessionEvent, SessionStatus,
    Target, Turn, VariableId,
};
use tokio::sync::Mutex;
use tower_http::cors::{Any, CorsLayer};
use tower_http::services::ServeDir;
use uuid::Uuid;

/// One live session.
#[derive(Debug, Serialize, Deserialize)]
pub struct Entry {
    pub id: Uuid,
    /// Seconds since the Unix epoch.
    pub created: u64,
    pub session: Session,
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<StdMutex<HashMap<Uuid, Arc<Mutex<Entry>>>>>,
    snapshot_dir: Option<PathBuf>,
}

impl AppState {
    pub fn new() -> AppState {
        AppState::default()
    }

    /// Saves every session to `<dir>/<id>.json` after each change, and picks
    /// up any snapshots already there.
    pub fn with_snapshots(dir: PathBuf) -> std::io::Result<AppState> {
        std::fs::create_dir_all(&dir)?;
        let state = AppState {
            snapshot_dir: Some(dir.clone()),
            ..AppState::default()
        };
        for file in std::fs::read_dir(&dir)? {
            let path = file?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let text = std::fs::read_to_string(&path)?;
            if let Ok(entry) = serde_json::from_str::<Entry>(&text) {
                state.insert(entry);
            }
        }
        Ok(state)
    }

    fn insert(&self, entry: Entry) {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .insert(entry.id, Arc::new(Mutex::new(entry)));
    }

    /// The handle for session `id`, if it exists.
    pub fn entry(&self, id: Uuid) -> Option<Arc<Mutex<Entry>>> {
        self.sessions
            .lock()
            .expect("session table poisoned")
            .get(&id)
            .cloned()
    }

    fn remove(&self, id: Uuid) -> bool {
        let gone = self
            .sessions
            .lock()
            .expect("session table poisoned")
            .remove(&id)
            .is_some();
        if let Some(dir) = &self.snapshot_dir {
            let _ = std::fs::remove_file(dir.join(format!("{id}.json")));
        }
        gone
    }

    fn save(&self, entry: &Entry) {
        if let Some(dir) = &self.snapshot_dir {
            if let Ok(text) = serde_json::to_string(entry) {
                let _ = std::fs::write(dir.join(format!("{}.json", entry.id)), text);
            }
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateRequest {
    pub seed: Option<u64>,
    pub config: Option<GaConfig>,
    /// Ask the student what the problem wants. Defaults to true.
    pub target_capture: Option<bool>,
    /// Preset sought quantity; skips the opening question.
    pub target: Option<VariableId>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct TurnReply {
    pub id: Uuid,
    pub status: SessionStatus,
    pub generation: u32,
    /// Messages shown since the last answer, in order.
    pub messages: Vec<Prompt>,
    /// The question awaiting an answer; absent once the session has ended.
    pub pending: Option<Prompt>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ObjectRow {
    pub object: u8,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ZoneRow {
    pub object: u8,
    pub zone: u8,
    pub description: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StateReply {
    pub id: Uuid,
    pub created: u64,
    pub status: SessionStatus,
    pub generation: u32,
    pub seed: u64,
    pub config: GaConfig,
    pub target_variable: Option<VariableId>,
    pub target: Option<Target>,
    pub solved_at: Option<u32>,
    pub objects: Vec<ObjectRow>,
    pub zones: Vec<ZoneRow>,
    pub knowns: Vec<KnownEntry>,
    pub pending: Option<Prompt>,
    pub metrics: RunMetrics,
}

pub struct ApiError(StatusCode, String);

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.0, Json(serde_json::json!({ "error": self.1 }))).into_response()
    }
}

impl From<Error> for ApiError {
    fn from(e: Error) -> ApiError {
        let code = match e {
            Error::InvalidConfig(_) => StatusCode::BAD_REQUEST,
            Error::AnswerShape(_) => StatusCode::UNPROCESSABLE_ENTITY,
            Error::NoPendingPrompt => StatusCode::CONFLICT,
            _ => StatusCode::INTERNAL_SERVER_ERROR,
        };
        ApiError(code, e.to_string())
    }
}

type ApiResult<T> = Result<T, ApiError>;

fn not_found(id: Uuid) -> ApiError {
    ApiError(StatusCode::NOT_FOUND, format!("no session {id}"))
}

fn busy() -> ApiError {
    ApiError(
        StatusCode::CONFLICT,
        "the session is handling another request".into(),
    )
}

/// Runs the engine until the next question or the end, collecting messages.
fn advance(session: &mut Session) -> socratic_ga::Result<(Vec<Prompt>, Option<Prompt>)> {
    let mut messages = Vec::new();
    loop {
        match session.poll()? {
            Turn::Say(p) => messages.push(p),
            Turn::Ask(p) => return Ok((messages, Some(p))),
            Turn::Finished(_) => return Ok((messages, None)),
        }
    }
}

fn reply(entry: &Entry, messages: Vec<Prompt>, pending: Option<Prompt>) -> TurnReply {
    TurnReply {
        id: entry.id,
        status: entry.session.status(),
        generation: entry.session.generation(),
        messages,
        pending,
    }
}

type Guard = tokio::sync::OwnedMutexGuard<Entry>;

/// Applies `answer` (if any) and advances on a blocking thread. The session
/// stays locked throughout, so turns on one id never interleave.
async fn turn(mut entry: Guard, answer: Option<Answer>) -> ApiResult<(Guard, TurnReply)> {
    tokio::task::spawn_blocking(move || {
        let session = &mut entry.session;
        let result = match answer {
            Some(a) => session.respond(a).and_then(|_| advance(session)),
            None => advance(session),
        };
        result
            .map(|(messages, pending)| {
                let r = reply(&entry, messages, pending);
                (entry, r)
            })
            .map_err(ApiError::from)
    })
    .await
    .map_err(|e| ApiError(StatusCode::INTERNAL_SERVER_ERROR, e.to_string()))?
}

async fn create(
    State(state): State<AppState>,
    body: Bytes,
) -> ApiResult<(StatusCode, Json<TurnReply>)> {
    let request: CreateRequest = if body.iter().all(u8::is_ascii_whitespace) {
        CreateRequest::default()
    } else {
        serde_json::from_slice(&body)
            .map_err(|e| ApiError(StatusCode::BAD_REQUEST, e.to_string()))?
    };
    let config = request.config.unwrap_or_default();
    let seed = request.seed.unwrap_or_else(rand_seed);
    let mut session = Session::new(config, seed, Domain::bundled())?
        .with_target_capture(request.target_capture.unwrap_or(true));
    if let Some(v) = request.target {
        session = session.with_target_variable(v);
    }
    let entry = Entry {
        id: Uuid::new_v4(),
        created: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        session,
    };
    let id = entry.id;
    state.insert(entry);
    let handle = state.entry(id).ok_or_else(|| not_found(id))?;
    let guard = handle.try_lock_owned().map_err(|_| busy())?;
    let (guard, reply) = match turn(guard, None).await {
        Ok(done) => done,
        Err(e) => {
            state.remove(id);
            return Err(e);
        }
    };
    state.save(&guard);
    Ok((StatusCode::CREATED, Json(reply)))
}

fn rand_seed() -> u64 {
    // Ids are random; reuse their entropy for unseeded sessions.
    Uuid::new_v4().as_u64_pair().0
}

async fn answer(
    State(state): State<AppState>,
    Path(id): Path<Uuid>,
    Json(answer): Json<Answer>,
) -> ApiResult<Json<TurnReply>> {
    let handle = state.entry(id).ok_or_else(|| not_found(id))?;
    let entry = handle.try_lock_owned().map_err(|_| busy())?;
    entry
        .session
        .pending()
        .ok_or(Error::NoPendingPrompt)?
        .check(&answer)?;
    let (entry, reply) = turn(entry, Some(answer)).await?;
    state.save(&entry);
    Ok(Json(reply))
}

async fn get_state(
    State(state): State<AppState>,
    Path(id): Path<Uuid>,
) -> ApiResult<Json<StateReply>> {
    let handle = state.entry(id).ok_or_else(|| not_found(id))?;
    let entry = handle.try_lock_owned().map_err(|_| busy())?;
    let s = &entry.session;
    let metrics = metrics_of(s)?;
    Ok(Json(StateReply {
        id: entry.id,
        created: entry.created,
        status: s.status(),
        generation: s.generation(),
        seed: s.seed(),
        config: s.config().clone(),
        target_variable: s.target_variable(),
        target: s.target(),
        solved_at: metrics.solved_at,
        objects: s
            .stores()
            .objects
            .iter()
            .map(|(object, d)| ObjectRow {
                object,
                description: d.to_string(),
            })
            .collect(),
        zones: s
            .stores()
            .zones
            .iter()
            .map(|(object, zone, d)| ZoneRow {
                object,
                zone,
                description: d.to_string(),
            })
            .collect(),
        knowns: s.stores().knowns.iter().cloned().collect(),
        pending: s.pending().cloned(),
        metrics,
    }))
}

fn metrics_of(s: &Session) -> ApiResult<RunMetrics> {
    if s.events().is_empty() {
        return Ok(RunMetrics {
            per_generation: Vec::new(),
            knowns_timeline: Vec::new(),
            solved_at: None,
        });
    }
    Ok(compute(s.events())?)
}

async fn get_metrics(
    State(state): State<AppState>,
    Path(id): Path<Uuid>,
) -> ApiResult<Json<RunMetrics>> {
    let handle = state.entry(id).ok_or_else(|| not_found(id))?;
    let entry = handle.try_lock_owned().map_err(|_| busy())?;
    Ok(Json(metrics_of(&entry.session)?))
}

async fn get_events(
    State(state): State<AppState>,
    Path(id): Path<Uuid>,
) -> ApiResult<Json<Vec<SessionEvent>>> {
    let handle = state.entry(id).ok_or_else(|| not_found(id))?;
    let entry = handle.try_lock_owned().map_err(|_| busy())?;
    Ok(Json(entry.session.events().to_vec()))
}

async fn delete(State(state): State<AppState>, Path(id): Path<Uuid>) -> ApiResult<StatusCode> {
    if state.remove(id) {
        Ok(StatusCode::NO_CONTENT)
    } else {
        Err(not_found(id))
    }
}

/// The API routes, with permissive CORS for a separately served UI. When
/// `static_dir` is given, other paths serve files from it.
pub fn router(state: AppState, static_dir: Option<PathBuf>) -> Router {
    let cors = CorsLayer::new()
        .allow_origin(Any)
        .allow_methods(Any)
        .allow_headers(Any);
    let api = Router::new()
        .route("/sessions", post(create))
        .route("/sessions/{id}", get(get_state).delete(delete))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/metrics", get(get_metrics))
        .route("/sessions/{id}/events", get(get_events))
        .with_state(state);
    let app = match static_dir {
        Some(dir) => api.fallback_service(ServeDir::new(dir)),
        None => api,
    };
    app.layer(cors)
}
