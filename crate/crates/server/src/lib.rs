//! HTTP front end for the session manager: JSON commands, and a
//! server-sent event stream per session for questions and grid updates.

use std::convert::Infallible;
use std::path::Path;
use std::sync::Arc;

use axum::extract::{Path as UrlPath, Query, State};
use axum::http::StatusCode;
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures::stream::{self, Stream, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::broadcast::{self, error::RecvError};

use cobuild_core::grid::{Color, PartKind};
use cobuild_core::pipeline::TurnOutcome;
use cobuild_core::session::{ApplyRequest, ServiceConfig, ServiceError, SessionEvent, SessionManager, SessionState, ShapeSummary};

/// Reads a TOML config file. Unknown keys are errors.
pub fn load_config(path: &Path) -> anyhow::Result<ServiceConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> anyhow::Result<ServiceConfig> {
    let config: ServiceConfig = toml::from_str(text)?;
    config.backend.validate().map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok(config)
}

#[derive(Clone)]
pub struct AppState {
    pub manager: Arc<SessionManager>,
    events: broadcast::Sender<SessionEvent>,
}

impl AppState {
    /// Wires the manager's events into a broadcast channel for the SSE
    /// handlers.
    pub fn new(manager: SessionManager) -> AppState {
        let (tx, _) = broadcast::channel(1024);
        let sender = tx.clone();
        manager.set_listener(Arc::new(move |e: &SessionEvent| {
            // No subscribers is fine.
            let _ = sender.send(e.clone());
        }));
        AppState {
            manager: Arc::new(manager),
            events: tx,
        }
    }
}

pub struct ApiError(ServiceError);

impl From<ServiceError> for ApiError {
    fn from(e: ServiceError) -> Self {
        ApiError(e)
    }
}

#[derive(Serialize, Deserialize, Debug)]
pub struct ErrorBody {
    pub error: String,
    pub message: String,
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code) = match &self.0 {
            ServiceError::BadConfig(_) => (StatusCode::BAD_REQUEST, "bad-config"),
            ServiceError::SessionNotFound(_) => (StatusCode::NOT_FOUND, "session-not-found"),
            ServiceError::SessionBusy => (StatusCode::CONFLICT, "session-busy"),
            ServiceError::NoPendingQuestion => (StatusCode::CONFLICT, "no-pending-question"),
            ServiceError::UnknownQuestion(_) => (StatusCode::CONFLICT, "unknown-question"),
            ServiceError::CorruptLog(_) => (StatusCode::UNPROCESSABLE_ENTITY, "corrupt-log"),
            ServiceError::Rejected(_) => (StatusCode::UNPROCESSABLE_ENTITY, "rejected"),
            ServiceError::Io(_) => (StatusCode::INTERNAL_SERVER_ERROR, "io"),
        };
        let body = ErrorBody {
            error: code.into(),
            message: self.0.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ApiError>;

/// Runs a manager call off the async workers; turns may block on a remote
/// model.
async fn blocking<T: Send + 'static>(
    app: &AppState,
    f: impl FnOnce(&SessionManager) -> Result<T, ServiceError> + Send + 'static,
) -> Result<T, ApiError> {
    let manager = app.manager.clone();
    tokio::task::spawn_blocking(move || f(&manager))
        .await
        .map_err(|e| ApiError(ServiceError::Io(format!("turn worker failed: {e}"))))?
        .map_err(ApiError)
}

#[derive(Serialize, Deserialize, Debug)]
pub struct Created {
    pub id: String,
}

async fn create_session(State(app): State<AppState>) -> Result<(StatusCode, Json<Created>), ApiError> {
    let id = blocking(&app, |m| m.create_session()).await?;
    Ok((StatusCode::CREATED, Json(Created { id })))
}

async fn list_sessions(State(app): State<AppState>) -> Json<Vec<String>> {
    Json(app.manager.session_ids())
}

#[derive(Deserialize)]
pub struct InstructionBody {
    pub text: String,
}

async fn instruction(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Json(body): Json<InstructionBody>,
) -> ApiResult<TurnOutcome> {
    blocking(&app, move |m| m.post_instruction(&id, &body.text)).await.map(Json)
}

#[derive(Deserialize)]
pub struct AnswerBody {
    pub text: String,
    #[serde(default)]
    pub question_id: Option<u32>,
}

async fn answer(State(app): State<AppState>, UrlPath(id): UrlPath<String>, Json(body): Json<AnswerBody>) -> ApiResult<TurnOutcome> {
    blocking(&app, move |m| m.post_answer(&id, body.question_id, &body.text))
        .await
        .map(Json)
}

async fn state(State(app): State<AppState>, UrlPath(id): UrlPath<String>) -> ApiResult<SessionState> {
    blocking(&app, move |m| m.get_state(&id)).await.map(Json)
}

#[derive(Deserialize)]
pub struct Since {
    #[serde(default)]
    pub since: u64,
}

fn to_sse(e: &SessionEvent) -> Result<Event, Infallible> {
    let value = serde_json::to_value(e).expect("events serialise");
    let name = value.get("type").and_then(|t| t.as_str()).unwrap_or("message").to_string();
    Ok(Event::default().event(name).id(e.seq.to_string()).data(value.to_string()))
}

struct Tail {
    rx: broadcast::Receiver<SessionEvent>,
    manager: Arc<SessionManager>,
    id: String,
    last: u64,
    queue: std::collections::VecDeque<SessionEvent>,
}

/// Events after `since` already recorded, then live ones as they happen.
/// A subscriber that falls behind re-reads what it missed from the session.
async fn events(
    State(app): State<AppState>,
    UrlPath(id): UrlPath<String>,
    Query(q): Query<Since>,
) -> Result<Sse<impl Stream<Item = Result<Event, Infallible>>>, ApiError> {
    let rx = app.events.subscribe();
    let backlog = {
        let id = id.clone();
        blocking(&app, move |m| m.events(&id, q.since)).await?
    };
    let last = backlog.last().map(|e| e.seq).unwrap_or(q.since);
    let tail = Tail {
        rx,
        manager: app.manager.clone(),
        id,
        last,
        queue: Default::default(),
    };
    let live = stream::unfold(tail, |mut t| async move {
        loop {
            if let Some(e) = t.queue.pop_front() {
                t.last = e.seq;
                return Some((e, t));
            }
            match t.rx.recv().await {
                Ok(e) if e.session == t.id && e.seq > t.last => {
                    t.last = e.seq;
                    return Some((e, t));
                }
                Ok(_) => {}
                Err(RecvError::Lagged(n)) => {
                    log::warn!("event subscriber for {} lagged by {n}", t.id);
                    let (manager, id, last) = (t.manager.clone(), t.id.clone(), t.last);
                    let missed = tokio::task::spawn_blocking(move || manager.events(&id, last)).await.ok()?.ok()?;
                    t.queue.extend(missed);
                }
                Err(RecvError::Closed) => return None,
            }
        }
    });
    let all = stream::iter(backlog).chain(live).map(|e| to_sse(&e));
    Ok(Sse::new(all).keep_alive(KeepAlive::default()))
}

#[derive(Deserialize)]
pub struct ShapesQuery {
    pub session: Option<String>,
}

async fn shapes(State(app): State<AppState>, Query(q): Query<ShapesQuery>) -> ApiResult<Vec<ShapeSummary>> {
    blocking(&app, move |m| m.shapes(q.session.as_deref())).await.map(Json)
}

/// Where and how to rebuild a stored shape.
#[derive(Deserialize, Serialize, Debug, Default)]
#[serde(deny_unknown_fields)]
pub struct ApplyBody {
    pub session: String,
    pub x: u8,
    pub y: u8,
    #[serde(default)]
    pub z: Option<u8>,
    #[serde(default)]
    pub color: Option<Color>,
    #[serde(default)]
    pub part: Option<PartKind>,
    #[serde(default)]
    pub scale: Option<u8>,
}

async fn apply(State(app): State<AppState>, UrlPath(name): UrlPath<String>, Json(body): Json<ApplyBody>) -> ApiResult<TurnOutcome> {
    let req = ApplyRequest {
        x: body.x,
        y: body.y,
        z: body.z,
        color: body.color,
        part: body.part,
        scale: body.scale,
    };
    blocking(&app, move |m| m.apply_shape(&body.session, &name, &req))
        .await
        .map(Json)
}

pub fn router(app: AppState) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/sessions", post(create_session).get(list_sessions))
        .route("/sessions/{id}/instruction", post(instruction))
        .route("/sessions/{id}/answer", post(answer))
        .route("/sessions/{id}/state", get(state))
        .route("/sessions/{id}/events", get(events))
        .route("/shapes", get(shapes))
        .route("/shapes/{name}/apply", post(apply))
        .with_state(app)
}
