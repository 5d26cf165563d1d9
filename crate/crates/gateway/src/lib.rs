//! HTTP gateway: sessions, plan submission, elevation decisions, simulated
//! execution, trace access and a server-sent event stream.

pub mod config;
pub mod events;
pub mod state;

use std::convert::Infallible;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::sse::{Event, KeepAlive, Sse};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use bgate_core::audit_trace::{TraceFilter, TraceKind};
use bgate_core::elevation::ElevationState;
use futures::{Stream, StreamExt};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::{json, Value};

pub use config::{ConfigError, GatewayConfig};
pub use events::{EventHub, EventMessage};
pub use state::{Gateway, GatewayError, SessionDescriptor, TraceView};

pub struct ApiError(GatewayError);

impl From<GatewayError> for ApiError {
    fn from(e: GatewayError) -> Self {
        ApiError(e)
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let status = StatusCode::from_u16(self.0.status()).unwrap_or(StatusCode::INTERNAL_SERVER_ERROR);
        let mut body = json!({"error": self.0.code(), "message": self.0.to_string()});
        if let Some(details) = self.0.details() {
            body["details"] = details;
        }
        if status.is_server_error() {
            tracing::error!(error = %self.0, "request failed");
        }
        (status, Json(body)).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

fn parse<T: DeserializeOwned>(body: &Bytes) -> Result<T, ApiError> {
    serde_json::from_slice(body).map_err(|e| ApiError(GatewayError::Format(e.to_string())))
}

/// Gateway calls do blocking trace writes, so they run off the async
/// workers.
async fn blocking<T: Send + 'static>(
    gw: &Arc<Gateway>,
    f: impl FnOnce(&Gateway) -> Result<T, GatewayError> + Send + 'static,
) -> Result<T, ApiError> {
    let gw = Arc::clone(gw);
    tokio::task::spawn_blocking(move || f(&gw)).await.expect("gateway task panicked").map_err(ApiError)
}

fn ok<T: serde::Serialize>(value: T) -> ApiResult {
    Ok(Json(value).into_response())
}

async fn create_session(State(gw): State<Arc<Gateway>>, body: Bytes) -> ApiResult {
    let req = parse(&body)?;
    ok(blocking(&gw, move |g| g.create_session(req)).await?)
}

async fn submit_plan(State(gw): State<Arc<Gateway>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let doc: Value = parse(&body)?;
    ok(blocking(&gw, move |g| g.submit_plan(&id, doc)).await?)
}

#[derive(Debug, Deserialize)]
struct ElevationQuery {
    status: Option<String>,
    session_id: Option<String>,
}

async fn list_elevations(State(gw): State<Arc<Gateway>>, Query(q): Query<ElevationQuery>) -> ApiResult {
    let state = match q.status.as_deref() {
        None | Some("all") => None,
        Some(s) => Some(
            ElevationState::parse(s).ok_or_else(|| ApiError(GatewayError::Format(format!("unknown status {s:?}"))))?,
        ),
    };
    ok(gw.list_elevations(state, q.session_id.as_deref()))
}

async fn decide(State(gw): State<Arc<Gateway>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req = parse(&body)?;
    ok(blocking(&gw, move |g| g.decide(&id, req)).await?)
}

async fn execute(State(gw): State<Arc<Gateway>>, Path(id): Path<String>, body: Bytes) -> ApiResult {
    let req = parse(&body)?;
    ok(blocking(&gw, move |g| g.execute(&id, req)).await?)
}

#[derive(Debug, Deserialize)]
struct TraceQuery {
    kind: Option<String>,
    from: Option<u64>,
    to: Option<u64>,
}

async fn trace(State(gw): State<Arc<Gateway>>, Path(id): Path<String>, Query(q): Query<TraceQuery>) -> ApiResult {
    let kind = match q.kind.as_deref() {
        None => None,
        Some(k) => Some(TraceKind::parse(k).ok_or_else(|| ApiError(GatewayError::Format(format!("unknown kind {k:?}"))))?),
    };
    let filter = TraceFilter { session_id: None, kind, seq_from: q.from, seq_to: q.to };
    ok(gw.trace(&id, filter)?)
}

#[derive(Debug, Deserialize)]
struct EventQuery {
    seq: Option<u64>,
    session_id: Option<String>,
}

fn sse_event(msg: &EventMessage) -> Event {
    Event::default()
        .id(msg.seq.to_string())
        .event(format!("{:?}", msg.kind))
        .json_data(msg)
        .expect("event serializes")
}

/// Replays from `seq` (or after `Last-Event-ID`) when given, then streams
/// live events.
async fn events(
    State(gw): State<Arc<Gateway>>,
    headers: HeaderMap,
    Query(q): Query<EventQuery>,
) -> Sse<impl Stream<Item = Result<Event, Infallible>>> {
    let resume = headers
        .get("last-event-id")
        .and_then(|v| v.to_str().ok())
        .and_then(|v| v.parse::<u64>().ok())
        .map(|id| id + 1);
    let from = q.seq.or(resume);
    let stream = gw.hub().subscribe(from, q.session_id).map(|m| Ok(sse_event(&m)));
    Sse::new(stream).keep_alive(KeepAlive::default())
}

pub fn router(gateway: Arc<Gateway>) -> Router {
    Router::new()
        .route("/v1/sessions", post(create_session))
        .route("/v1/sessions/{id}/plans", post(submit_plan))
        .route("/v1/sessions/{id}/execute", post(execute))
        .route("/v1/sessions/{id}/trace", get(trace))
        .route("/v1/elevations", get(list_elevations))
        .route("/v1/elevations/{id}/decision", post(decide))
        .route("/v1/events", get(events))
        .with_state(gateway)
}

pub const EXPIRY_TICK: Duration = Duration::from_secs(1);

/// Runs the elevation expiry sweep every `period` until the task is
/// dropped.
pub fn spawn_expiry(gateway: Arc<Gateway>, period: Duration) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let mut ticker = tokio::time::interval(period);
        loop {
            ticker.tick().await;
            let gw = Arc::clone(&gateway);
            match tokio::task::spawn_blocking(move || gw.expire_tick()).await {
                Ok(Ok(_)) => {}
                Ok(Err(e)) => tracing::error!(error = %e, "expiry sweep failed"),
                Err(e) => tracing::error!(error = %e, "expiry sweep panicked"),
            }
        }
    })
}

pub async fn serve(gateway: Arc<Gateway>, addr: SocketAddr) -> std::io::Result<()> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    tracing::info!(%addr, "listening");
    let _expiry = spawn_expiry(Arc::clone(&gateway), EXPIRY_TICK);
    axum::serve(listener, router(gateway)).await
}
