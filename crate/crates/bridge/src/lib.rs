//! Session service over HTTP and WebSocket.
//!
//! - `GET /graph`, `PUT /graph`: the current graph as graph JSON. A PUT is
//!   validated in full, swapped atomically, and resets every session's
//!   belief on the new graph.
//! - `POST /session` `{config?, seed?}`: new particle filter session.
//!   `config` takes the keys of the `[filter]` config section.
//! - `POST /session/{id}/step` (motion command), `/observe` (sign),
//!   `/reset`; `GET /session/{id}/belief?max=N`.
//! - `GET /events?since=SEQ` (WebSocket): `{seq, type, payload}` text
//!   frames, types `graph_updated`, `belief_updated`, `converged` and `gap`.
//!   Reconnecting with the last seen seq replays what the 256-event buffer
//!   still holds.

pub mod events;
pub mod session;

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use axum::extract::rejection::JsonRejection;
use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::sync::broadcast::error::RecvError;
use tower_http::cors::CorsLayer;
use waysign::config::FilterSection;
use waysign::graph_json::{graph_from_json, graph_to_json};
use waysign::wire::{MotionJson, SignJson};
use waysign_core::NavGraph;

use events::{Event, EventLog};
use session::Session;

pub const DEFAULT_MAX_PARTICLES: usize = 2000;

/// The graph with a version bumped on every swap.
#[derive(Clone)]
pub struct Versioned {
    pub version: u64,
    pub graph: Arc<NavGraph>,
}

pub struct AppState {
    graph: RwLock<Versioned>,
    sessions: Mutex<HashMap<String, Arc<tokio::sync::Mutex<Session>>>>,
    next_session: AtomicU64,
    pub events: EventLog,
}

impl AppState {
    pub fn new(graph: NavGraph) -> Arc<Self> {
        Arc::new(Self {
            graph: RwLock::new(Versioned {
                version: 1,
                graph: Arc::new(graph),
            }),
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
            events: EventLog::default(),
        })
    }

    pub fn graph(&self) -> Versioned {
        self.graph.read().unwrap().clone()
    }

    fn session(&self, id: &str) -> Result<Arc<tokio::sync::Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no session `{id}`")))
    }
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: impl ToString) -> Self {
        Self {
            status,
            body: json!({"error": message.to_string()}),
        }
    }

    /// 422 listing `(field, message)` pairs.
    fn invalid(errors: Vec<(String, String)>) -> Self {
        Self {
            status: StatusCode::UNPROCESSABLE_ENTITY,
            body: json!({
                "error": "validation failed",
                "errors": errors.into_iter().map(|(f, m)| json!({"field": f, "message": m})).collect::<Vec<_>>(),
            }),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

impl From<JsonRejection> for ApiError {
    fn from(r: JsonRejection) -> Self {
        ApiError::invalid(vec![("body".into(), r.body_text())])
    }
}

fn field_errors(e: waysign::Error) -> ApiError {
    match e {
        waysign::Error::Format { context, message } => ApiError::invalid(vec![(context, message)]),
        waysign::Error::Core(waysign_core::Error::Validation { context, message }) => ApiError::invalid(vec![(context, message)]),
        other => ApiError::invalid(vec![("body".into(), other.to_string())]),
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/graph", get(get_graph).put(put_graph))
        .route("/session", post(create_session))
        .route("/session/{id}/step", post(step))
        .route("/session/{id}/observe", post(observe))
        .route("/session/{id}/reset", post(reset))
        .route("/session/{id}/belief", get(belief))
        .route("/events", get(events_ws))
        .layer(CorsLayer::permissive())
        .with_state(state)
}

async fn get_graph(State(st): State<Arc<AppState>>) -> Response {
    let v = st.graph();
    ([(header::CONTENT_TYPE, "application/json")], graph_to_json(&v.graph)).into_response()
}

async fn put_graph(State(st): State<Arc<AppState>>, body: String) -> Result<Json<Value>, ApiError> {
    let g = Arc::new(graph_from_json(&body).map_err(field_errors)?);
    let version = {
        let mut cur = st.graph.write().unwrap();
        cur.version += 1;
        cur.graph = g.clone();
        cur.version
    };
    st.events.publish(
        "graph_updated",
        json!({"version": version, "nodes": g.node_count(), "edges": g.edge_count()}),
    );
    let sessions: Vec<_> = st.sessions.lock().unwrap().values().cloned().collect();
    for s in sessions {
        let mut s = s.lock().await;
        s.replace_graph(g.clone(), version);
        st.events.publish("belief_updated", s.event_payload("graph_replaced"));
    }
    Ok(Json(json!({"version": version, "nodes": g.node_count(), "edges": g.edge_count()})))
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    #[serde(default)]
    config: FilterSection,
    #[serde(default)]
    seed: u64,
}

async fn create_session(State(st): State<Arc<AppState>>, body: Result<Json<NewSession>, JsonRejection>) -> Result<Json<Value>, ApiError> {
    let Json(req) = body?;
    let cfg = req.config.to_config().map_err(|e| ApiError::invalid(vec![("config".into(), e.to_string())]))?;
    let v = st.graph();
    let id = format!("s{}", st.next_session.fetch_add(1, Ordering::Relaxed));
    let s = Session::new(id.clone(), v.graph, v.version, cfg, req.seed);
    let out = json!({"id": id, "graph_version": v.version, "seed": req.seed, "particles": s.len()});
    st.sessions.lock().unwrap().insert(id, Arc::new(tokio::sync::Mutex::new(s)));
    Ok(Json(out))
}

async fn step(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<MotionJson>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let session = st.session(&id)?;
    let Json(m) = body?;
    let cmd = m.to_command().map_err(field_errors)?;
    let mut s = session.lock().await;
    s.step(&cmd)?;
    Ok(Json(s.publish_update(&st.events, "step")))
}

async fn observe(
    State(st): State<Arc<AppState>>,
    Path(id): Path<String>,
    body: Result<Json<SignJson>, JsonRejection>,
) -> Result<Json<Value>, ApiError> {
    let session = st.session(&id)?;
    let Json(sign) = body?;
    let obs = sign.to_observation().map_err(field_errors)?;
    let mut s = session.lock().await;
    s.observe(&obs)?;
    Ok(Json(s.publish_update(&st.events, "observe")))
}

async fn reset(State(st): State<Arc<AppState>>, Path(id): Path<String>) -> Result<Json<Value>, ApiError> {
    let session = st.session(&id)?;
    let mut s = session.lock().await;
    s.reset();
    Ok(Json(s.publish_update(&st.events, "reset")))
}

#[derive(Debug, Deserialize)]
struct BeliefQuery {
    max: Option<usize>,
}

async fn belief(State(st): State<Arc<AppState>>, Path(id): Path<String>, Query(q): Query<BeliefQuery>) -> Result<Json<Value>, ApiError> {
    let session = st.session(&id)?;
    let s = session.lock().await;
    Ok(Json(s.belief_json(q.max.unwrap_or(DEFAULT_MAX_PARTICLES).clamp(1, DEFAULT_MAX_PARTICLES))))
}

#[derive(Debug, Deserialize)]
struct EventsQuery {
    since: Option<u64>,
}

async fn events_ws(State(st): State<Arc<AppState>>, Query(q): Query<EventsQuery>, ws: WebSocketUpgrade) -> Response {
    ws.on_upgrade(move |socket| stream_events(st, q.since, socket))
}

fn frame(e: &Event) -> Message {
    Message::Text(serde_json::to_string(e).expect("event serializes").into())
}

async fn stream_events(st: Arc<AppState>, since: Option<u64>, mut socket: WebSocket) {
    let (replay, mut rx) = st.events.subscribe(since);
    let mut last = since.unwrap_or(0);
    for e in &replay {
        if socket.send(frame(e)).await.is_err() {
            return;
        }
        last = e.seq;
    }
    loop {
        tokio::select! {
            ev = rx.recv() => match ev {
                Ok(e) if e.seq <= last => {}
                Ok(e) => {
                    last = e.seq;
                    if socket.send(frame(&e)).await.is_err() {
                        return;
                    }
                }
                Err(RecvError::Lagged(_)) => {
                    // The client fell behind; skip to what the buffer holds.
                    let (replay, fresh) = st.events.subscribe(Some(last));
                    rx = fresh;
                    for e in &replay {
                        last = e.seq;
                        if socket.send(frame(e)).await.is_err() {
                            return;
                        }
                    }
                }
                Err(RecvError::Closed) => return,
            },
            msg = socket.recv() => match msg {
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
