//! HTTP service backing the annotation interface and live chat sessions.
//!
//! All bodies are JSON. Errors come back as `{"error": kind, "message": ..}`
//! with a matching status code.

mod error;
mod session;

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use frictionbench_core::annotation::{export, AnnotationError, AnnotationRecord, AnnotationStore, TaskAssigner, TaskKind};
use frictionbench_core::booking::EntityDb;
use frictionbench_core::corpus::Dialogue;
use frictionbench_core::embodied::{generate_world, DEFAULT_ROOMS};
use frictionbench_core::llm::{ChatBackend, LlmError};
use frictionbench_core::taxonomy::{FrictionCategory, TAXONOMY_VERSION};
use serde::Deserialize;
use serde_json::{json, Value};
use tokio::net::TcpListener;

pub use error::ServiceError;
pub use session::{Session, SessionMode, SessionSnapshot, StateSnapshot, STEPS_PER_MESSAGE};

/// Opens a fresh backend session for each chat session.
pub trait BackendFactory: Send + Sync {
    fn open(&self, mode: SessionMode) -> Result<Box<dyn ChatBackend>, LlmError>;
}

impl<F> BackendFactory for F
where
    F: Fn(SessionMode) -> Result<Box<dyn ChatBackend>, LlmError> + Send + Sync,
{
    fn open(&self, mode: SessionMode) -> Result<Box<dyn ChatBackend>, LlmError> {
        self(mode)
    }
}

pub struct ServiceConfig {
    pub addr: SocketAddr,
    pub dialogues: Vec<Dialogue>,
    pub store_path: PathBuf,
    pub db_seed: u64,
    pub backends: Arc<dyn BackendFactory>,
}

struct AppState {
    assigner: TaskAssigner,
    store: AnnotationStore,
    db: EntityDb,
    backends: Arc<dyn BackendFactory>,
    sessions: Mutex<HashMap<String, Arc<Mutex<Session>>>>,
    next_session: AtomicU64,
}

type Shared = Arc<AppState>;

/// A bound, not yet serving, instance.
pub struct Server {
    listener: TcpListener,
    router: Router,
}

impl Server {
    /// Opens the store, replays its history and binds the address.
    pub async fn bind(config: ServiceConfig) -> Result<Self, ServiceError> {
        let store = AnnotationStore::open(&config.store_path)?;
        let assigner = TaskAssigner::new(config.dialogues).with_history(&store.records());
        let state = Arc::new(AppState {
            assigner,
            store,
            db: EntityDb::fixture(config.db_seed),
            backends: config.backends,
            sessions: Mutex::new(HashMap::new()),
            next_session: AtomicU64::new(1),
        });
        let listener = TcpListener::bind(config.addr).await.map_err(|e| {
            if e.kind() == std::io::ErrorKind::AddrInUse {
                ServiceError::PortInUse(config.addr.to_string())
            } else {
                ServiceError::Io(e)
            }
        })?;
        Ok(Self {
            listener,
            router: router(state),
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, ServiceError> {
        Ok(self.listener.local_addr()?)
    }

    /// Serves until `shutdown` resolves, then drains in-flight requests.
    pub async fn run<F>(self, shutdown: F) -> Result<(), ServiceError>
    where
        F: Future<Output = ()> + Send + 'static,
    {
        axum::serve(self.listener, self.router)
            .with_graceful_shutdown(shutdown)
            .await?;
        Ok(())
    }
}

fn router(state: Shared) -> Router {
    Router::new()
        .route("/health", get(|| async { "ok" }))
        .route("/taxonomy", get(taxonomy))
        .route("/dialogues/{id}", get(dialogue))
        .route("/tasks/next", get(next_task))
        .route("/annotations", post(post_annotation))
        .route("/annotations/export", get(export_annotations))
        .route("/sessions", post(create_session))
        .route("/sessions/{id}", get(get_session))
        .route("/sessions/{id}/message", post(post_message))
        .with_state(state)
}

async fn blocking<T, F>(f: F) -> Result<T, ServiceError>
where
    F: FnOnce() -> Result<T, ServiceError> + Send + 'static,
    T: Send + 'static,
{
    tokio::task::spawn_blocking(f)
        .await
        .map_err(|e| ServiceError::Internal(e.to_string()))?
}

async fn taxonomy() -> Json<Value> {
    let categories: Vec<Value> = FrictionCategory::ALL
        .iter()
        .map(|c| {
            let subs: Vec<Value> = c
                .subcategories()
                .map(|s| {
                    json!({
                        "name": s.canonical_name(),
                        "display": s.display_name(),
                        "definition": s.definition(),
                        "exemplars": s.exemplars(),
                    })
                })
                .collect();
            json!({
                "name": c.canonical_name(),
                "display": c.display_name(),
                "definition": c.definition(),
                "movement": c.is_movement(),
                "subcategories": subs,
            })
        })
        .collect();
    Json(json!({ "version": TAXONOMY_VERSION, "categories": categories }))
}

async fn dialogue(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<Dialogue>, ServiceError> {
    s.assigner
        .dialogue(&id)
        .cloned()
        .map(Json)
        .ok_or(ServiceError::UnknownDialogue(id))
}

#[derive(Deserialize)]
struct TaskQuery {
    annotator: String,
    kind: String,
    #[serde(default)]
    seed: u64,
}

async fn next_task(State(s): State<Shared>, Query(q): Query<TaskQuery>) -> Result<Response, ServiceError> {
    if q.annotator.trim().is_empty() {
        return Err(ServiceError::BadRequest("annotator must not be empty".into()));
    }
    let kind: TaskKind = q.kind.parse().map_err(|e: AnnotationError| ServiceError::BadRequest(e.to_string()))?;
    let task = s.assigner.next_task(&q.annotator, kind, q.seed)?;
    Ok(Json(task).into_response())
}

async fn post_annotation(
    State(s): State<Shared>,
    body: Result<Json<AnnotationRecord>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(record) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let d = s
        .assigner
        .dialogue(&record.dialogue_id)
        .ok_or_else(|| ServiceError::UnknownDialogue(record.dialogue_id.clone()))?;
    if record.turn >= d.turns.len() {
        return Err(ServiceError::BadRequest(format!(
            "dialogue {} has no turn {}",
            record.dialogue_id, record.turn
        )));
    }
    let stored = blocking(move || {
        let stored = s.store.append(record)?;
        s.assigner.mark_served(&stored);
        Ok(stored)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(stored)).into_response())
}

#[derive(Deserialize)]
struct ExportQuery {
    format: Option<String>,
}

async fn export_annotations(State(s): State<Shared>, Query(q): Query<ExportQuery>) -> Result<Response, ServiceError> {
    let records = s.store.records();
    match q.format.as_deref() {
        None | Some("json") => Ok(Json(export(&records)?).into_response()),
        Some("jsonl") => {
            let mut body = String::new();
            for r in &records {
                body.push_str(&serde_json::to_string(r).map_err(|e| ServiceError::Internal(e.to_string()))?);
                body.push('\n');
            }
            Ok(([(header::CONTENT_TYPE, "application/x-ndjson")], body).into_response())
        }
        Some(other) => Err(ServiceError::BadRequest(format!("unknown export format {other:?}"))),
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct NewSession {
    mode: SessionMode,
    #[serde(default)]
    friction: Vec<FrictionCategory>,
    #[serde(default)]
    seed: u64,
}

async fn create_session(
    State(s): State<Shared>,
    body: Result<Json<NewSession>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(req) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let id = format!("s-{:06}", s.next_session.fetch_add(1, Ordering::Relaxed));
    let snapshot = blocking(move || {
        let backend = s.backends.open(req.mode)?;
        let session = match req.mode {
            SessionMode::Booking => Session::booking(id.clone(), &s.db, &req.friction, backend)?,
            SessionMode::Embodied => {
                Session::embodied(id.clone(), generate_world(req.seed, 0, DEFAULT_ROOMS), &req.friction, backend)?
            }
        };
        let snapshot = session.snapshot();
        s.sessions
            .lock()
            .map_err(|_| ServiceError::Internal("session table poisoned".into()))?
            .insert(id, Arc::new(Mutex::new(session)));
        Ok(snapshot)
    })
    .await?;
    Ok((StatusCode::CREATED, Json(snapshot)).into_response())
}

fn find_session(s: &AppState, id: &str) -> Result<Arc<Mutex<Session>>, ServiceError> {
    s.sessions
        .lock()
        .map_err(|_| ServiceError::Internal("session table poisoned".into()))?
        .get(id)
        .cloned()
        .ok_or_else(|| ServiceError::UnknownSession(id.to_string()))
}

async fn get_session(State(s): State<Shared>, Path(id): Path<String>) -> Result<Json<SessionSnapshot>, ServiceError> {
    let session = find_session(&s, &id)?;
    let guard = session
        .lock()
        .map_err(|_| ServiceError::Internal("session poisoned".into()))?;
    Ok(Json(guard.snapshot()))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Message {
    text: String,
    friction: Option<Vec<FrictionCategory>>,
}

async fn post_message(
    State(s): State<Shared>,
    Path(id): Path<String>,
    body: Result<Json<Message>, axum::extract::rejection::JsonRejection>,
) -> Result<Response, ServiceError> {
    let Json(msg) = body.map_err(|e| ServiceError::BadRequest(e.body_text()))?;
    let session = find_session(&s, &id)?;
    let reply = blocking(move || {
        let mut guard = session
            .lock()
            .map_err(|_| ServiceError::Internal("session poisoned".into()))?;
        guard.message(&s.db, &msg.text, msg.friction.as_deref())
    })
    .await?;
    Ok(Json(json!({ "session": id, "reply": reply })).into_response())
}
