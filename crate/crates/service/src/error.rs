use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::Json;
use frictionbench_core::annotation::AnnotationError;
use frictionbench_core::booking::BookingError;
use frictionbench_core::corpus::CorpusError;
use frictionbench_core::embodied::EmbodiedError;
use frictionbench_core::llm::LlmError;
use serde_json::json;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("address {0} is already in use")]
    PortInUse(String),
    #[error("annotation store {path} is not writable: {reason}")]
    StoreUnwritable { path: String, reason: String },
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown dialogue {0}")]
    UnknownDialogue(String),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error(transparent)]
    Annotation(AnnotationError),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("internal error: {0}")]
    Internal(String),
}

impl From<AnnotationError> for ServiceError {
    fn from(e: AnnotationError) -> Self {
        match e {
            AnnotationError::StoreUnwritable { path, reason } => ServiceError::StoreUnwritable { path, reason },
            other => ServiceError::Annotation(other),
        }
    }
}

impl From<LlmError> for ServiceError {
    fn from(e: LlmError) -> Self {
        ServiceError::Backend(e.to_string())
    }
}

impl From<BookingError> for ServiceError {
    fn from(e: BookingError) -> Self {
        match e {
            BookingError::Llm(e) => e.into(),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl From<EmbodiedError> for ServiceError {
    fn from(e: EmbodiedError) -> Self {
        match e {
            EmbodiedError::Llm(e) => e.into(),
            other => ServiceError::Internal(other.to_string()),
        }
    }
}

impl ServiceError {
    fn kind(&self) -> (StatusCode, &'static str) {
        match self {
            ServiceError::UnknownSession(_) => (StatusCode::NOT_FOUND, "unknown_session"),
            ServiceError::UnknownDialogue(_) => (StatusCode::NOT_FOUND, "unknown_dialogue"),
            ServiceError::BadRequest(_) => (StatusCode::BAD_REQUEST, "bad_request"),
            ServiceError::Annotation(AnnotationError::Invalid(_)) => (StatusCode::BAD_REQUEST, "invalid_annotation"),
            ServiceError::Annotation(AnnotationError::ExhaustedTasks { .. }) => {
                (StatusCode::CONFLICT, "exhausted_tasks")
            }
            ServiceError::Annotation(AnnotationError::EmptyStore) => (StatusCode::NOT_FOUND, "empty_store"),
            ServiceError::Backend(_) => (StatusCode::BAD_GATEWAY, "backend_failure"),
            ServiceError::StoreUnwritable { .. } => (StatusCode::INTERNAL_SERVER_ERROR, "store_unwritable"),
            _ => (StatusCode::INTERNAL_SERVER_ERROR, "internal"),
        }
    }
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let (status, kind) = self.kind();
        (status, Json(json!({ "error": kind, "message": self.to_string() }))).into_response()
    }
}
