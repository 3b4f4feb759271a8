//! Human annotation: record validation, a durable append-only store, task
//! assignment and agreement export.

mod export;
mod record;
mod store;
mod tasks;

use thiserror::Error;

pub use export::{agreement, export, AgreementBundle, AnnotationExport, KappaMatrix, LabelHistograms};
pub use record::{AnnotationLabel, AnnotationRecord, TaskKind, OTHER};
pub use store::AnnotationStore;
pub use tasks::{TaskAssigner, TaskPayload, PRODUCTION_BATCH};

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("invalid annotation: {0}")]
    Invalid(String),
    #[error("no {kind} tasks left for annotator {annotator:?}")]
    ExhaustedTasks { annotator: String, kind: TaskKind },
    #[error("annotation store is empty")]
    EmptyStore,
    #[error("cannot write annotation store {path}: {reason}")]
    StoreUnwritable { path: String, reason: String },
    #[error("annotation store line {line} is corrupt: {reason}")]
    Corrupt { line: usize, reason: String },
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}
