//! The suggestion loop around the core library: pipeline rounds, review
//! sessions, a dry-run outbox, and the HTTP API for the review UI.

pub mod app;
pub mod config;
pub mod http;
pub mod outbox;
pub mod pipeline;
pub mod session;
pub mod submit;

use std::path::{Path, PathBuf};

pub use app::{load_context, load_profile, Clock, ManualClock, Service, ServiceParts, Settings, SettingsUpdate, SystemClock};
pub use config::PipelineConfig;
pub use http::{router, serve};
pub use outbox::{Outbox, OutboxRecord, RecordStatus, SubmitMode};
pub use pipeline::{rank_candidates, run_pipeline, NoCandidateReason, PipelineInputs, PipelineOutcome, PipelineSettings, StageCounts};
pub use session::{AssignmentSession, SessionState, TransitionError};
pub use submit::{LiveClient, Submitter, ACCESS_TOKEN_ENV};

use postforge_core::classifier::ClassifierError;
use postforge_core::ingest::IngestError;
use postforge_core::matcher::MatchError;
use postforge_core::snippets::SnippetError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid settings: {0}")]
    InvalidSettings(String),
    #[error("invalid request body: {0}")]
    InvalidBody(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Corrupt { path: String, message: String },
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Model(#[from] ClassifierError),
    #[error(transparent)]
    Snippet(#[from] SnippetError),
    #[error(transparent)]
    Match(#[from] MatchError),
    #[error("unknown session {0}")]
    UnknownSession(String),
    #[error("unknown post {0}")]
    UnknownPost(u64),
    #[error(transparent)]
    Transition(#[from] TransitionError),
    #[error("answer body is empty")]
    EmptyAnswer,
    #[error("session {0} already has a submitted record")]
    AlreadySubmitted(String),
    #[error("submission failed: {0}")]
    Submission(String),
    #[error("live submission unavailable: {0}")]
    LiveNotConfigured(String),
}

impl ServiceError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}
