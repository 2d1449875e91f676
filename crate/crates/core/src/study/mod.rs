//! The listening study: balanced randomized assignment, ranking collection,
//! exclusion rules and response export, plus the HTTP service around them.

mod config;
mod engine;
mod server;
mod session;

use std::path::PathBuf;

pub use config::{
    AttentionCheck, StimulusAudio, StimulusRef, StudyConfig, StudySettings, DEFAULT_MIN_DURATION_S,
    PAGE_SIZE, STIMULUS_COUNT,
};
pub use engine::{
    decide_inclusion, Clock, ExclusionLine, ExclusionReason, ExportRow, FinalizeRequest, Inclusion,
    LogRecord, ManualClock, PageItem, PageView, ParticipantRecord, ResponseExport, StudyEngine,
    SystemClock,
};
pub use server::{router, serve, AppState, ADMIN_HEADER};
pub use session::{create_session, draw_session, Session, SessionState};

#[derive(Debug, thiserror::Error)]
pub enum StudyError {
    #[error("invalid study configuration: {0}")]
    Config(String),
    #[error("consent is required to start a session")]
    ConsentRequired,
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("page must be 1 or 2, got {0}")]
    InvalidPage(u8),
    #[error("invalid response: {0}")]
    InvalidResponse(String),
    #[error("page {0} has already been submitted")]
    AlreadySubmitted(u8),
    #[error("session is incomplete: page {0} has not been submitted")]
    Incomplete(u8),
    #[error("session has already been finalized")]
    AlreadyFinalized,
    #[error("corrupt record log at line {line}: {reason}")]
    Log { line: usize, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}
