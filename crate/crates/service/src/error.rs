use mhn_core::chronicle::ChronicleError;
use mhn_core::navigator::NavError;
use mhn_core::pipeline::PipelineError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("invalid request: {0}")]
    BadRequest(String),
    #[error("missing or malformed bearer token")]
    Unauthorized,
    #[error("{0}")]
    Forbidden(String),
    #[error("{0} not found")]
    NotFound(String),
    #[error("version conflict on {resource}: expected {expected}, current {current}")]
    VersionConflict { resource: String, expected: u64, current: u64 },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error(transparent)]
    Navigator(#[from] NavError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error(transparent)]
    Chronicle(#[from] ChronicleError),
    #[error("journal: {0}")]
    Journal(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config: {0}")]
    Config(String),
}

impl ServiceError {
    /// HTTP status code for the error.
    pub fn status(&self) -> u16 {
        match self {
            ServiceError::BadRequest(_) => 400,
            ServiceError::Unauthorized => 401,
            ServiceError::Forbidden(_) => 403,
            ServiceError::NotFound(_) => 404,
            ServiceError::VersionConflict { .. } | ServiceError::Conflict(_) => 409,
            ServiceError::Navigator(e) => match e {
                NavError::IllegalTransition { .. } | NavError::NoConsensusGoal(_) => 409,
                NavError::NoActivePlan => 404,
                NavError::NoRoute { .. } | NavError::InsufficientData { .. } | NavError::NoObservations => 422,
                _ => 400,
            },
            ServiceError::Pipeline(e) => match e {
                PipelineError::LateBatch { .. } | PipelineError::DayAlreadyProcessed(_) => 409,
                _ => 400,
            },
            ServiceError::Chronicle(e) => match e {
                ChronicleError::OverlapConflict { .. } => 409,
                ChronicleError::UnknownSubject(_) => 404,
                ChronicleError::InvalidEvent(_)
                | ChronicleError::InvalidWindow { .. }
                | ChronicleError::InvalidSubjectId(_) => 400,
                _ => 500,
            },
            ServiceError::Journal(_) | ServiceError::Io(_) | ServiceError::Config(_) => 500,
        }
    }

    /// Short machine-readable error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            ServiceError::BadRequest(_) => "bad_request",
            ServiceError::Unauthorized => "unauthorized",
            ServiceError::Forbidden(_) => "forbidden",
            ServiceError::NotFound(_) => "not_found",
            ServiceError::VersionConflict { .. } => "version_conflict",
            ServiceError::Conflict(_) => "conflict",
            ServiceError::Navigator(NavError::IllegalTransition { .. }) => "illegal_transition",
            ServiceError::Navigator(NavError::NoRoute { .. }) => "no_route",
            ServiceError::Navigator(_) => "navigator",
            ServiceError::Pipeline(_) => "pipeline",
            ServiceError::Chronicle(_) => "chronicle",
            ServiceError::Journal(_) => "journal",
            ServiceError::Io(_) => "io",
            ServiceError::Config(_) => "config",
        }
    }
}
