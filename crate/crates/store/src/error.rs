use std::path::Path;

use thiserror::Error;

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error(transparent)]
    Core(#[from] reprtune_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {message}")]
    Json { path: String, message: String },
    #[error("no run store at {0}")]
    StoreNotFound(String),
    #[error("run store is inconsistent: {0}")]
    CorruptStore(String),
    #[error("port {0} is already in use")]
    PortInUse(u16),
    #[error("unknown representation {0:?}")]
    UnknownRepresentation(String),
    #[error("representation {0:?} was not part of this run; it requires a new pipeline run")]
    RequiresPipelineRun(String),
    #[error("representation {id:?} failed during the run: {reason}")]
    RepresentationFailed { id: String, reason: String },
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("unknown window {window} in representation {id:?}")]
    UnknownWindow { id: String, window: usize },
    #[error("polygon needs at least 3 vertices, found {0}")]
    MalformedPolygon(usize),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("report export failed: {0}")]
    Export(String),
}

impl StoreError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        StoreError::Io { path: path.display().to_string(), source }
    }

    pub(crate) fn json(path: &Path, err: serde_json::Error) -> Self {
        StoreError::Json { path: path.display().to_string(), message: err.to_string() }
    }

    /// Machine-readable error code used in API error bodies.
    pub fn code(&self) -> &'static str {
        match self {
            StoreError::Core(_) => "invalid_input",
            StoreError::Io { .. } | StoreError::Json { .. } | StoreError::CorruptStore(_) => "store_error",
            StoreError::StoreNotFound(_) => "store_not_found",
            StoreError::PortInUse(_) => "port_in_use",
            StoreError::UnknownRepresentation(_) => "unknown_representation",
            StoreError::RequiresPipelineRun(_) => "requires_pipeline_run",
            StoreError::RepresentationFailed { .. } => "representation_failed",
            StoreError::UnknownVariable(_) => "unknown_variable",
            StoreError::UnknownWindow { .. } => "unknown_window",
            StoreError::MalformedPolygon(_) => "malformed_polygon",
            StoreError::InvalidQuery(_) => "invalid_query",
            StoreError::Export(_) => "export_failed",
        }
    }
}
