use std::path::PathBuf;

use thiserror::Error;

/// Failure of a pipeline command. Validation problems map to exit code 2,
/// everything else to 3.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid manifest {path}: {msg}")]
    Manifest { path: PathBuf, msg: String },
    #[error("validation failed: {0}")]
    Validation(String),
    #[error("stage {stage} failed for {key}: {source}")]
    Stage {
        stage: &'static str,
        key: String,
        #[source]
        source: Box<dyn std::error::Error + Send + Sync>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(#[from] bimoment_core::Error),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Manifest { .. } | PipelineError::Validation(_) => 2,
            _ => 3,
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn stage(
        stage: &'static str,
        key: impl Into<String>,
        source: impl Into<Box<dyn std::error::Error + Send + Sync>>,
    ) -> Self {
        PipelineError::Stage {
            stage,
            key: key.into(),
            source: source.into(),
        }
    }
}

pub type Result<T, E = PipelineError> = std::result::Result<T, E>;
