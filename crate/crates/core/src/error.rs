use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error)]
pub enum PecError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("{}:{line}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<PecError>,
    },

    #[error("i/o error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl PecError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        PecError::InvalidInput(msg.into())
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        PecError::Parse {
            path: path.into(),
            line,
            message: msg.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PecError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag for the error variant.
    pub fn kind(&self) -> &'static str {
        match self {
            PecError::InvalidInput(_) => "invalid_input",
            PecError::Parse { .. } => "parse",
            PecError::Numerical(_) => "numerical",
            PecError::Stage { source, .. } => source.kind(),
            PecError::Io { .. } => "io",
            PecError::Json(_) => "json",
            PecError::Csv(_) => "csv",
        }
    }

    /// Name of the pipeline stage that failed, if known.
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            PecError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, PecError>;

/// Attach a stage name to an error.
pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| match e {
            e @ PecError::Stage { .. } => e,
            e => PecError::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
