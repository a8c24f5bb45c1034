use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("structural error: {0}")]
    Structural(String),
    #[error("validation error: {0}")]
    Validation(String),
    #[error("generation error: {0}")]
    Generation(String),
    #[error("penalty tuning found no feasible sample; best-effort penalty {midpoint}")]
    Tuning { midpoint: f64 },
    #[error("capacity error: {0}")]
    Capacity(String),
    #[error("embedding failure: {0}")]
    Embedding(String),
    #[error("ingestion error in {path}: {problems:?}")]
    Ingestion { path: String, problems: Vec<String> },
    #[error("stage `{stage}` failed for {ids:?}: {message}")]
    Stage {
        stage: String,
        ids: Vec<String>,
        message: String,
    },
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Stage { .. } => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
