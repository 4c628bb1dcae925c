use thiserror::Error;

/// Errors produced across the simulator, model and evaluation layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("shape error: {0}")]
    Shape(String),
    #[error("norm error: {0}")]
    Norm(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("postselection failed: {0}")]
    Postselect(String),
    #[error("state error: {0}")]
    State(String),
    #[error("label error: {0}")]
    Label(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("export error: {0}")]
    Export(String),
    #[error("format error: {0}")]
    Format(String),
    #[error("statistics error: {0}")]
    Stat(String),
    #[error("rejected after {accepted} accepted measurement(s)")]
    Rejected { accepted: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

macro_rules! bail {
    ($kind:ident, $($arg:tt)*) => {
        return Err($crate::Error::$kind(format!($($arg)*)))
    };
}
pub(crate) use bail;
