use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("format error: {0}")]
    Format(String),
    #[error("unsupported dtype `{0}` (expected <f4 or <f8)")]
    UnsupportedDtype(String),
    #[error("index {index} out of range (bound {bound})")]
    Index { index: usize, bound: usize },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("not enough {class} samples: need {needed}, have {available} (short by {})", needed - available)]
    Capacity {
        class: &'static str,
        needed: usize,
        available: usize,
    },
    #[error("labels contain a single class")]
    DegenerateLabels,
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("degenerate model: {0}")]
    DegenerateModel(String),
    #[error("ill-conditioned system: {0}")]
    Conditioning(String),
    #[error("unsupported layer structure: {0}")]
    UnsupportedStructure(String),
    #[error("attribute `{0}` not found in labels")]
    AttributeNotFound(String),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable, greppable identifier for each error kind.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "E_IO",
            Error::Format(_) => "E_FORMAT",
            Error::UnsupportedDtype(_) => "E_DTYPE",
            Error::Index { .. } => "E_INDEX",
            Error::Parameter(_) => "E_PARAM",
            Error::Capacity { .. } => "E_CAPACITY",
            Error::DegenerateLabels => "E_DEGENERATE_LABELS",
            Error::DegenerateData(_) => "E_DEGENERATE_DATA",
            Error::DegenerateModel(_) => "E_DEGENERATE_MODEL",
            Error::Conditioning(_) => "E_CONDITIONING",
            Error::UnsupportedStructure(_) => "E_STRUCTURE",
            Error::AttributeNotFound(_) => "E_ATTRIBUTE",
            Error::Json(_) => "E_JSON",
        }
    }
}
