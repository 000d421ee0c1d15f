use std::path::PathBuf;

use thiserror::Error;
use tokscope_core::charset::SymbolSetError;
use tokscope_core::coldstart::{DistributionError, MetricError};
use tokscope_core::compare::{ManifestError, SweepError};
use tokscope_core::keywords::KeywordError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: malformed vocabulary: {reason}", path.display())]
    MalformedVocabulary { path: PathBuf, reason: String },
    #[error("{}: unsupported format: {reason}", path.display())]
    UnsupportedFormat { path: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Distribution {
        path: PathBuf,
        #[source]
        source: DistributionError,
    },
    #[error("{}: {source}", path.display())]
    Symbols {
        path: PathBuf,
        #[source]
        source: SymbolSetError,
    },
    #[error("{}: {reason}", path.display())]
    MalformedFile { path: PathBuf, reason: String },
    #[error(transparent)]
    Keywords(#[from] KeywordError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error("{0}")]
    Invalid(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        let path = path.into();
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::FileNotFound(path)
        } else {
            Error::Io { path, source }
        }
    }
}
