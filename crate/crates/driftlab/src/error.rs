use std::io;
use std::path::PathBuf;

use driftlab_core::detectors::DetectorError;
use driftlab_core::drift_metrics::MetricsError;
use driftlab_core::elm::ElmError;
use driftlab_core::ensemble::EnsembleError;
use driftlab_core::evaluation::EvaluationError;
use driftlab_core::labels::FieldError;
use driftlab_core::scada::ScadaError;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{0}")]
    Validation(String),
    #[error("invalid label: {}", describe_fields(.0))]
    InvalidLabel(Vec<FieldError>),
    #[error("expert `{0}` is not registered")]
    UnknownExpert(String),
    #[error("{what} `{id}` not found")]
    NotFound { what: &'static str, id: String },
    #[error("the service is read-only")]
    ReadOnly,
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error(transparent)]
    Scada(#[from] ScadaError),
    #[error(transparent)]
    Elm(#[from] ElmError),
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Detector(#[from] DetectorError),
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

fn describe_fields(fields: &[FieldError]) -> String {
    fields.iter().map(|f| format!("{}: {}", f.field, f.message)).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl ToString) -> Self {
        Error::Format { path: path.into(), message: message.to_string() }
    }

    /// Errors caused by bad input rather than by the environment.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::Validation(_) | Error::InvalidLabel(_) | Error::UnknownExpert(_) | Error::Format { .. } => true,
            Error::Scada(_) => true,
            Error::Detector(e) => matches!(e, DetectorError::Config { .. } | DetectorError::UnknownKind(_)),
            Error::Evaluation(e) => !matches!(e, EvaluationError::Detector { .. }),
            Error::Elm(ElmError::InvalidParams(_)) => true,
            Error::Ensemble(EnsembleError::Config(_) | EnsembleError::InsufficientData(_)) => true,
            Error::Metrics(_) => true,
            _ => false,
        }
    }
}
