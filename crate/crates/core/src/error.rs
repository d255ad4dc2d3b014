use std::path::PathBuf;

use thiserror::Error;

/// Coarse error class used by the operator surfaces to pick exit codes and
/// HTTP statuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// A value or request violated a domain rule.
    Domain,
    /// A referenced entity does not exist.
    NotFound,
    /// The request conflicts with current register state.
    Conflict,
    /// Filesystem or format failure.
    Io,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("DriverOutOfDomain: {kind} value {value} outside [{min}, {max}]")]
    DriverOutOfDomain {
        kind: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("ScoreOutOfDomain: score {value} outside the {branch} branch image [{min}, {max}]")]
    ScoreOutOfDomain {
        branch: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("InsufficientHistory: trend needs at least 2 observations, got {0}")]
    InsufficientHistory(usize),
    #[error("DegenerateTime: all observations share the same period index")]
    DegenerateTime,
    #[error("BackwardForecast: forecast at t={t} precedes last observation t={t_last}")]
    BackwardForecast { t: f64, t_last: f64 },
    #[error("KindMismatch: {observed} observation given for a risk with presence '{presence}'")]
    KindMismatch {
        observed: &'static str,
        presence: &'static str,
    },
    #[error("NonMonotoneTime: observation t={t} is not after last t={last}")]
    NonMonotoneTime { t: f64, last: f64 },
    #[error("UnknownRisk: no risk with id '{0}'")]
    UnknownRisk(String),
    #[error("DuplicateId: risk id '{0}' already present")]
    DuplicateId(String),
    #[error("DanglingDependency: '{risk}' depends on missing id '{missing}'")]
    DanglingDependency { risk: String, missing: String },
    #[error("SelfDependency: '{0}' cannot depend on itself")]
    SelfDependency(String),
    #[error("UnknownSphere: sphere '{0}' is not in the register taxonomy")]
    UnknownSphere(String),
    #[error("RiskRetired: risk '{0}' is retired")]
    RiskRetired(String),
    #[error("InvalidHorizon: horizon must span at least one period, got {0}")]
    InvalidHorizon(u32),
    #[error("InvalidPeriodLength: period length must be at least one day, got {0}")]
    InvalidPeriodLength(u32),
    #[error("EmptyTaxonomy: the assessment cycle needs at least one sphere label")]
    EmptyTaxonomy,
    #[error("cycle stage {stage} failed: {source}")]
    Stage {
        stage: u8,
        #[source]
        source: Box<Error>,
    },
    #[error("PathExists: {0} already exists")]
    PathExists(PathBuf),
    #[error("SchemaVersionMismatch: file has version {found}, engine reads {expected}")]
    SchemaVersionMismatch { found: u64, expected: u64 },
    #[error("ParseError: {location}: {message}")]
    Parse { location: String, message: String },
    #[error("MalformedTable: {0}")]
    MalformedTable(String),
    #[error("RegisterLocked: {0} is held by another writer")]
    Locked(PathBuf),
    #[error("InvalidRegister: {0}")]
    InvalidRegister(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Machine-readable code, stable across releases.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DriverOutOfDomain { .. } => "driver_out_of_domain",
            Error::ScoreOutOfDomain { .. } => "score_out_of_domain",
            Error::InsufficientHistory(_) => "insufficient_history",
            Error::DegenerateTime => "degenerate_time",
            Error::BackwardForecast { .. } => "backward_forecast",
            Error::KindMismatch { .. } => "kind_mismatch",
            Error::NonMonotoneTime { .. } => "non_monotone_time",
            Error::UnknownRisk(_) => "unknown_risk",
            Error::DuplicateId(_) => "duplicate_id",
            Error::DanglingDependency { .. } => "dangling_dependency",
            Error::SelfDependency(_) => "self_dependency",
            Error::UnknownSphere(_) => "unknown_sphere",
            Error::RiskRetired(_) => "risk_retired",
            Error::InvalidHorizon(_) => "invalid_horizon",
            Error::InvalidPeriodLength(_) => "invalid_period_length",
            Error::EmptyTaxonomy => "empty_taxonomy",
            Error::Stage { .. } => "stage_error",
            Error::PathExists(_) => "path_exists",
            Error::SchemaVersionMismatch { .. } => "schema_version_mismatch",
            Error::Parse { .. } => "parse_error",
            Error::MalformedTable(_) => "malformed_table",
            Error::Locked(_) => "register_locked",
            Error::InvalidRegister(_) => "invalid_register",
            Error::Io { .. } => "io_error",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::UnknownRisk(_) => ErrorClass::NotFound,
            Error::DuplicateId(_) | Error::RiskRetired(_) => ErrorClass::Conflict,
            Error::PathExists(_)
            | Error::Locked(_)
            | Error::SchemaVersionMismatch { .. }
            | Error::Parse { .. }
            | Error::MalformedTable(_)
            | Error::InvalidRegister(_)
            | Error::Io { .. } => ErrorClass::Io,
            Error::Stage { source, .. } => source.class(),
            _ => ErrorClass::Domain,
        }
    }
}
