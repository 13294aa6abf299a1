use thiserror::Error;

/// Errors produced anywhere in the sensing/recovery/classification chain.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("symbol index {index} out of range for a {size}-point constellation")]
    SymbolOutOfRange { index: usize, size: usize },

    #[error("occupied band [{lo_hz}, {hi_hz}] Hz exceeds the sampling grid")]
    BandOutsideGrid { lo_hz: f64, hi_hz: f64 },

    #[error("cannot scale noise to a finite SNR on a zero-power signal")]
    ZeroPowerSignal,

    #[error("scene configuration infeasible: {0}")]
    InfeasibleScene(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("class {class} has {count} samples, need at least {required}")]
    InsufficientClassSamples {
        class: usize,
        count: usize,
        required: usize,
    },

    #[error("unknown label {label} (model knows {n_classes} classes)")]
    UnknownLabel { label: usize, n_classes: usize },

    #[error("unsupported model version {0}")]
    UnsupportedVersion(u32),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Short machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidConfig(_) => "invalid_config",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NotPowerOfTwo(_) => "not_power_of_two",
            Error::SymbolOutOfRange { .. } => "symbol_out_of_range",
            Error::BandOutsideGrid { .. } => "band_outside_grid",
            Error::ZeroPowerSignal => "zero_power_signal",
            Error::InfeasibleScene(_) => "infeasible_scene",
            Error::Empty(_) => "empty_input",
            Error::InvalidPartition(_) => "invalid_partition",
            Error::InsufficientClassSamples { .. } => "insufficient_class_samples",
            Error::UnknownLabel { .. } => "unknown_label",
            Error::UnsupportedVersion(_) => "unsupported_version",
            Error::Parse(_) => "parse",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
