use thiserror::Error;

/// Errors produced by the simulation library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum DowError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("packet width {sigma} is not resolvable on a grid with spacing {dx} (need sigma >= 2 dx)")]
    UnresolvableWidth { sigma: f64, dx: f64 },

    #[error("packet centre lies closer than 4 sigma to the domain boundary")]
    OutOfDomain,

    #[error("wavefield has zero norm")]
    ZeroField,

    #[error("time step too large: max|V| dt / hbar = {phase:.3} exceeds the 0.5 rad guard")]
    StepTooLarge { phase: f64 },

    #[error("width must be positive, got {0}")]
    NonpositiveWidth(f64),

    #[error("energy {energy} is at or above the collapse threshold {threshold}")]
    EnergyAtOrAboveThreshold { energy: f64, threshold: f64 },

    #[error("deformation target width {target} cannot be reached from current width {current}")]
    TargetUnreachable { target: f64, current: f64 },

    #[error("interaction events are not sorted by time")]
    UnsortedEvents,

    #[error("event at t = {t} lies outside the run's time span [{start}, {end}]")]
    EventOutOfSpan { t: f64, start: f64, end: f64 },

    #[error("rank {rank} for model '{model}' is outside 1..={n_models}")]
    InvalidRank { model: String, rank: u32, n_models: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("too few counts for a visibility estimate: {0} (need at least 100)")]
    TooFewCounts(u64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, DowError>;
