use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time {t} outside [0, {sensing_time}]")]
    TimeOutOfRange { t: f64, sensing_time: f64 },

    #[error("Hilbert dimension 2^{n_env} exceeds the cap of 2^{max}")]
    DimensionTooLarge { n_env: usize, max: usize },

    #[error("dipolar coupling matrix is not symmetric at ({i}, {j})")]
    AsymmetricCoupling { i: usize, j: usize },

    #[error("malformed coupling data: {0}")]
    MalformedCouplings(String),

    #[error("environment state is not a valid deviation density matrix: {0}")]
    InvalidState(String),

    #[error("normalization trace {trace:e} is too close to zero (degenerate polarization)")]
    DegenerateNormalization { trace: f64 },

    #[error("signal underflow: |M| = {magnitude:e} is below {threshold:e}")]
    SignalUnderflow { magnitude: f64, threshold: f64 },

    #[error("correlation function missing for time subset {subset:?}")]
    MissingOrder { subset: Vec<usize> },

    #[error("cumulant order {order} exceeds the supported maximum {max}")]
    OrderTooLarge { order: usize, max: usize },

    #[error("need at least {required} phase points, got {got}")]
    InsufficientPhiPoints { required: usize, got: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
