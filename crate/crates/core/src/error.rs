use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("jet order {requested} requested but only {available} is supported by `{label}`")]
    UnsupportedOrder { label: String, requested: usize, available: usize },

    #[error("epsilon {0} is outside (0, 1]")]
    EpsilonOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid box: {0}")]
    InvalidBox(String),

    #[error("invalid epsilon schedule: {0}")]
    InvalidSchedule(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance on [{a}, {b}]: estimate {estimate}, error {error}")]
    Quadrature { a: f64, b: f64, estimate: f64, error: f64 },

    #[error("mollifier profile mass is {mass}, expected 1")]
    ProfileMass { mass: f64 },

    #[error("metric is not admissible: {0}")]
    NotAdmissible(String),

    #[error("ode integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("fixed-point iteration and ode integration both failed: {0}")]
    GeodesicDivergence(String),

    #[error("shooting map is not invertible near {location:?} (jacobian determinant {det:e})")]
    Caustic { location: Vec<f64>, det: f64 },

    #[error("newton iteration did not converge at {target:?}: residual {residual:e}")]
    Newton { target: Vec<f64>, residual: f64 },

    #[error("cross-check `{what}` failed: difference {difference:e} exceeds {tolerance:e}")]
    CrossCheck { what: String, difference: f64, tolerance: f64 },
}
