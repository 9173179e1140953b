use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch for {what}: expected {expected} values, got {got}")]
    ShapeMismatch {
        what: String,
        expected: usize,
        got: usize,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("diffusion matrix is not symmetric at node {coord:?} (a12 = {a12}, a21 = {a21})")]
    NotSymmetric { coord: Vec<f64>, a12: f64, a21: f64 },

    #[error("ellipticity violated at node {coord:?}: smallest eigenvalue {eigenvalue}")]
    NotElliptic { coord: Vec<f64>, eigenvalue: f64 },

    #[error("linear solve did not converge after {iterations} iterations (relative residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("time step {step}: linear solve failed (relative residual {residual:e})")]
    StepFailed { step: usize, residual: f64 },

    #[error("exponent guard: |Re(s) + M| * T = {exponent} exceeds 700")]
    ExponentOverflow { exponent: f64 },

    #[error("transform of the amplitude is numerically zero at s = {re}{im:+}i")]
    NearZeroTransform { re: f64, im: f64 },

    #[error("operator is not symmetric (advection present); spectral inversion requires b = 0")]
    NonSymmetricOperator,

    #[error("non-positive time multiplier {value:e} for mode {mode}; amplitude positivity violated")]
    NonPositiveDenominator { mode: usize, value: f64 },

    #[error("iteration diverged: data residual grew for {steps} consecutive steps (iteration {iteration}, residual {residual:e})")]
    Diverged {
        iteration: usize,
        steps: usize,
        residual: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("amplitude is not positive: inf = {0}")]
    AmplitudeNotPositive(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed field file: {0}")]
    FieldFormat(String),
}

impl Error {
    /// Errors caused by bad inputs rather than a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::ShapeMismatch { .. }
                | Error::DimensionMismatch { .. }
                | Error::NotSymmetric { .. }
                | Error::NotElliptic { .. }
                | Error::NonSymmetricOperator
                | Error::InvalidParameter(_)
                | Error::AmplitudeNotPositive(_)
                | Error::FieldFormat(_)
        )
    }
}
