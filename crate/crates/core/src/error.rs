use thiserror::Error;

/// Failures raised by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: `{key}` {message}")]
    Config { key: String, message: String },

    #[error("config parse error: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("reduction error: first row of Q^T A0 Q is not zero (residual {residual:.3e})")]
    Reduction { residual: f64 },

    #[error("singular linear system in {context}")]
    SingularSystem { context: &'static str },

    #[error("s = {s} lies on a pole of the system")]
    PoleHit { s: num_complex::Complex64 },

    #[error("velocity Liouvillian leaks outside its block (norm {norm:.3e})")]
    BlockLeakage { norm: f64 },

    #[error("eigenvector matrix is ill-conditioned (condition number {cond:.3e})")]
    IllConditioned { cond: f64 },

    #[error("quadrature did not converge: {0}")]
    NonConvergent(String),

    #[error("degenerate realization: {zeros} zeros for {poles} poles")]
    DegenerateRealization { zeros: usize, poles: usize },

    #[error("RK4 trace drift {drift:.3e} exceeds tolerance")]
    UnstableStep { drift: f64 },

    #[error("time step {dt:.3e} s exceeds the stability bound {bound:.3e} s")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("grid too coarse: need at least {need} points, got {got}")]
    GridTooCoarse { need: usize, got: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("baseband amplitude {peak:.3e} V exceeds the ADC reference {v_ref:.3e} V")]
    ClippedAdc { peak: f64, v_ref: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn config(key: &str, message: impl Into<String>) -> Self {
        Error::Config {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
