use thiserror::Error;

/// Everything that can go wrong in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("bracket has no sign change: f({lo}) = {f_lo}, f({hi}) = {f_hi}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder did not converge after {iterations} iterations (best x = {best_x}, f = {best_f})")]
    NoConvergence { iterations: usize, best_x: f64, best_f: f64 },

    #[error("no zero within span cap {cap:e} from seed {seed}")]
    SpanCap { seed: f64, cap: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("order z = {z} is not in the admissible half-line for v = {v}")]
    SignConstraint { z: f64, v: u8 },

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("bracketing failed: {reason}")]
    Bracketing { reason: String, trace: Vec<(f64, f64)> },

    #[error("missing statistic: {0}")]
    MissingStatistic(&'static str),

    #[error("unsupported configuration: {0}")]
    Unsupported(String),
}

pub type Result<T> = std::result::Result<T, Error>;
