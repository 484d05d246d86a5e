use thiserror::Error;

/// Errors raised anywhere in the simulation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("equilibrium solver failed to converge after {iterations} iterations (gradient {gradient:.3e})")]
    SolverFailure { iterations: usize, gradient: f64 },

    #[error("chain is unstable along x: mode eigenvalue {eigenvalue:.6e} is negative")]
    Stability { eigenvalue: f64 },

    #[error("detuning {mu} kHz is within {guard} kHz of mode {mode} at {freq} kHz")]
    Resonance { mu: f64, mode: usize, freq: f64, guard: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("Binder cumulant undefined: second moment of the magnetization is zero")]
    UndefinedCumulant,

    #[error("norm drifted by {drift:.3e} at t = {time} us")]
    NormDrift { time: f64, drift: f64 },

    #[error("integrator step failed at t = {time} us: {reason}")]
    StepFailure { time: f64, reason: String },

    #[error("trajectory {index} failed: {source}")]
    Trajectory {
        index: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// `true` for errors caused by user-supplied configuration rather than
    /// numerical breakdown.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_)
                | Error::Config(_)
                | Error::DimensionMismatch { .. }
                | Error::Resonance { .. }
                | Error::Io(_)
                | Error::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
