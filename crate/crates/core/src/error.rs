use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid momentum profile: {0}")]
    InvalidProfile(String),

    /// The flow map lost strict monotonicity; the state is at or past blow-up.
    #[error("flow map not strictly increasing at label {index} (t = {t})")]
    NonMonotone { index: usize, t: f64 },

    /// A Eulerian grid does not cover the support of a test function.
    #[error("grid does not cover the test-function support: {0}")]
    Coverage(String),

    #[error("no blow-up before t = {t_end} (min X_xi = {min_xxi})")]
    NoBlowup { t_end: f64, min_xxi: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
