use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("index {index} out of range for {len} sites")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unstable chain: smallest Hessian eigenvalue {min:e} is not above 1e-12 x largest {max:e}")]
    UnstableChain { min: f64, max: f64 },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("quadrature did not converge: order {order} gave {coarse:e}, order {fine} gave {fine_value:e}")]
    NonConvergence {
        order: usize,
        fine: usize,
        coarse: f64,
        fine_value: f64,
    },

    #[error("schedule does not match chain: {0}")]
    ScheduleMismatch(String),

    #[error("scaling fit undefined: {0}")]
    UndefinedFit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
