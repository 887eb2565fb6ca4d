use thiserror::Error;

/// Errors raised by the estimators and their front ends.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Deconvolution is ill-posed for the requested radius: the noise
    /// characteristic function vanishes or its reciprocal overflows.
    #[error("ill-posed deconvolution at frequency {frequency:?}: {reason}")]
    IllPosed { frequency: Vec<f64>, reason: String },

    /// The smoother's effective degrees of freedom leave no residual dof.
    #[error("degenerate smoother: n - 2 tr(L) + tr(L'L) = {0} <= 0")]
    DegenerateSmoother(f64),

    /// A confidence interval would have infinite width.
    #[error("infinite-width interval: density estimate is zero at {0:?}")]
    InfiniteWidth(Vec<f64>),

    /// Every weight of a positive-kernel smoother underflowed.
    #[error("degenerate weights: {0}")]
    DegenerateWeights(String),

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
