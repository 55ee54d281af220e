use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A computation left the representable range (overflow past the
    /// generator value cap or a non-finite intermediate).
    #[error("range error: {0}")]
    Range(String),

    /// Lookup of a generator name that is not registered.
    #[error("unknown generator `{0}`")]
    UnknownGenerator(String),

    /// A data set contains an unusable observation.
    #[error("invalid observation at index {index}: {reason}")]
    Data { index: usize, reason: String },

    /// The sample makes the closed-form estimators undefined; the message
    /// names the failing condition.
    #[error("degenerate sample: {0}")]
    Degenerate(String),

    /// A functional (g1/g2, Jacobian, ...) could not be evaluated.
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Bootstrap resampling exhausted its redraw budget.
    #[error(
        "bootstrap failed: {degenerate} degenerate resamples in {attempts} attempts \
         (budget {budget})"
    )]
    BootstrapFailed {
        degenerate: usize,
        attempts: usize,
        budget: usize,
    },

    /// The Newton oracle did not converge.
    #[error("oracle failure: {0}")]
    OracleFailure(String),

    /// An invalid study or run configuration.
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
