use alloc::boxed::Box;
use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Parameters or configuration violate a documented invariant.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The integrator produced a non-finite state.
    #[error("numerical failure at t = {time}: {reason}")]
    Numerical { time: f64, reason: String },

    /// An intermediate quantity left its admissible range.
    #[error("numerical range exceeded: {0}")]
    NumericalRange(String),

    /// The requested method cannot deliver a trustworthy answer here.
    #[error("method not valid for these parameters: {0}")]
    MethodValidity(String),

    #[error("root bracketing failed on branch {branch}")]
    RootFinder { branch: i64 },

    #[error("degenerate parameters: {0}")]
    Degenerate(String),

    #[error("sample {sample}: {source}")]
    Sample {
        sample: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn validity(msg: impl Into<String>) -> Self {
        Error::MethodValidity(msg.into())
    }
}
