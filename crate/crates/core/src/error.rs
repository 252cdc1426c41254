use thiserror::Error;

/// Errors raised anywhere in the simulator.
///
/// Each variant maps to one process exit code in the command-line front end
/// (see [`Error::exit_code`]).
#[derive(Debug, Error)]
pub enum Error {
    /// A caller-supplied argument violates an operation's precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// An operator does not have the structure an operation requires
    /// (e.g. a non-Hermitian generator passed to a propagator).
    #[error("contract violation: {0}")]
    Contract(String),

    /// Input lies outside the domain where a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The transverse Hessian of the chain has a negative eigenvalue.
    #[error("transverse instability along the {axis}-axis (min eigenvalue {eigenvalue:.3e}); the chain is in the zigzag regime")]
    Stability { axis: char, eigenvalue: f64 },

    /// An iterative solver failed to reach its tolerance.
    #[error("{solver} did not converge: {detail}")]
    Numerical {
        solver: &'static str,
        detail: String,
    },

    /// A Hilbert space would exceed the configured dimension cap.
    #[error("resource cap exceeded: dimension {requested} > cap {cap}")]
    Resource { requested: usize, cap: usize },

    /// Malformed or inconsistent configuration.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Argument(_) | Error::Domain(_) => 2,
            Error::Contract(_) | Error::Stability { .. } | Error::Numerical { .. } => 3,
            Error::Resource { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 1,
        }
    }

    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }
}
