use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A vector (or curve velocity) is outside the horizontal bundle.
    #[error("vector is not horizontal: residual {residual:e} exceeds {tolerance:e}")]
    NotHorizontal { residual: f64, tolerance: f64 },

    #[error("curves do not meet: endpoint gap {gap:e}")]
    EndpointMismatch { gap: f64 },

    #[error("no convergence after {iterations} iterations (endpoint penalty {penalty:e})")]
    NonConvergence { iterations: usize, penalty: f64 },

    /// Upper bound below the certified lower bound. Always a bug.
    #[error("inconsistent bounds: upper {upper} < lower {lower}")]
    Inconsistent { lower: f64, upper: f64 },

    #[error("vectors do not span a 2-plane")]
    DegeneratePlane,

    #[error("divergence probe inconclusive at depth {depth}; raise the depth")]
    InconclusiveProbe { depth: u32 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
