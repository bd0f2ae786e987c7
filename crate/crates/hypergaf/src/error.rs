use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// An argument lies outside the documented domain of an operation.
    #[error("domain error in {op}: {msg}")]
    Domain { op: &'static str, msg: String },

    /// Vectors of unequal length were combined.
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// An integrand was evaluated at a non-integrable point.
    #[error("singularity in {op}: {msg}")]
    Singularity { op: &'static str, msg: String },

    /// Adaptive quadrature exhausted its evaluation budget before reaching
    /// the requested tolerance. The best estimate and its error bound are
    /// carried along so callers can still inspect them.
    #[error("quadrature budget exhausted: value={value}, abs_err_est={abs_err_est}, n_evals={n_evals}")]
    QuadBudget {
        value: f64,
        abs_err_est: f64,
        n_evals: u64,
    },

    /// A Monte Carlo sample had to resample too many degenerate nodes.
    #[error("degenerate GAF sample: {resampled} of {nodes} nodes resampled")]
    DegenerateSample { resampled: usize, nodes: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(op: &'static str, msg: impl Into<String>) -> Self {
        Error::Domain {
            op,
            msg: msg.into(),
        }
    }
}
