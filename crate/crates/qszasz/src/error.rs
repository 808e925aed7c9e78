use thiserror::Error;

/// Errors produced by the library. Every variant renders as a single line
/// so front ends can forward it verbatim.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Invalid operator parameters (q out of range, n = 0, classical
    /// context passed where a q-context is required, ...).
    #[error("invalid context: {0}")]
    InvalidContext(String),

    /// Invalid series policy (non-positive tolerance, too few terms, ...).
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    /// Argument outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A series or product did not converge within `max_terms`.
    #[error("truncation exhausted after {max_terms} terms: {context}")]
    TruncationExhausted { max_terms: usize, context: String },

    /// A function evaluation produced a non-finite value at `x`.
    #[error("non-finite value of {what} at x = {x}")]
    NonFinite { what: String, x: f64 },

    /// The operator series hit a non-finite function value at a node that
    /// carries non-negligible weight.
    #[error("non-finite function value at node k = {k} (node = {node})")]
    NonFiniteAtNode { k: usize, node: f64 },

    /// An operation that needs an analytic derivative was called without one.
    #[error("missing derivative: {0}")]
    MissingDerivative(&'static str),

    /// Central-moment order without a closed-form reference.
    #[error("unsupported moment order r = {0}")]
    UnsupportedOrder(u32),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for failures of the numerical machinery itself (as opposed to
    /// bad arguments). Front ends map these to a distinct exit status.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::TruncationExhausted { .. }
                | Error::NonFinite { .. }
                | Error::NonFiniteAtNode { .. }
        )
    }
}
