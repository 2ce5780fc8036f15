use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: expected {expected} entries, got {got}")]
    Shape { expected: usize, got: usize },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("unsupported derivative order {order} (limit {limit})")]
    UnsupportedOrder { order: usize, limit: usize },
    #[error("degenerate sample: a - lambda vanishes at x={x:?}, eta={eta:?}, lambda={lambda}")]
    DegenerateSample { x: [f64; 2], eta: [f64; 2], lambda: num_complex::Complex64 },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("spectrum hit: eigenvalue {eigenvalue} conflicts with {what}")]
    SpectrumHit { eigenvalue: num_complex::Complex64, what: String },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("trace-class gate violated: {0}")]
    Gate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
