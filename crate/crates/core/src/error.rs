use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{op}: dimension mismatch, expected {expected}, got {actual}")]
    DimensionMismatch {
        op: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("{op}: operator must be square, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },

    #[error("mode count {modes} exceeds the cap of {cap}")]
    TooManyModes { modes: usize, cap: usize },

    #[error("covariance invariant `{invariant}` violated: {detail}")]
    InvalidCovariance {
        invariant: &'static str,
        detail: String,
    },

    #[error("{op}: operator is not isometric (residual {residual:.3e})")]
    NotIsometric { op: &'static str, residual: f64 },

    #[error("{op}: operator is not unitary (residual {residual:.3e})")]
    NotUnitary { op: &'static str, residual: f64 },

    #[error("{op}: commutator with the covariance is {residual:.3e}")]
    DoesNotCommute { op: &'static str, residual: f64 },

    #[error("{op}: operator is not an orthogonal projection (residual {residual:.3e})")]
    NotProjection { op: &'static str, residual: f64 },

    #[error("vacuum is not cyclic: spanned rank {rank} of {dim} (deficit {deficit})")]
    NotCyclic {
        rank: usize,
        dim: usize,
        deficit: usize,
    },

    #[error("evaluation at the pole {pole}")]
    AtPole { pole: Complex64 },

    #[error("exponential family invalid: {0}")]
    InvalidFamily(String),

    #[error("Gram matrix condition number {cond:.3e} exceeds {limit:.1e}; family too clustered")]
    IllConditioned { cond: f64, limit: f64 },

    #[error("{op}: negative time {t}")]
    NegativeTime { op: &'static str, t: f64 },

    #[error("{op}: t = {t} is not an integer multiple of the grid step {h}")]
    OffGrid { op: &'static str, t: f64, h: f64 },

    #[error("{op}: {detail}")]
    InvalidArgument { op: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
