use thiserror::Error;

/// Every rejection the library can raise.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mesh is not a closed oriented 2-manifold: {0}")]
    NotClosedManifold(String),

    #[error("degenerate triangle {index} (area {area:e}, mean area {mean:e})")]
    DegenerateTriangle { index: usize, area: f64, mean: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("quadrature did not reach tolerance on [{a}, {b}] (error estimate {estimate:e})")]
    Quadrature { a: f64, b: f64, estimate: f64 },

    #[error("value {value} outside admissible range ({lo}, {hi})")]
    OutOfRange { value: f64, lo: f64, hi: f64 },

    #[error(
        "volume bracket failed: G(0) = {g_lo:e}, G(eta) = {g_hi:e}; \
         transition band under-resolved, use a smaller epsilon or a finer mesh"
    )]
    VolumeBracket { g_lo: f64, g_hi: f64 },

    #[error("conjugate gradients stagnated after {iterations} iterations (relative residual {residual:e})")]
    LinearSolver { iterations: usize, residual: f64 },

    #[error("eigensolver did not converge (max Ritz residual {residual:e} with basis size {basis})")]
    Eigensolver { residual: f64, basis: usize },

    #[error("field has (near) zero total mass; barycenter undefined")]
    ZeroMass,

    #[error("truncation search exceeded |s| <= {bound:e}; derivative growth insufficient")]
    TruncationSearch { bound: f64 },

    #[error("external mesh has no declared topology")]
    UndeclaredTopology,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
