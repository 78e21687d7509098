use thiserror::Error;

/// Errors shared by the numerical routines of this crate.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// The transfer-matrix block at `index` has discriminant `discr >= -floor`,
    /// so it has no complex-conjugate eigenvalue pair to work with.
    #[error("non-elliptic matrix at index {index}: discr = {discr:e} >= -{floor:e}")]
    NonElliptic { index: usize, discr: f64, floor: f64 },

    /// The refinement step of the iterated diagonalization cannot continue
    /// at this index: the residue has no complex-conjugate eigenvalue pair,
    /// or the eigenvector denominator fell below the guard.
    #[error("degenerate refinement at level {level}, index {index}: {reason}")]
    DegenerateRefinement {
        level: usize,
        index: usize,
        reason: String,
    },

    /// Window entries carry exponents too far apart to combine without
    /// losing every significant digit.
    #[error("scaling mismatch: window exponents differ by {gap:e}")]
    ScalingMismatch { gap: f64 },

    /// A sequence is too short for the requested difference order or tail fit.
    #[error("insufficient data: need at least {needed} entries, got {got}")]
    InsufficientLength { needed: usize, got: usize },

    /// The limit matrix entry entering the amplitude formula vanishes.
    #[error("limit-matrix (2,1) entry {value:e} below floor {floor:e}")]
    ZeroEntry { value: f64, floor: f64 },

    /// Least-squares design matrix for the phase-offset fit is rank deficient.
    #[error("sine-law fit degenerate: normal matrix determinant {det:e}")]
    FitDegenerate { det: f64 },

    /// The trailing transfer matrices have not stabilized enough to serve as
    /// the limit matrix.
    #[error("limit matrix not stabilized at index {index}: window variation {variation:e} > {tol:e}")]
    StaleLimit {
        index: usize,
        variation: f64,
        tol: f64,
    },

    /// Quadrature grid cannot resolve the integrand.
    #[error("grid too coarse for quadrature: {reason}")]
    GridTooCoarse { reason: String },

    /// A family specification failed validation.
    #[error("invalid family parameter: {reason}")]
    InvalidFamily { reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;
