//! Orthogonal Laurent polynomials on the unit circle.
//!
//! The library builds truncated moment matrices of a measure on the unit
//! circle in a (possibly extended) CMV monomial ordering, factors them by an
//! unpivoted Gauss-Borel (LU) factorization, and derives from the factors the
//! biorthogonal Laurent polynomial families, Verblunsky coefficients, banded
//! multiplication operators, Christoffel-Darboux kernels, second-kind
//! functions, continuous and discrete deformation flows, and tau-function
//! determinant identities. Every analytic identity has an independent check
//! path (quadrature, linear solves, or bordered determinants) used by the
//! test suites.

pub mod cd_kernel;
pub mod cmv_operator;
pub mod factorization;
pub mod linalg;
pub mod measure;
pub mod moments;
pub mod ordering;
pub mod second_kind;
pub mod tau;
pub mod toda;

use thiserror::Error;

/// Error type shared by all modules.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A decorated-measure convolution needs Fourier coefficients beyond the
    /// configured truncation bound.
    #[error("Fourier index {index} outside truncation bound {bound}")]
    TruncationExceeded { index: i64, bound: i64 },
    /// A full Fourier-series evaluation was requested outside the annulus of
    /// convergence of the measure.
    #[error("|z| = {modulus} outside convergence annulus ({inner}, {outer})")]
    OutsideAnnulus {
        modulus: f64,
        inner: f64,
        outer: f64,
    },
    /// A discrete Darboux factor was requested with |lambda| = 1.
    #[error("discrete factor parameter lies on the unit circle")]
    LambdaOnCircle,
    /// A leading principal minor vanished: the truncation is not
    /// quasi-definite at the reported level (1-based minor size).
    #[error("singular leading minor of size {0}")]
    SingularMinor(usize),
    /// Two operands have incompatible truncation sizes.
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    /// A polynomial or matrix index is outside the truncation.
    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },
    /// `l_assoc` has no solution: no index of the requested class at or
    /// below the given one.
    #[error("no index of class {class} at or below {l}")]
    NoSuchIndex { l: usize, class: u8 },
    /// The Christoffel-Darboux quotient formula degenerates on the diagonal
    /// z' conj(z) = 1.
    #[error("Christoffel-Darboux quotient degenerates: |1 - z' conj(z)| < 1e-8")]
    DegenerateDiagonal,
    /// An evaluation point is outside the validity region of the requested
    /// representation.
    #[error("evaluation point outside validity region: {0}")]
    OutsideRegion(String),
    /// A Cauchy-integral quadrature was requested too close to the unit
    /// circle for the geometric tail to be resolved.
    #[error("Cauchy quadrature unreliable for 0.95 < |z| < 1.05")]
    QuadratureNearCircle,
    /// An operation requiring a positive measure found nonreal h.
    #[error("operation requires a positive measure (h not real positive)")]
    NotPositiveMeasure,
    /// An ODE flow consumed all trusted Verblunsky indices.
    #[error("flow integration exhausted the trusted coefficient range")]
    TrustedLengthExhausted,
    /// A CMV-only closed form was requested for an extended ordering.
    #[error("operation is defined for the (1,1) CMV ordering only")]
    OrderingNotCMV,
    /// Malformed external input (measure-spec JSON, CLI arguments).
    #[error("parse error: {0}")]
    ParseError(String),
}

pub type Result<T> = std::result::Result<T, Error>;
