use std::fmt;

use thiserror::Error;

/// Which theorem-style validity condition a closed form relies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum RegimeClause {
    /// `E <= (1+xi)/(1+3xi)`.
    UniSmallE,
    /// `xi == xi'` and `2E <= (1+xi)/(2+3xi)`.
    BiEqualNoise,
    /// `xi' >= 1` and `2E <= min{(xi'^2-1)/(xi'(3xi'-1)), (1+xi)/(2xi)}`.
    BiAsymNoise,
}

impl fmt::Display for RegimeClause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegimeClause::UniSmallE => "uni-small-E",
            RegimeClause::BiEqualNoise => "bi-equal-noise",
            RegimeClause::BiAsymNoise => "bi-asym-noise",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("spectrum is empty")]
    EmptySpectrum,
    #[error("negative probability {value} at index {index}")]
    NegativeEntry { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, not 1")]
    NotNormalized { sum: f64 },
    #[error("truncation index {m} exceeds the supported maximum {max}")]
    TruncationTooLarge { m: usize, max: usize },
    #[error("grid is not square")]
    NotSquare,
    #[error("dimension {got} is too small, need at least {required}")]
    DimensionTooSmall { required: usize, got: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("trace deficit {deficit:e} above tolerance {tol:e} within output dimension {out_dim}")]
    ToleranceUnreachable { deficit: f64, tol: f64, out_dim: usize },
    #[error("{name} = {value} is out of range")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("matrix is not Hermitian (max asymmetry {asym:e})")]
    NotHermitian { asym: f64 },
    #[error("matrix has eigenvalue {min_eig:e} below the PSD floor")]
    NotPositive { min_eig: f64 },
    #[error("trace {trace} outside [1 - {deficit:e}, 1]")]
    TraceOutOfRange { trace: f64, deficit: f64 },
    #[error("covariance sum has non-positive determinant {det:e}")]
    SingularSum { det: f64 },
    #[error("covariance matrix is {rows}x{cols}, expected {expected}x{expected}")]
    BadCovariance { rows: usize, cols: usize, expected: usize },
    #[error("regime violation ({clause}): {detail}")]
    RegimeViolation {
        clause: RegimeClause,
        /// The smallest threshold the input was compared against.
        threshold: f64,
        detail: String,
    },
    #[error("feasible set is empty")]
    Infeasible,
    #[error("lattice enumeration needs {needed} evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("gradient has length {got}, polytope has {expected} coordinates")]
    GradientLength { got: usize, expected: usize },
    #[error("{0}")]
    Invalid(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
