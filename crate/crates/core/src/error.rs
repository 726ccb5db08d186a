use thiserror::Error;

/// Errors raised by state/operator validation and by the operations built on
/// them. Diagnostic magnitudes are reported as `f64` regardless of the
/// underlying scalar.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("matrix is not Hermitian: max |entry - adjoint entry| = {max_asymmetry:.3e} exceeds {tol:.3e}")]
    NotHermitian { max_asymmetry: f64, tol: f64 },

    #[error("matrix is not unitary: max |U†U - I| = {max_deviation:.3e} exceeds {tol:.3e}")]
    NotUnitary { max_deviation: f64, tol: f64 },

    #[error("density matrix trace {trace} deviates from 1 beyond {tol:.3e}")]
    TraceNotOne { trace: f64, tol: f64 },

    #[error("density matrix has eigenvalue {eigenvalue:.3e} below -{tol:.3e}")]
    NotPositive { eigenvalue: f64, tol: f64 },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("composite dimension {composite} does not factor as system {system} x probe")]
    NonFactorableDimension { composite: usize, system: usize },

    #[error("vector norm {norm} deviates from 1 beyond {tol:.3e}")]
    NotUnitNorm { norm: f64, tol: f64 },

    #[error("raw variance {value:.3e} is below -{tol:.3e}; input state or operator is corrupted")]
    NegativeVariance { value: f64, tol: f64 },

    #[error("covariance matrix violates the Robertson condition: min eigenvalue of cov + (hbar/2) iJ is {eigenvalue:.3e}")]
    RobertsonViolated { eigenvalue: f64 },

    #[error("covariance matrix is not symmetric: max asymmetry {max_asymmetry:.3e}")]
    CovarianceNotSymmetric { max_asymmetry: f64 },

    #[error("object and probe blocks must be uncorrelated at t=0: max cross-covariance {max_cross:.3e}")]
    CorrelatedBlocks { max_cross: f64 },

    #[error("transfer matrix is not symplectic: max |SJS^T - J| = {max_deviation:.3e} exceeds {tol:.3e}")]
    NotSymplectic { max_deviation: f64, tol: f64 },

    #[error("tau fraction {value} is outside [0, 1]")]
    TauOutOfRange { value: f64 },

    #[error("coupling constant must be positive, got {value}")]
    NonPositiveCoupling { value: f64 },

    #[error("hbar must be positive, got {value}")]
    NonPositiveHbar { value: f64 },

    #[error("grid functions are defined on different grids")]
    GridMismatch,

    #[error("grid function is not L2-normalized: norm^2 = {norm_sq} deviates from 1 beyond {tol:.3e}")]
    GridNotNormalized { norm_sq: f64, tol: f64 },

    #[error("operators do not commute on the state support (commutator norm {norm:.3e} exceeds {tol:.3e}); use the weak joint distribution instead")]
    NoncommutingPair { norm: f64, tol: f64 },

    #[error("joint measurement is biased: probe means ({mean_q:.3e}, {mean_p:.3e}) must vanish for unbiasedness")]
    BiasedProbe { mean_q: f64, mean_p: f64 },

    #[error("{context}: trace {trace:.3e} is too small to normalize; a shifted observable A + cI is used instead")]
    DegenerateTrace { context: &'static str, trace: f64 },

    #[error("number of shots must be at least 1")]
    NoShots,

    #[error("{name} is a theorem but evaluated to lhs {lhs:.6e} < rhs {rhs:.6e} beyond tolerance; this signals an implementation bug")]
    TheoremViolated { name: &'static str, lhs: f64, rhs: f64 },

    #[error("empty spectral decomposition")]
    EmptySpectrum,
}

pub type Result<V> = std::result::Result<V, Error>;
