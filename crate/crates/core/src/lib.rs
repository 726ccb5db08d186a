//! Numerical laboratory for measurement error-disturbance analysis.
//!
//! The crate models quantum measuring processes in two regimes and evaluates
//! the uncertainty relations that constrain them:
//!
//! * [`linalg`]: dense complex-matrix foundation (observables, states,
//!   spectral measures, tensor products).
//! * [`gaussian`]: continuous-variable position-measurement models driven
//!   by exact Gaussian moment calculus and symplectic transfer matrices,
//!   with a grid-quadrature cross-check.
//! * [`measurement`]: finite-dimensional measuring processes: error and
//!   disturbance observables, rms error/disturbance, joint and weak joint
//!   outcome distributions, precision/non-disturbance characterization and
//!   locally uniform error.
//! * [`edr`]: evaluators and reports for the error-disturbance
//!   inequalities relating those quantities.
//! * [`estimators`]: statistics-only estimation of error and disturbance
//!   (three-state and weak-measurement methods), in exact-expectation and
//!   finite-sampling modes.
//! * [`random`]: seeded generators for randomized property suites.
//!
//! All numerics are generic over the real scalar through [`Scalar`]; the
//! aliases below fix the default `f64` precision.

pub mod edr;
pub mod error;
pub mod estimators;
pub mod gaussian;
pub mod linalg;
pub mod measurement;
pub mod random;
pub mod scalar;
pub mod tolerances;

pub use error::{Error, Result};
pub use scalar::Scalar;
pub use tolerances::Tolerances;

/// Complex number at the default precision.
pub type C64 = num_complex::Complex<f64>;
/// Complex matrix at the default precision.
pub type CMatrix64 = linalg::CMatrix<f64>;
/// Complex vector at the default precision.
pub type CVector64 = linalg::CVector<f64>;
pub type HermitianOperator64 = linalg::HermitianOperator<f64>;
pub type DensityState64 = linalg::DensityState<f64>;
pub type UnitaryOperator64 = linalg::UnitaryOperator<f64>;
pub type SpectralDecomposition64 = linalg::SpectralDecomposition<f64>;
pub type GaussianState64 = gaussian::GaussianState4<f64>;
pub type SymplecticTransfer64 = gaussian::SymplecticTransfer<f64>;
pub type MeasuringProcess64 = measurement::MeasuringProcess<f64>;
pub type EdrReport64 = edr::EdrReport<f64>;




