//! Central tolerance configuration.
//!
//! Every validation and pairing threshold used across the crate lives here,
//! with the numerical defaults the rest of the library and the test suites
//! are written against. Construction helpers take `&Tolerances<T>` so a
//! caller working at reduced precision can relax them in one place.

use crate::scalar::{real, Scalar};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances<T: Scalar> {
    /// Max |M - M†| entry for a matrix to count as Hermitian.
    pub hermit: T,
    /// Max |Tr rho - 1| for a density matrix.
    pub trace: T,
    /// Most negative admissible eigenvalue of a density matrix.
    pub psd: T,
    /// Eigenvalue gap below which spectral values are merged into one
    /// projector.
    pub degeneracy: T,
    /// Projector idempotency / completeness / reconstruction slack.
    pub projector: T,
    /// Max |U†U - I| entry for unitarity.
    pub unitary: T,
    /// Max deviation of a state vector norm from 1.
    pub unit_norm: T,
    /// Most negative admissible eigenvalue of cov + (hbar/2) iJ.
    pub robertson: T,
    /// Max |SJS^T - J| entry for a symplectic transfer.
    pub symplectic: T,
    /// Max |norm^2 - 1| for grid wavefunctions under trapezoid quadrature.
    pub grid_norm: T,
    /// Eigenvalues of a state above this count toward its support.
    pub support_eig: T,
    /// Norm bound under which two evolved observables commute on the state
    /// support.
    pub commute: T,
    /// |x - y| below which two outcome values are paired as equal.
    pub value_match: T,
    /// Off-diagonal joint mass admissible for a precise measurement.
    pub diag_mass: T,
    /// rms error below which a state is counted as measured precisely.
    pub zero_error: T,
    /// Singular values above this count toward a subspace basis rank.
    pub rank: T,
    /// Raw variances / squared errors down to -clamp are truncated to zero.
    pub clamp: T,
    /// Slack granted to inequalities that are theorems.
    pub theorem: T,
    /// Slack used when deciding satisfied flags in reports.
    pub flag: T,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Self {
            hermit: real(1e-10),
            trace: real(1e-10),
            psd: real(1e-10),
            degeneracy: real(1e-8),
            projector: real(1e-9),
            unitary: real(1e-10),
            unit_norm: real(1e-10),
            robertson: real(1e-9),
            symplectic: real(1e-10),
            grid_norm: real(1e-8),
            support_eig: real(1e-12),
            commute: real(1e-8),
            value_match: real(1e-8),
            diag_mass: real(1e-9),
            zero_error: real(1e-9),
            rank: real(1e-10),
            clamp: real(1e-10),
            theorem: real(1e-10),
            flag: real(1e-12),
        }
    }
}

impl<T: Scalar> Tolerances<T> {
    pub fn new() -> Self {
        Self::default()
    }
}
