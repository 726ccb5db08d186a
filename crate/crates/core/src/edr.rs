//! Error-disturbance relation reports and evaluators.
//!
//! Every scenario, continuous-variable or finite-dimensional, reduces to the
//! same handful of quantities: rms error, rms disturbance, standard
//! deviations, the error/disturbance correlation term and the commutator
//! bound. [`EdrReport`] is the common output shape; the evaluators fill it
//! from either the Gaussian moment engine or the operator formalism.
//!
//! Three of the relations are theorems: the correlation-corrected relation,
//! the three-term relation and its locally uniform variant hold for every
//! observable pair, state and apparatus. Their evaluators therefore treat a
//! violation beyond the theorem tolerance as an internal error. The plain
//! product relation carries no such claim and is reported as observed.

use crate::error::{Error, Result};
use crate::linalg::{
    commutator, expectation, spectral_norm, std_dev, DensityState, HermitianOperator,
};
use crate::measurement::{
    locally_uniform_disturbance, locally_uniform_error, mean_disturbance_operator,
    mean_error_operator, rms_disturbance, rms_error, MeasuringProcess,
};
use nalgebra::ComplexField;
use crate::scalar::{cx, rabs, real, rmax, Scalar};
use crate::tolerances::Tolerances;

/// One named inequality with both sides and its verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityCheck<T: Scalar> {
    pub name: String,
    pub lhs: T,
    pub rhs: T,
    pub satisfied: bool,
}

impl<T: Scalar> InequalityCheck<T> {
    /// `lhs >= rhs` granted `slack`.
    pub fn at_least(name: &str, lhs: T, rhs: T, slack: T) -> Self {
        Self { name: name.to_string(), lhs, rhs, satisfied: lhs >= rhs - slack }
    }

    /// `|lhs - rhs| <= slack`.
    pub fn equals(name: &str, lhs: T, rhs: T, slack: T) -> Self {
        Self { name: name.to_string(), lhs, rhs, satisfied: rabs(lhs - rhs) <= slack }
    }
}

/// All inequality sides for one scenario.
///
/// `epsilon_a`/`eta_b` are the rms error of A and rms disturbance of B,
/// `sigma_a`/`sigma_b` the pre-measurement standard deviations,
/// `correlation_term` is `|<[n(A),B]> + <[A,d(B)]>|` and `commutator_bound`
/// is `|<[A,B]>| / 2`. The three `lhs_*` fields and their flags cover the
/// product relation, the correlation-corrected relation and the
/// three-term relation; `checks` carries any further scenario-specific
/// inequalities by name.
#[derive(Debug, Clone, PartialEq)]
pub struct EdrReport<T: Scalar> {
    pub scenario: String,
    pub epsilon_a: T,
    pub eta_b: T,
    pub sigma_a: T,
    pub sigma_b: T,
    pub correlation_term: T,
    pub commutator_bound: T,
    pub lhs_heisenberg: T,
    pub lhs_universal: T,
    pub lhs_ozawa: T,
    pub heisenberg_satisfied: bool,
    pub universal_satisfied: bool,
    pub ozawa_satisfied: bool,
    pub checks: Vec<InequalityCheck<T>>,
}

impl<T: Scalar> EdrReport<T> {
    /// Assembles the report from the base quantities, evaluating the three
    /// standard inequalities at the flag tolerance.
    pub fn from_quantities(
        scenario: &str,
        epsilon_a: T,
        eta_b: T,
        sigma_a: T,
        sigma_b: T,
        correlation_term: T,
        commutator_bound: T,
    ) -> Self {
        let flag = real::<T>(1e-12);
        let lhs_heisenberg = epsilon_a * eta_b;
        let lhs_universal = lhs_heisenberg + correlation_term;
        let lhs_ozawa = lhs_heisenberg + epsilon_a * sigma_b + sigma_a * eta_b;
        Self {
            scenario: scenario.to_string(),
            epsilon_a,
            eta_b,
            sigma_a,
            sigma_b,
            correlation_term,
            commutator_bound,
            lhs_heisenberg,
            lhs_universal,
            lhs_ozawa,
            heisenberg_satisfied: lhs_heisenberg >= commutator_bound - flag,
            universal_satisfied: lhs_universal >= commutator_bound - flag,
            ozawa_satisfied: lhs_ozawa >= commutator_bound - flag,
            checks: Vec::new(),
        }
    }

    pub fn push_check(&mut self, check: InequalityCheck<T>) {
        self.checks.push(check);
    }

    pub fn check(&self, name: &str) -> Option<&InequalityCheck<T>> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// True when every named check passed.
    pub fn all_checks_satisfied(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    /// Largest magnitude appearing in the report, used by tests to confirm
    /// rescaling kept quantities in a trustworthy range.
    pub fn max_magnitude(&self) -> T {
        let mut m = T::zero();
        for v in [
            self.epsilon_a,
            self.eta_b,
            self.sigma_a,
            self.sigma_b,
            self.correlation_term,
            self.commutator_bound,
        ] {
            m = rmax(m, rabs(v));
        }
        m
    }
}

/// Operators above this spectral norm are rescaled to unit norm before a
/// theorem inequality is evaluated, so the fixed floating-point slack stays
/// meaningful.
const RESCALE_NORM_CAP: f64 = 1e3;

fn rescale_if_large<T: Scalar>(op: &HermitianOperator<T>) -> (HermitianOperator<T>, bool) {
    let norm = spectral_norm(op.matrix());
    if norm > real(RESCALE_NORM_CAP) {
        let scaled = op.matrix() * cx(T::one() / norm);
        (
            HermitianOperator::new(scaled).expect("rescaling preserves Hermiticity"),
            true,
        )
    } else {
        (op.clone(), false)
    }
}

/// The base quantities entering every finite-dimensional report.
struct ScenarioQuantities<T: Scalar> {
    epsilon: T,
    eta: T,
    sigma_a: T,
    sigma_b: T,
    correlation: T,
    bound: T,
    rescaled: bool,
}

fn finite_dim_quantities<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<ScenarioQuantities<T>> {
    let (a, rescaled_a) = rescale_if_large(a);
    let (b, rescaled_b) = rescale_if_large(b);
    let epsilon = rms_error(mp, &a, rho)?;
    let eta = rms_disturbance(mp, &b, rho)?;
    let sigma_a = std_dev(&a, rho)?;
    let sigma_b = std_dev(&b, rho)?;

    let n_op = mean_error_operator(mp, &a)?;
    let d_op = mean_disturbance_operator(mp, &b)?;
    let corr_na_b = expectation(&commutator(n_op.matrix(), b.matrix()), rho)?;
    let corr_a_db = expectation(&commutator(a.matrix(), d_op.matrix()), rho)?;
    let correlation = (corr_na_b + corr_a_db).modulus();

    let half = real::<T>(0.5);
    let bound = half * expectation(&commutator(a.matrix(), b.matrix()), rho)?.modulus();
    Ok(ScenarioQuantities {
        epsilon,
        eta,
        sigma_a,
        sigma_b,
        correlation,
        bound,
        rescaled: rescaled_a || rescaled_b,
    })
}

fn scenario_label(base: &str, rescaled: bool) -> String {
    if rescaled {
        format!("{base}+rescaled")
    } else {
        base.to_string()
    }
}

/// Product relation `epsilon(A) eta(B) >= |<[A,B]>|/2`. Not universally
/// valid; the report records whether this scenario happens to satisfy it.
pub fn heisenberg_edr<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<EdrReport<T>> {
    let q = finite_dim_quantities(mp, a, b, rho)?;
    let mut report = EdrReport::from_quantities(
        &scenario_label("heisenberg-edr", q.rescaled),
        q.epsilon,
        q.eta,
        q.sigma_a,
        q.sigma_b,
        q.correlation,
        q.bound,
    );
    report.push_check(InequalityCheck::at_least(
        "heisenberg-product",
        report.lhs_heisenberg,
        q.bound,
        real(1e-12),
    ));
    Ok(report)
}

/// Correlation-corrected relation
/// `epsilon(A) eta(B) + |<[n(A),B]> + <[A,d(B)]>| >= |<[A,B]>|/2`,
/// valid for every observable pair, state and apparatus.
pub fn universal_edr<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<EdrReport<T>> {
    let q = finite_dim_quantities(mp, a, b, rho)?;
    let tol = Tolerances::<T>::default();
    let mut report = EdrReport::from_quantities(
        &scenario_label("universal-edr", q.rescaled),
        q.epsilon,
        q.eta,
        q.sigma_a,
        q.sigma_b,
        q.correlation,
        q.bound,
    );
    if report.lhs_universal < q.bound - tol.theorem {
        return Err(Error::TheoremViolated {
            name: "correlation-corrected relation",
            lhs: report.lhs_universal.to_f64().unwrap_or(f64::NAN),
            rhs: q.bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    report.push_check(InequalityCheck::at_least(
        "universal-edr",
        report.lhs_universal,
        q.bound,
        tol.theorem,
    ));
    Ok(report)
}

/// Three-term relation
/// `epsilon eta + epsilon sigma(B) + sigma(A) eta >= |<[A,B]>|/2`,
/// valid for every observable pair, state and apparatus.
pub fn ozawa_edr<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<EdrReport<T>> {
    let q = finite_dim_quantities(mp, a, b, rho)?;
    let tol = Tolerances::<T>::default();
    let mut report = EdrReport::from_quantities(
        &scenario_label("ozawa-edr", q.rescaled),
        q.epsilon,
        q.eta,
        q.sigma_a,
        q.sigma_b,
        q.correlation,
        q.bound,
    );
    if report.lhs_ozawa < q.bound - tol.theorem {
        return Err(Error::TheoremViolated {
            name: "three-term relation",
            lhs: report.lhs_ozawa.to_f64().unwrap_or(f64::NAN),
            rhs: q.bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    report.push_check(InequalityCheck::at_least(
        "ozawa-edr",
        report.lhs_ozawa,
        q.bound,
        tol.theorem,
    ));
    Ok(report)
}

/// Constraints implied by the three-term relation in the degenerate cases:
/// for an error-free measurement `sigma(A) eta(B) >= |<[A,B]>|/2`
/// (disturbance bound) and for a non-disturbing one
/// `epsilon(A) sigma(B) >= |<[A,B]>|/2` (error bound). Each check is
/// attached only when its premise holds; a report without checks means
/// neither bound applies.
pub fn corollary_bounds<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<EdrReport<T>> {
    let q = finite_dim_quantities(mp, a, b, rho)?;
    let tol = Tolerances::<T>::default();
    let premise = real::<T>(1e-10);
    let mut report = EdrReport::from_quantities(
        &scenario_label("corollary-bounds", q.rescaled),
        q.epsilon,
        q.eta,
        q.sigma_a,
        q.sigma_b,
        q.correlation,
        q.bound,
    );
    if q.epsilon <= premise {
        report.push_check(InequalityCheck::at_least(
            "disturbance-bound",
            q.sigma_a * q.eta,
            q.bound,
            tol.theorem,
        ));
    }
    if q.eta <= premise {
        report.push_check(InequalityCheck::at_least(
            "error-bound",
            q.epsilon * q.sigma_b,
            q.bound,
            tol.theorem,
        ));
    }
    Ok(report)
}

/// Three-term relation evaluated with the locally uniform error and
/// disturbance; also a theorem.
pub fn locally_uniform_edr<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<EdrReport<T>> {
    let (a, rescaled_a) = rescale_if_large(a);
    let (b, rescaled_b) = rescale_if_large(b);
    let tol = Tolerances::<T>::default();
    let eps_bar = locally_uniform_error(mp, &a, rho)?;
    let eta_bar = locally_uniform_disturbance(mp, &b, rho)?;
    let sigma_a = std_dev(&a, rho)?;
    let sigma_b = std_dev(&b, rho)?;
    let half = real::<T>(0.5);
    let bound = half * expectation(&commutator(a.matrix(), b.matrix()), rho)?.modulus();
    let mut report = EdrReport::from_quantities(
        &scenario_label("locally-uniform-edr", rescaled_a || rescaled_b),
        eps_bar,
        eta_bar,
        sigma_a,
        sigma_b,
        T::zero(),
        bound,
    );
    if report.lhs_ozawa < bound - tol.theorem {
        return Err(Error::TheoremViolated {
            name: "locally uniform three-term relation",
            lhs: report.lhs_ozawa.to_f64().unwrap_or(f64::NAN),
            rhs: bound.to_f64().unwrap_or(f64::NAN),
        });
    }
    report.push_check(InequalityCheck::at_least(
        "locally-uniform-edr",
        report.lhs_ozawa,
        bound,
        tol.theorem,
    ));
    Ok(report)
}

/// Commutator bound `|<[A,B]>|/2` on its own, for callers assembling custom
/// reports.
pub fn commutator_bound<T: Scalar>(
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let half = real::<T>(0.5);
    Ok(half * expectation(&commutator(a.matrix(), b.matrix()), rho)?.modulus())
}
