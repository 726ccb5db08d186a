//! Finite-dimensional measuring processes and their error/disturbance
//! observables.
//!
//! A measuring process couples the system to a probe by a unitary and reads
//! a meter observable off the probe afterwards. The error observable
//! `N(A) = M(dt) - A(0)` and the disturbance observable `D(B) = B(dt) -
//! B(0)` live on the composite space; their second moments in the composite
//! state give the rms error and disturbance. Joint and weak joint outcome
//! distributions, the precise-measurement characterization, cyclic
//! subspaces and the locally uniform error/disturbance all derive from the
//! same spectral machinery.

use nalgebra::ComplexField;
use num_complex::Complex;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{
    clamped_sqrt, commutator, identity, outer, partial_probe_expectation, spectral_decompose_with,
    spectral_norm, tensor, trace_product, CMatrix, CVector, DensityState, HermitianOperator,
    UnitaryOperator,
};
use crate::scalar::{cx, rabs, real, Scalar};
use crate::tolerances::Tolerances;

/// Which factor of the composite space an observable lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    System,
    Probe,
}

/// Heisenberg-picture time of an embedded observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Time {
    /// Before the interaction: `A (x) I` or `I (x) A`.
    Initial,
    /// After the interaction: `U† X(0) U`.
    Final,
}

/// A measuring process: probe state, coupling unitary and meter observable.
#[derive(Debug, Clone)]
pub struct MeasuringProcess<T: Scalar> {
    sys_dim: usize,
    probe_dim: usize,
    probe_state: CVector<T>,
    coupling: UnitaryOperator<T>,
    meter: HermitianOperator<T>,
}

impl<T: Scalar> MeasuringProcess<T> {
    pub fn new(
        sys_dim: usize,
        probe_state: CVector<T>,
        coupling: UnitaryOperator<T>,
        meter: HermitianOperator<T>,
    ) -> Result<Self> {
        let tol = Tolerances::<T>::default();
        let probe_dim = probe_state.len();
        let norm = probe_state.norm();
        if rabs(norm - T::one()) > tol.unit_norm {
            return Err(Error::NotUnitNorm {
                norm: norm.to_f64().unwrap_or(f64::NAN),
                tol: tol.unit_norm.to_f64().unwrap_or(f64::NAN),
            });
        }
        if coupling.dim() != sys_dim * probe_dim {
            return Err(Error::DimensionMismatch {
                left: coupling.dim(),
                right: sys_dim * probe_dim,
            });
        }
        if meter.dim() != probe_dim {
            return Err(Error::DimensionMismatch { left: meter.dim(), right: probe_dim });
        }
        Ok(Self { sys_dim, probe_dim, probe_state, coupling, meter })
    }

    pub fn sys_dim(&self) -> usize {
        self.sys_dim
    }

    pub fn probe_dim(&self) -> usize {
        self.probe_dim
    }

    pub fn composite_dim(&self) -> usize {
        self.sys_dim * self.probe_dim
    }

    pub fn probe_state(&self) -> &CVector<T> {
        &self.probe_state
    }

    pub fn coupling(&self) -> &UnitaryOperator<T> {
        &self.coupling
    }

    pub fn meter(&self) -> &HermitianOperator<T> {
        &self.meter
    }

    /// `rho (x) |xi><xi|` on the composite space.
    pub fn composite_state(&self, rho: &DensityState<T>) -> CMatrix<T> {
        tensor(rho.matrix(), &outer(&self.probe_state))
    }

    /// Projector onto the support of the composite state: the support of
    /// `rho` tensored with the probe ray.
    pub fn composite_support(&self, rho: &DensityState<T>, tol: &Tolerances<T>) -> CMatrix<T> {
        tensor(&rho.support_projector(tol), &outer(&self.probe_state))
    }

    /// Embeds a party-local matrix on the composite space at t = 0.
    pub fn embed(&self, party: Party, op: &CMatrix<T>) -> CMatrix<T> {
        match party {
            Party::System => tensor(op, &identity(self.probe_dim)),
            Party::Probe => tensor(&identity(self.sys_dim), op),
        }
    }

    fn check_party_dim(&self, party: Party, dim: usize) -> Result<()> {
        let want = match party {
            Party::System => self.sys_dim,
            Party::Probe => self.probe_dim,
        };
        if dim != want {
            return Err(Error::DimensionMismatch { left: dim, right: want });
        }
        Ok(())
    }
}

fn evolved_tolerances<T: Scalar>() -> Tolerances<T> {
    // conjugation by a validated unitary keeps Hermiticity within rounding,
    // but products of near-unit entries accumulate a little more noise than
    // the construction tolerance
    Tolerances { hermit: real::<T>(1e-8), ..Tolerances::default() }
}

/// Heisenberg-picture observable on the composite space: the embedding at
/// t = 0 or its conjugation `U† X U` at the end of the interaction.
/// Conjugation preserves Hermiticity and the spectrum.
pub fn heisenberg_evolve<T: Scalar>(
    mp: &MeasuringProcess<T>,
    party: Party,
    op: &HermitianOperator<T>,
    time: Time,
) -> Result<HermitianOperator<T>> {
    mp.check_party_dim(party, op.dim())?;
    let embedded = mp.embed(party, op.matrix());
    let mat = match time {
        Time::Initial => embedded,
        Time::Final => mp.coupling.conjugate(&embedded),
    };
    HermitianOperator::with_tolerances(mat, &evolved_tolerances())
}

/// Meter observable at the end of the interaction, `M(dt)`.
pub fn meter_final<T: Scalar>(mp: &MeasuringProcess<T>) -> Result<HermitianOperator<T>> {
    let meter = mp.meter().clone();
    heisenberg_evolve(mp, Party::Probe, &meter, Time::Final)
}

/// The four error/disturbance operators of one scenario.
#[derive(Debug, Clone)]
pub struct ErrorObservables<T: Scalar> {
    /// `N(A) = M(dt) - A(0)` on the composite space.
    pub error_observable: HermitianOperator<T>,
    /// `D(B) = B(dt) - B(0)` on the composite space.
    pub disturbance_observable: HermitianOperator<T>,
    /// `n(A) = <xi| N(A) |xi>` on the system.
    pub mean_error: HermitianOperator<T>,
    /// `d(B) = <xi| D(B) |xi>` on the system.
    pub mean_disturbance: HermitianOperator<T>,
}

/// Builds `N(A)`, `D(B)` and their probe-averaged system parts.
pub fn error_observables<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    b: &HermitianOperator<T>,
) -> Result<ErrorObservables<T>> {
    let n = error_observable(mp, a)?;
    let d = disturbance_observable(mp, b)?;
    let mean_error = partial_probe_expectation(n.matrix(), mp.probe_state())?;
    let mean_disturbance = partial_probe_expectation(d.matrix(), mp.probe_state())?;
    let tol = evolved_tolerances();
    Ok(ErrorObservables {
        error_observable: n,
        disturbance_observable: d,
        mean_error: HermitianOperator::with_tolerances(mean_error, &tol)?,
        mean_disturbance: HermitianOperator::with_tolerances(mean_disturbance, &tol)?,
    })
}

/// `N(A) = M(dt) - A(0)`.
pub fn error_observable<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    let m_dt = meter_final(mp)?;
    let a0 = heisenberg_evolve(mp, Party::System, a, Time::Initial)?;
    HermitianOperator::with_tolerances(m_dt.matrix() - a0.matrix(), &evolved_tolerances())
}

/// `D(B) = B(dt) - B(0)`.
pub fn disturbance_observable<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    let b_dt = heisenberg_evolve(mp, Party::System, b, Time::Final)?;
    let b0 = heisenberg_evolve(mp, Party::System, b, Time::Initial)?;
    HermitianOperator::with_tolerances(b_dt.matrix() - b0.matrix(), &evolved_tolerances())
}

/// `n(A)` alone.
pub fn mean_error_operator<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    let n = error_observable(mp, a)?;
    HermitianOperator::with_tolerances(
        partial_probe_expectation(n.matrix(), mp.probe_state())?,
        &evolved_tolerances(),
    )
}

/// `d(B)` alone.
pub fn mean_disturbance_operator<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
) -> Result<HermitianOperator<T>> {
    let d = disturbance_observable(mp, b)?;
    HermitianOperator::with_tolerances(
        partial_probe_expectation(d.matrix(), mp.probe_state())?,
        &evolved_tolerances(),
    )
}

fn rms_of_square<T: Scalar>(
    mp: &MeasuringProcess<T>,
    op: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let sq = op.matrix() * op.matrix();
    let raw = trace_product(&sq, &mp.composite_state(rho)).re;
    clamped_sqrt(raw, &Tolerances::default())
}

/// rms error `epsilon(A, rho) = Tr[N(A)^2 rho (x) |xi><xi|]^(1/2)`.
pub fn rms_error<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let n = error_observable(mp, a)?;
    rms_of_square(mp, &n, rho)
}

/// rms disturbance `eta(B, rho) = Tr[D(B)^2 rho (x) |xi><xi|]^(1/2)`.
pub fn rms_disturbance<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let d = disturbance_observable(mp, b)?;
    rms_of_square(mp, &d, rho)
}

/// System-side quadratic form of the squared error observable:
/// `epsilon(A, |phi>)^2 = <phi| K |phi>` with `K = <xi| N(A)^2 |xi>`.
pub fn error_quadratic_form<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
) -> Result<CMatrix<T>> {
    let n = error_observable(mp, a)?;
    let sq = n.matrix() * n.matrix();
    partial_probe_expectation(&sq, mp.probe_state())
}

/// Mirror for the disturbance: `eta(B, |phi>)^2 = <phi| K_D |phi>`.
pub fn disturbance_quadratic_form<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
) -> Result<CMatrix<T>> {
    let d = disturbance_observable(mp, b)?;
    let sq = d.matrix() * d.matrix();
    partial_probe_expectation(&sq, mp.probe_state())
}

/// Spectral data of an observable embedded and evolved on the composite
/// space: one projector per distinct eigenvalue of the local operator.
#[derive(Debug, Clone)]
pub struct EvolvedSpectral<T: Scalar> {
    pub values: Vec<T>,
    pub projectors: Vec<CMatrix<T>>,
}

impl<T: Scalar> EvolvedSpectral<T> {
    /// Full composite operator `sum_k x_k P_k`.
    pub fn operator(&self) -> CMatrix<T> {
        let dim = self.projectors.first().map_or(0, |p| p.nrows());
        let mut m = CMatrix::zeros(dim, dim);
        for (x, p) in self.values.iter().zip(&self.projectors) {
            m += p * cx(*x);
        }
        m
    }
}

/// Spectral decomposition of a party-local observable, embedded at the
/// requested time. Degenerate eigenvalues are merged before evolution, so
/// the result does not depend on any eigenvector labeling within a
/// degenerate block.
pub fn evolved_spectral<T: Scalar>(
    mp: &MeasuringProcess<T>,
    party: Party,
    op: &HermitianOperator<T>,
    time: Time,
) -> Result<EvolvedSpectral<T>> {
    mp.check_party_dim(party, op.dim())?;
    let dec = spectral_decompose_with(op, &Tolerances::default());
    let projectors = dec
        .projectors
        .iter()
        .map(|p| {
            let embedded = mp.embed(party, p);
            match time {
                Time::Initial => embedded,
                Time::Final => mp.coupling.conjugate(&embedded),
            }
        })
        .collect();
    Ok(EvolvedSpectral { values: dec.eigenvalues, projectors })
}

/// Proper joint distribution over eigenvalue pairs of two commuting
/// composite observables.
#[derive(Debug, Clone)]
pub struct JointDistribution<T: Scalar> {
    pub x_values: Vec<T>,
    pub y_values: Vec<T>,
    /// Row-major over (x, y).
    pub probs: Vec<T>,
}

impl<T: Scalar> JointDistribution<T> {
    pub fn prob(&self, i: usize, j: usize) -> T {
        self.probs[i * self.y_values.len() + j]
    }

    /// Flattened support pairs, row-major.
    pub fn support(&self) -> Vec<(T, T)> {
        let mut out = Vec::with_capacity(self.x_values.len() * self.y_values.len());
        for &x in &self.x_values {
            for &y in &self.y_values {
                out.push((x, y));
            }
        }
        out
    }

    pub fn total(&self) -> T {
        self.probs.iter().fold(T::zero(), |acc, &p| acc + p)
    }

    pub fn marginal_x(&self) -> Vec<T> {
        (0..self.x_values.len())
            .map(|i| (0..self.y_values.len()).fold(T::zero(), |acc, j| acc + self.prob(i, j)))
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<T> {
        (0..self.y_values.len())
            .map(|j| (0..self.x_values.len()).fold(T::zero(), |acc, i| acc + self.prob(i, j)))
            .collect()
    }

    /// Probability mass on pairs with `|x - y| > match_tol`.
    pub fn off_diagonal_mass(&self, match_tol: T) -> T {
        let mut acc = T::zero();
        for (i, &x) in self.x_values.iter().enumerate() {
            for (j, &y) in self.y_values.iter().enumerate() {
                if rabs(x - y) > match_tol {
                    acc += self.prob(i, j);
                }
            }
        }
        acc
    }
}

/// Complex-valued weak joint distribution `<E^X(x) E^Y(y)>`; defined for
/// any pair of observables, commuting or not.
#[derive(Debug, Clone)]
pub struct WeakJointDistribution<T: Scalar> {
    pub x_values: Vec<T>,
    pub y_values: Vec<T>,
    /// Row-major over (x, y).
    pub values: Vec<Complex<T>>,
}

impl<T: Scalar> WeakJointDistribution<T> {
    pub fn value(&self, i: usize, j: usize) -> Complex<T> {
        self.values[i * self.y_values.len() + j]
    }

    pub fn support(&self) -> Vec<(T, T)> {
        let mut out = Vec::with_capacity(self.x_values.len() * self.y_values.len());
        for &x in &self.x_values {
            for &y in &self.y_values {
                out.push((x, y));
            }
        }
        out
    }

    pub fn total(&self) -> Complex<T> {
        self.values.iter().fold(Complex::new(T::zero(), T::zero()), |acc, &v| acc + v)
    }

    pub fn marginal_x(&self) -> Vec<Complex<T>> {
        (0..self.x_values.len())
            .map(|i| {
                (0..self.y_values.len())
                    .fold(Complex::new(T::zero(), T::zero()), |acc, j| acc + self.value(i, j))
            })
            .collect()
    }

    pub fn marginal_y(&self) -> Vec<Complex<T>> {
        (0..self.y_values.len())
            .map(|j| {
                (0..self.x_values.len())
                    .fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self.value(i, j))
            })
            .collect()
    }

    pub fn max_imaginary(&self) -> T {
        self.values.iter().fold(T::zero(), |acc, v| {
            let im = rabs(v.im);
            if im > acc {
                im
            } else {
                acc
            }
        })
    }

    /// Total `|value|` mass on pairs with `|x - y| > match_tol`.
    pub fn off_diagonal_mass(&self, match_tol: T) -> T {
        let mut acc = T::zero();
        for (i, &x) in self.x_values.iter().enumerate() {
            for (j, &y) in self.y_values.iter().enumerate() {
                if rabs(x - y) > match_tol {
                    acc += self.value(i, j).modulus();
                }
            }
        }
        acc
    }
}

/// Norm of the commutator of the two full operators restricted to the
/// support of the composite state.
pub fn support_commutator_norm<T: Scalar>(
    mp: &MeasuringProcess<T>,
    x: &EvolvedSpectral<T>,
    y: &EvolvedSpectral<T>,
    rho: &DensityState<T>,
    tol: &Tolerances<T>,
) -> T {
    let supp = mp.composite_support(rho, tol);
    let comm = commutator(&x.operator(), &y.operator());
    spectral_norm(&(comm * supp))
}

/// Joint probability distribution of two evolved observables, defined when
/// they commute on the support of the composite state.
pub fn joint_distribution<T: Scalar>(
    mp: &MeasuringProcess<T>,
    x: &EvolvedSpectral<T>,
    y: &EvolvedSpectral<T>,
    rho: &DensityState<T>,
) -> Result<JointDistribution<T>> {
    let tol = Tolerances::<T>::default();
    let comm_norm = support_commutator_norm(mp, x, y, rho, &tol);
    if comm_norm > tol.commute {
        return Err(Error::NoncommutingPair {
            norm: comm_norm.to_f64().unwrap_or(f64::NAN),
            tol: tol.commute.to_f64().unwrap_or(f64::NAN),
        });
    }
    let weak = weak_joint_distribution(mp, x, y, rho);
    let probs =
        weak.values.iter().map(|v| if v.re > T::zero() { v.re } else { T::zero() }).collect();
    Ok(JointDistribution { x_values: weak.x_values, y_values: weak.y_values, probs })
}

/// Weak joint distribution `<E^X(x) E^Y(y)>` in the composite state;
/// always defined, complex in general, and equal to the proper joint
/// distribution whenever the commuting precondition holds.
pub fn weak_joint_distribution<T: Scalar>(
    mp: &MeasuringProcess<T>,
    x: &EvolvedSpectral<T>,
    y: &EvolvedSpectral<T>,
    rho: &DensityState<T>,
) -> WeakJointDistribution<T> {
    let state = mp.composite_state(rho);
    let mut values = Vec::with_capacity(x.values.len() * y.values.len());
    for px in &x.projectors {
        for py in &y.projectors {
            values.push(trace_product(&(px * py), &state));
        }
    }
    WeakJointDistribution { x_values: x.values.clone(), y_values: y.values.clone(), values }
}

/// The pair `(A(0), M(dt))` used by the measurement-error statistics.
pub fn measurement_pair<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
) -> Result<(EvolvedSpectral<T>, EvolvedSpectral<T>)> {
    let meter = mp.meter().clone();
    Ok((
        evolved_spectral(mp, Party::System, a, Time::Initial)?,
        evolved_spectral(mp, Party::Probe, &meter, Time::Final)?,
    ))
}

/// The pair `(B(0), B(dt))` used by the disturbance statistics.
pub fn disturbance_pair<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
) -> Result<(EvolvedSpectral<T>, EvolvedSpectral<T>)> {
    Ok((
        evolved_spectral(mp, Party::System, b, Time::Initial)?,
        evolved_spectral(mp, Party::System, b, Time::Final)?,
    ))
}

/// Diagnostics of the precise-measurement predicate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionDiagnostics<T: Scalar> {
    pub commuting: bool,
    pub commutator_norm: T,
    pub off_diagonal_mass: T,
    pub precise: bool,
}

fn diagonal_concentration<T: Scalar>(
    mp: &MeasuringProcess<T>,
    x: &EvolvedSpectral<T>,
    y: &EvolvedSpectral<T>,
    rho: &DensityState<T>,
) -> PrecisionDiagnostics<T> {
    let tol = Tolerances::<T>::default();
    let comm_norm = support_commutator_norm(mp, x, y, rho, &tol);
    let commuting = comm_norm <= tol.commute;
    let weak = weak_joint_distribution(mp, x, y, rho);
    let mut off_diag = T::zero();
    for (i, &xv) in weak.x_values.iter().enumerate() {
        for (j, &yv) in weak.y_values.iter().enumerate() {
            if rabs(xv - yv) > tol.value_match {
                off_diag += rabs(weak.value(i, j).re);
            }
        }
    }
    PrecisionDiagnostics {
        commuting,
        commutator_norm: comm_norm,
        off_diagonal_mass: off_diag,
        precise: commuting && off_diag <= tol.diag_mass,
    }
}

/// Whether the process measures `A` precisely in `rho`: `A(0)` and `M(dt)`
/// commute on the state support and their joint distribution concentrates
/// on the diagonal.
pub fn is_precise<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<PrecisionDiagnostics<T>> {
    let (x, y) = measurement_pair(mp, a)?;
    Ok(diagonal_concentration(mp, &x, &y, rho))
}

/// Whether the process leaves `B` undisturbed in `rho`: the mirrored
/// predicate for the pair `(B(0), B(dt))`.
pub fn is_non_disturbing<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<PrecisionDiagnostics<T>> {
    let (x, y) = disturbance_pair(mp, b)?;
    Ok(diagonal_concentration(mp, &x, &y, rho))
}

/// Orthonormal basis of the cyclic subspace generated by an observable and
/// a state: the span of all spectral projections of the support vectors.
#[derive(Debug, Clone)]
pub struct CyclicSubspace<T: Scalar> {
    basis: Vec<CVector<T>>,
    space_dim: usize,
}

impl<T: Scalar> CyclicSubspace<T> {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn space_dim(&self) -> usize {
        self.space_dim
    }

    pub fn basis(&self) -> &[CVector<T>] {
        &self.basis
    }

    /// Basis vectors as the columns of a `space_dim x dim` matrix.
    pub fn basis_matrix(&self) -> CMatrix<T> {
        let mut m = CMatrix::zeros(self.space_dim, self.basis.len());
        for (k, v) in self.basis.iter().enumerate() {
            m.set_column(k, v);
        }
        m
    }

    /// Random unit vector in the subspace (complex Gaussian coefficients).
    pub fn random_unit_vector(&self, rng: &mut impl Rng) -> CVector<T> {
        let mut v = CVector::zeros(self.space_dim);
        for b in &self.basis {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            v += b * Complex::new(real::<T>(re), real::<T>(im));
        }
        let n = v.norm();
        v / cx(n)
    }
}

/// Computes `C(A, rho)`: spectral projections of every support vector of
/// `rho`, orthonormalized by singular value decomposition at the rank
/// tolerance.
pub fn cyclic_subspace<T: Scalar>(
    a: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> CyclicSubspace<T> {
    let tol = Tolerances::<T>::default();
    let dec = spectral_decompose_with(a, &tol);
    let support = rho.support_vectors(&tol);
    let dim = a.dim();
    let mut columns: Vec<CVector<T>> = Vec::new();
    for phi in &support {
        for proj in &dec.projectors {
            columns.push(proj * phi);
        }
    }
    let mut m = CMatrix::<T>::zeros(dim, columns.len().max(1));
    for (k, col) in columns.iter().enumerate() {
        m.set_column(k, col);
    }
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors were requested");
    let mut basis = Vec::new();
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > tol.rank {
            basis.push(u.column(k).into_owned());
        }
    }
    CyclicSubspace { basis, space_dim: dim }
}

/// rms error on a pure system state via the error quadratic form.
pub fn rms_error_on_vector<T: Scalar>(k_form: &CMatrix<T>, phi: &CVector<T>) -> T {
    let val = (phi.adjoint() * k_form * phi)[(0, 0)].re;
    if val > T::zero() {
        val.sqrt()
    } else {
        T::zero()
    }
}

/// The four equivalent conditions of the precise-measurement theorem,
/// evaluated independently.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Theorem1Conditions {
    /// (i) the joint distribution of `(A(0), M(dt))` exists and
    /// concentrates on the diagonal.
    pub precise: bool,
    /// (ii) the weak joint distribution vanishes off the diagonal.
    pub weak_diagonal: bool,
    /// (iii) the error vanishes on every vector of the cyclic subspace
    /// (basis and random samples).
    pub vanishing_on_cyclic: bool,
    /// (iv) the error vanishes on a generating subset (the computed basis).
    pub vanishing_on_generating: bool,
}

impl Theorem1Conditions {
    pub fn all_agree(&self) -> bool {
        self.precise == self.weak_diagonal
            && self.precise == self.vanishing_on_cyclic
            && self.precise == self.vanishing_on_generating
    }

    pub fn as_array(&self) -> [bool; 4] {
        [self.precise, self.weak_diagonal, self.vanishing_on_cyclic, self.vanishing_on_generating]
    }
}

/// Evaluates the four conditions for `(mp, A, rho)`. Condition (iii)
/// samples 20 seeded random unit vectors of the cyclic subspace on top of
/// the basis vectors.
pub fn theorem1_conditions<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    rho: &DensityState<T>,
    seed: u64,
) -> Result<Theorem1Conditions> {
    let tol = Tolerances::<T>::default();
    let precise = is_precise(mp, a, rho)?.precise;

    let (x, y) = measurement_pair(mp, a)?;
    let weak = weak_joint_distribution(mp, &x, &y, rho);
    let mut weak_diagonal = true;
    for (i, &xv) in weak.x_values.iter().enumerate() {
        for (j, &yv) in weak.y_values.iter().enumerate() {
            if rabs(xv - yv) > tol.value_match && weak.value(i, j).modulus() > tol.diag_mass {
                weak_diagonal = false;
            }
        }
    }

    let k_form = error_quadratic_form(mp, a)?;
    let cyc = cyclic_subspace(a, rho);
    let vanishing_on_generating =
        cyc.basis().iter().all(|phi| rms_error_on_vector(&k_form, phi) <= tol.zero_error);
    let mut vanishing_on_cyclic = vanishing_on_generating;
    if !cyc.basis().is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let phi = cyc.random_unit_vector(&mut rng);
            if rms_error_on_vector(&k_form, &phi) > tol.zero_error {
                vanishing_on_cyclic = false;
            }
        }
    }

    Ok(Theorem1Conditions { precise, weak_diagonal, vanishing_on_cyclic, vanishing_on_generating })
}

fn locally_uniform_sup<T: Scalar>(k_form: &CMatrix<T>, cyc: &CyclicSubspace<T>) -> T {
    if cyc.dim() == 0 {
        return T::zero();
    }
    let b = cyc.basis_matrix();
    let g = b.adjoint() * k_form * &b;
    let top =
        g.symmetric_eigen().eigenvalues.iter().fold(
            T::zero(),
            |acc, &x| if x > acc { x } else { acc },
        );
    top.sqrt()
}

/// Locally uniform rms error: the supremum of `epsilon(A, |phi>)` over unit
/// vectors of `C(A, rho)`, computed exactly as the top eigenvalue of the
/// error quadratic form compressed to the subspace.
pub fn locally_uniform_error<T: Scalar>(
    mp: &MeasuringProcess<T>,
    a: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let k_form = error_quadratic_form(mp, a)?;
    Ok(locally_uniform_sup(&k_form, &cyclic_subspace(a, rho)))
}

/// Locally uniform rms disturbance over `C(B, rho)`.
pub fn locally_uniform_disturbance<T: Scalar>(
    mp: &MeasuringProcess<T>,
    b: &HermitianOperator<T>,
    rho: &DensityState<T>,
) -> Result<T> {
    let k_form = disturbance_quadratic_form(mp, b)?;
    Ok(locally_uniform_sup(&k_form, &cyclic_subspace(b, rho)))
}

/// Sampling oracle for the locally uniform quantities: the best of `samples`
/// random unit vectors of the subspace, refined by power iteration on the
/// compressed form. Uses only matrix-vector products, independently of the
/// eigenvalue route.
pub fn locally_uniform_sup_oracle<T: Scalar>(
    k_form: &CMatrix<T>,
    cyc: &CyclicSubspace<T>,
    samples: usize,
    seed: u64,
) -> T {
    if cyc.dim() == 0 {
        return T::zero();
    }
    let b = cyc.basis_matrix();
    let g = b.adjoint() * k_form * &b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = cyc.dim();
    let mut best = T::zero();
    let mut best_vec = CVector::<T>::zeros(r);
    for _ in 0..samples {
        let mut v = CVector::<T>::zeros(r);
        for k in 0..r {
            let re: f64 = rng.sample(rand_distr::StandardNormal);
            let im: f64 = rng.sample(rand_distr::StandardNormal);
            v[k] = Complex::new(real::<T>(re), real::<T>(im));
        }
        let n = v.norm();
        if n <= T::zero() {
            continue;
        }
        let v = v / cx(n);
        let quot = (v.adjoint() * &g * &v)[(0, 0)].re;
        if quot > best {
            best = quot;
            best_vec = v;
        }
    }
    // power refinement from the best sample
    let mut v = best_vec;
    for _ in 0..500 {
        let w = &g * &v;
        let n = w.norm();
        if n <= real::<T>(1e-300) {
            break;
        }
        v = w / cx(n);
    }
    let refined = (v.adjoint() * &g * &v)[(0, 0)].re;
    let top = if refined > best { refined } else { best };
    if top > T::zero() {
        top.sqrt()
    } else {
        T::zero()
    }
}

/// Controlled-NOT copy process on a pair of qubits: system control, probe
/// target prepared in `|0>`, meter `sigma_z`. Measures `sigma_z` precisely
/// and disturbs `sigma_x` maximally.
pub fn cnot_process<T: Scalar>() -> MeasuringProcess<T> {
    let o = Complex::new(T::zero(), T::zero());
    let l = Complex::new(T::one(), T::zero());
    let u = CMatrix::from_row_slice(4, 4, &[l, o, o, o, o, l, o, o, o, o, o, l, o, o, l, o]);
    MeasuringProcess::new(
        2,
        crate::linalg::basis_vector(2, 0),
        UnitaryOperator::new(u).expect("permutation matrix is unitary"),
        crate::linalg::pauli_z(),
    )
    .expect("valid process")
}

/// Degenerate reference process: no interaction and a meter stuck at zero.
pub fn constant_meter_process<T: Scalar>(sys_dim: usize) -> MeasuringProcess<T> {
    MeasuringProcess::new(
        sys_dim,
        crate::linalg::basis_vector(2, 0),
        UnitaryOperator::identity(2 * sys_dim),
        HermitianOperator::zero(2),
    )
    .expect("valid process")
}

/// No-interaction process with an arbitrary probe meter.
pub fn identity_process<T: Scalar>(
    sys_dim: usize,
    probe_dim: usize,
    meter: HermitianOperator<T>,
) -> Result<MeasuringProcess<T>> {
    MeasuringProcess::new(
        sys_dim,
        crate::linalg::basis_vector(probe_dim, 0),
        UnitaryOperator::identity(sys_dim * probe_dim),
        meter,
    )
}
