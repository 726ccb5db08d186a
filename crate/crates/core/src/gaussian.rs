//! Continuous-variable engine for the two position-measurement models.
//!
//! Both measuring interactions are quadratic, so the Heisenberg-picture
//! dynamics of the canonical quadruple (Q, P, Qbar, Pbar) is exactly linear:
//! a 4x4 symplectic transfer matrix evolves the operators, and every rms
//! error/disturbance reduces to a second raw moment of a Gaussian state.
//! The closed-form transfers are cross-checked against numerical matrix
//! exponentials of the quadratic generators, and the outcome distribution of
//! the standard model against direct grid quadrature of the propagated
//! wavefunction kernel.

use nalgebra::{Matrix4, RowVector4, Vector4};
use num_complex::Complex;

use crate::edr::{EdrReport, InequalityCheck};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{cxi, rabs, real, rmax, Scalar};
use crate::tolerances::Tolerances;

/// Indices of the canonical quadruple, in the fixed ordering.
pub const Q: usize = 0;
pub const P: usize = 1;
pub const QBAR: usize = 2;
pub const PBAR: usize = 3;

/// The canonical quadruple (Q, P, Qbar, Pbar) with its Planck scale.
///
/// The ordering fixes the symplectic form `J` with `J[Q,P] = J[Qbar,Pbar] =
/// 1`; commutators are `[x_i, x_j] = i hbar J_ij`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CanonicalQuadruple<T: Scalar> {
    hbar: T,
}

impl<T: Scalar> CanonicalQuadruple<T> {
    pub fn new(hbar: T) -> Result<Self> {
        if hbar <= T::zero() {
            return Err(Error::NonPositiveHbar { value: hbar.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(Self { hbar })
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    pub fn symplectic_form() -> Matrix4<T> {
        let mut j = Matrix4::zeros();
        j[(Q, P)] = T::one();
        j[(P, Q)] = -T::one();
        j[(QBAR, PBAR)] = T::one();
        j[(PBAR, QBAR)] = -T::one();
        j
    }
}

impl<T: Scalar> Default for CanonicalQuadruple<T> {
    fn default() -> Self {
        Self { hbar: T::one() }
    }
}

/// First and second central moments of one mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeMoments<T: Scalar> {
    pub mean_q: T,
    pub mean_p: T,
    pub var_q: T,
    pub var_p: T,
    pub cov_qp: T,
}

impl<T: Scalar> ModeMoments<T> {
    pub fn new(mean_q: T, mean_p: T, var_q: T, var_p: T, cov_qp: T) -> Self {
        Self { mean_q, mean_p, var_q, var_p, cov_qp }
    }

    /// Zero-mean uncorrelated mode.
    pub fn zero_mean(var_q: T, var_p: T) -> Self {
        Self::new(T::zero(), T::zero(), var_q, var_p, T::zero())
    }

    /// Minimal-uncertainty packet of position width `s`:
    /// `Var(Q) = s^2`, `Var(P) = hbar^2 / (4 s^2)`.
    pub fn minimal(width: T, hbar: T) -> Self {
        let two = real::<T>(2.0);
        let var_q = width * width;
        let sp = hbar / (two * width);
        Self::zero_mean(var_q, sp * sp)
    }
}

/// Gaussian state of the object+probe pair: mean vector and symmetrized
/// covariance of (Q, P, Qbar, Pbar).
///
/// Object and probe are uncorrelated at t = 0 (the initial state is a
/// product state), so the off-diagonal 2x2 blocks of the covariance vanish.
/// Validity is the Robertson condition: `cov + (hbar/2) iJ >= 0`, which
/// implies the per-mode spread bound.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState4<T: Scalar> {
    mean: Vector4<T>,
    cov: Matrix4<T>,
    hbar: T,
}

impl<T: Scalar> GaussianState4<T> {
    pub fn new(mean: Vector4<T>, cov: Matrix4<T>, hbar: T) -> Result<Self> {
        Self::with_tolerances(mean, cov, hbar, &Tolerances::default())
    }

    pub fn with_tolerances(
        mean: Vector4<T>,
        cov: Matrix4<T>,
        hbar: T,
        tol: &Tolerances<T>,
    ) -> Result<Self> {
        if hbar <= T::zero() {
            return Err(Error::NonPositiveHbar { value: hbar.to_f64().unwrap_or(f64::NAN) });
        }
        let mut asym = T::zero();
        for i in 0..4 {
            for j in 0..4 {
                asym = rmax(asym, rabs(cov[(i, j)] - cov[(j, i)]));
            }
        }
        if asym > tol.hermit {
            return Err(Error::CovarianceNotSymmetric {
                max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
            });
        }
        let mut cross = T::zero();
        for i in 0..2 {
            for j in 2..4 {
                cross = rmax(cross, rabs(cov[(i, j)]));
            }
        }
        if cross > tol.flag {
            return Err(Error::CorrelatedBlocks { max_cross: cross.to_f64().unwrap_or(f64::NAN) });
        }
        let min_eig = robertson_min_eigenvalue(&cov, hbar);
        if min_eig < -tol.robertson {
            return Err(Error::RobertsonViolated {
                eigenvalue: min_eig.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mean, cov, hbar })
    }

    /// Product state from object and probe moments.
    pub fn from_blocks(object: ModeMoments<T>, probe: ModeMoments<T>, hbar: T) -> Result<Self> {
        let mean = Vector4::new(object.mean_q, object.mean_p, probe.mean_q, probe.mean_p);
        let mut cov = Matrix4::zeros();
        cov[(Q, Q)] = object.var_q;
        cov[(P, P)] = object.var_p;
        cov[(Q, P)] = object.cov_qp;
        cov[(P, Q)] = object.cov_qp;
        cov[(QBAR, QBAR)] = probe.var_q;
        cov[(PBAR, PBAR)] = probe.var_p;
        cov[(QBAR, PBAR)] = probe.cov_qp;
        cov[(PBAR, QBAR)] = probe.cov_qp;
        Self::new(mean, cov, hbar)
    }

    pub fn mean(&self) -> &Vector4<T> {
        &self.mean
    }

    pub fn cov(&self) -> &Matrix4<T> {
        &self.cov
    }

    pub fn hbar(&self) -> T {
        self.hbar
    }

    /// Mean of the linear combination `d . x`.
    pub fn linear_mean(&self, d: &RowVector4<T>) -> T {
        (d * self.mean)[(0, 0)]
    }

    /// Variance of the linear combination `d . x`.
    pub fn linear_variance(&self, d: &RowVector4<T>) -> T {
        (d * self.cov * d.transpose())[(0, 0)]
    }

    /// Second raw moment `<(d . x)^2> = Var + mean^2` of a linear
    /// combination of the canonical operators. The antisymmetric commutator
    /// part cancels in the quadratic form, so the result is real and exact.
    pub fn second_raw_moment(&self, d: &RowVector4<T>) -> T {
        let m = self.linear_mean(d);
        self.linear_variance(d) + m * m
    }
}

/// Smallest eigenvalue of the Hermitian matrix `cov + (hbar/2) iJ`.
fn robertson_min_eigenvalue<T: Scalar>(cov: &Matrix4<T>, hbar: T) -> T {
    let j = CanonicalQuadruple::<T>::symplectic_form();
    let half = real::<T>(0.5);
    let mut m = CMatrix::<T>::zeros(4, 4);
    for i in 0..4 {
        for k in 0..4 {
            m[(i, k)] = Complex::new(cov[(i, k)], T::zero()) + cxi(half * hbar * j[(i, k)]);
        }
    }
    m.symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(T::zero(), |acc, &x| if x < acc { x } else { acc })
}

/// Linear Heisenberg-picture evolution of the canonical quadruple: row `i`
/// expresses operator `i` at the end of the interaction as a combination of
/// the t = 0 operators. Preserves the symplectic form.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticTransfer<T: Scalar> {
    s: Matrix4<T>,
}

impl<T: Scalar> SymplecticTransfer<T> {
    pub fn new(s: Matrix4<T>) -> Result<Self> {
        Self::with_tolerances(s, &Tolerances::default())
    }

    pub fn with_tolerances(s: Matrix4<T>, tol: &Tolerances<T>) -> Result<Self> {
        let defect = symplectic_defect(&s);
        if defect > tol.symplectic {
            return Err(Error::NotSymplectic {
                max_deviation: defect.to_f64().unwrap_or(f64::NAN),
                tol: tol.symplectic.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { s })
    }

    pub fn matrix(&self) -> &Matrix4<T> {
        &self.s
    }

    /// Row of the evolved operator with the given canonical index.
    pub fn row(&self, idx: usize) -> RowVector4<T> {
        self.s.row(idx).into_owned()
    }

    /// Difference row for `x_evolved(end) - x_initial(0)`.
    pub fn difference_row(&self, evolved: usize, initial: usize) -> RowVector4<T> {
        let mut d = self.row(evolved);
        d[initial] -= T::one();
        d
    }
}

/// Max |SJS^T - J| entry.
pub fn symplectic_defect<T: Scalar>(s: &Matrix4<T>) -> T {
    let j = CanonicalQuadruple::<T>::symplectic_form();
    let d = s * j * s.transpose() - j;
    let mut worst = T::zero();
    for i in 0..4 {
        for k in 0..4 {
            worst = rmax(worst, rabs(d[(i, k)]));
        }
    }
    worst
}

/// The two continuous-variable measuring interactions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CvModelKind {
    /// `H = Q (x) Pbar`: the meter copies the position onto the pointer and
    /// the probe momentum kicks the object.
    VonNeumann,
    /// The 1988 modification with error-free position readout,
    /// `H = pi/(3 sqrt 3) (2 Q Pbar - 2 P Qbar + QP - Qbar Pbar)`.
    Ozawa1988,
}

impl CvModelKind {
    pub fn name(&self) -> &'static str {
        match self {
            CvModelKind::VonNeumann => "von-neumann",
            CvModelKind::Ozawa1988 => "ozawa-1988",
        }
    }
}

/// A measuring interaction with its coupling constant; the interaction time
/// is fixed by `K dt = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvModel<T: Scalar> {
    pub kind: CvModelKind,
    coupling: T,
}

impl<T: Scalar> CvModel<T> {
    pub fn new(kind: CvModelKind, coupling: T) -> Result<Self> {
        if coupling <= T::zero() {
            return Err(Error::NonPositiveCoupling {
                value: coupling.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { kind, coupling })
    }

    pub fn coupling(&self) -> T {
        self.coupling
    }

    /// `dt = 1 / K`, so that `K dt = 1` exactly.
    pub fn interaction_time(&self) -> T {
        T::one() / self.coupling
    }
}

/// Transfer matrix of the standard model over the full interaction:
/// `Q -> Q`, `Qbar -> Q + Qbar`, `P -> P - Pbar`, `Pbar -> Pbar`.
pub fn von_neumann_transfer<T: Scalar>() -> SymplecticTransfer<T> {
    transfer_at(CvModelKind::VonNeumann, T::one()).expect("unit tau fraction is in range")
}

/// Transfer matrix of the 1988 model at a fraction `K tau` of the
/// interaction. At fraction 1: `Q -> Q - Qbar`, `Qbar -> Q`, `P -> -Pbar`,
/// `Pbar -> P + Pbar`.
pub fn ozawa_transfer<T: Scalar>(tau_fraction: T) -> Result<SymplecticTransfer<T>> {
    transfer_at(CvModelKind::Ozawa1988, tau_fraction)
}

/// Closed-form transfer of either model at `tau_fraction = K tau` in [0, 1].
pub fn transfer_at<T: Scalar>(kind: CvModelKind, tau_fraction: T) -> Result<SymplecticTransfer<T>> {
    transfer_at_with(kind, tau_fraction, &Tolerances::default())
}

/// [`transfer_at`] with explicit tolerances, for reduced-precision scalars.
pub fn transfer_at_with<T: Scalar>(
    kind: CvModelKind,
    tau_fraction: T,
    tol: &Tolerances<T>,
) -> Result<SymplecticTransfer<T>> {
    if tau_fraction < T::zero() || tau_fraction > T::one() {
        return Err(Error::TauOutOfRange { value: tau_fraction.to_f64().unwrap_or(f64::NAN) });
    }
    let s = tau_fraction;
    let mat = match kind {
        CvModelKind::VonNeumann => {
            // nilpotent generator: the flow is affine in s
            let mut m = Matrix4::identity();
            m[(QBAR, Q)] = s;
            m[(P, PBAR)] = -s;
            m
        }
        CvModelKind::Ozawa1988 => {
            let third_pi = T::pi() / real::<T>(3.0);
            let two_over_sqrt3 = real::<T>(2.0) / real::<T>(3.0).sqrt();
            // a = (2/sqrt3) sin((1+s)pi/3), b = (2/sqrt3) sin(s pi/3),
            // d = (2/sqrt3) sin((1-s)pi/3); a = 1 at s = 0, b = 1 at s = 1.
            let a = two_over_sqrt3 * ((T::one() + s) * third_pi).sin();
            let b = two_over_sqrt3 * (s * third_pi).sin();
            let d = two_over_sqrt3 * ((T::one() - s) * third_pi).sin();
            let mut m = Matrix4::zeros();
            m[(Q, Q)] = a;
            m[(Q, QBAR)] = -b;
            m[(P, P)] = d;
            m[(P, PBAR)] = -b;
            m[(QBAR, Q)] = b;
            m[(QBAR, QBAR)] = d;
            m[(PBAR, P)] = b;
            m[(PBAR, PBAR)] = a;
            m
        }
    };
    SymplecticTransfer::with_tolerances(mat, tol)
}

/// Generator `A` of the linear Heisenberg flow `dx/ds = A x` in the scaled
/// time `s = K t`, derived from the quadratic interaction Hamiltonian via
/// `dx/ds = (i/hbar) [H, x]`.
pub fn flow_generator<T: Scalar>(kind: CvModelKind) -> Matrix4<T> {
    let mut a = Matrix4::zeros();
    match kind {
        CvModelKind::VonNeumann => {
            a[(QBAR, Q)] = T::one();
            a[(P, PBAR)] = -T::one();
        }
        CvModelKind::Ozawa1988 => {
            let c = T::pi() / (real::<T>(3.0) * real::<T>(3.0).sqrt());
            let two = real::<T>(2.0);
            a[(Q, Q)] = c;
            a[(Q, QBAR)] = -two * c;
            a[(P, P)] = -c;
            a[(P, PBAR)] = -two * c;
            a[(QBAR, Q)] = two * c;
            a[(QBAR, QBAR)] = -c;
            a[(PBAR, P)] = two * c;
            a[(PBAR, PBAR)] = c;
        }
    }
    a
}

/// Independent oracle for the closed-form transfers: numerically
/// exponentiates the flow generator (scaling-and-squaring Taylor series) and
/// wraps the result as a transfer.
pub fn matrix_exponential_check<T: Scalar>(
    kind: CvModelKind,
    tau_fraction: T,
) -> Result<SymplecticTransfer<T>> {
    if tau_fraction < T::zero() || tau_fraction > T::one() {
        return Err(Error::TauOutOfRange { value: tau_fraction.to_f64().unwrap_or(f64::NAN) });
    }
    let m = flow_generator::<T>(kind) * tau_fraction;
    SymplecticTransfer::new(expm4(&m))
}

/// Matrix exponential of a real 4x4 matrix by scaling and squaring with a
/// Taylor series.
pub fn expm4<T: Scalar>(m: &Matrix4<T>) -> Matrix4<T> {
    let mut norm = T::zero();
    for i in 0..4 {
        let mut row = T::zero();
        for j in 0..4 {
            row += rabs(m[(i, j)]);
        }
        norm = rmax(norm, row);
    }
    let quarter = real::<T>(0.25);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > quarter && squarings < 40 {
        scale *= real::<T>(0.5);
        squarings += 1;
    }
    let scaled = m * scale;

    let mut result = Matrix4::identity();
    let mut term = Matrix4::identity();
    for k in 1..=24usize {
        term = term * scaled / T::from_usize(k).expect("small factorial index");
        result += term;
    }
    for _ in 0..squarings {
        result *= result;
    }
    result
}

/// rms error of the position readout: `<(Qbar(dt) - Q(0))^2>^(1/2)`.
///
/// In the standard model this is the probe's raw position spread; in the
/// 1988 model the difference row vanishes identically, so the error is an
/// exact zero.
pub fn rms_error_q<T: Scalar>(kind: CvModelKind, state: &GaussianState4<T>) -> T {
    let transfer = transfer_at(kind, T::one()).expect("unit tau fraction is in range");
    let d = transfer.difference_row(QBAR, Q);
    raw_moment_sqrt(state, &d)
}

/// rms disturbance of the momentum: `<(P(dt) - P(0))^2>^(1/2)`.
pub fn rms_disturbance_p<T: Scalar>(kind: CvModelKind, state: &GaussianState4<T>) -> T {
    let transfer = transfer_at(kind, T::one()).expect("unit tau fraction is in range");
    let d = transfer.difference_row(P, P);
    raw_moment_sqrt(state, &d)
}

fn raw_moment_sqrt<T: Scalar>(state: &GaussianState4<T>, d: &RowVector4<T>) -> T {
    let raw = state.second_raw_moment(d);
    if raw > T::zero() {
        raw.sqrt()
    } else {
        T::zero()
    }
}

/// Coefficients of the system operators (Q, P) in the probe-averaged mean
/// error and mean disturbance operators give the correlation term of the
/// corrected relation exactly:
/// `|<[n(A),B]> + <[A,d(B)]>| = hbar |alpha_Q + beta_P|`.
fn cv_correlation_term<T: Scalar>(kind: CvModelKind, hbar: T) -> T {
    let transfer = transfer_at(kind, T::one()).expect("unit tau fraction is in range");
    let n_row = transfer.difference_row(QBAR, Q);
    let d_row = transfer.difference_row(P, P);
    hbar * rabs(n_row[Q] + d_row[P])
}

/// Full error-disturbance report for one model and state: epsilon(Q),
/// eta(P), the object spreads, the correlation term and the `hbar/2` bound.
pub fn edr_product_report<T: Scalar>(kind: CvModelKind, state: &GaussianState4<T>) -> EdrReport<T> {
    let eps = rms_error_q(kind, state);
    let eta = rms_disturbance_p(kind, state);
    let sigma_q = state.cov()[(Q, Q)].sqrt();
    let sigma_p = state.cov()[(P, P)].sqrt();
    let corr = cv_correlation_term(kind, state.hbar());
    let bound = real::<T>(0.5) * state.hbar();
    let mut report =
        EdrReport::from_quantities(kind.name(), eps, eta, sigma_q, sigma_p, corr, bound);
    report.push_check(InequalityCheck::at_least(
        "heisenberg-edr-product",
        report.lhs_heisenberg,
        bound,
        real(1e-12),
    ));
    report
}

/// Preparation uncertainty check `sigma(Q) sigma(P) >= hbar/2`.
///
/// Spreads follow the standard-deviation convention. The historical
/// convention rescales both spreads by sqrt(2) and states the bound as
/// `hbar`; the two are equivalent and only this one is implemented.
pub fn kennard_check<T: Scalar>(var_q: T, var_p: T, hbar: T) -> EdrReport<T> {
    let sigma_q = var_q.sqrt();
    let sigma_p = var_p.sqrt();
    let bound = real::<T>(0.5) * hbar;
    let mut report = EdrReport::from_quantities(
        "kennard",
        T::zero(),
        T::zero(),
        sigma_q,
        sigma_p,
        T::zero(),
        bound,
    );
    report.push_check(InequalityCheck::at_least("kennard", sigma_q * sigma_p, bound, real(1e-12)));
    report
}

/// Joint position-momentum measurement check for the standard model read as
/// `(M_Q, M_P) = (Qbar(dt), P(dt))`: the meter-spread relation
/// `sigma(M_Q) sigma(M_P) >= hbar` and the error tradeoff
/// `epsilon(Q) epsilon(P) >= hbar/2`, both of which require an unbiased
/// (zero-mean) probe.
pub fn arthurs_kelly_check<T: Scalar>(state: &GaussianState4<T>) -> Result<EdrReport<T>> {
    let mean_qbar = state.mean()[QBAR];
    let mean_pbar = state.mean()[PBAR];
    let tol = Tolerances::<T>::default();
    if rabs(mean_qbar) > tol.flag || rabs(mean_pbar) > tol.flag {
        return Err(Error::BiasedProbe {
            mean_q: mean_qbar.to_f64().unwrap_or(f64::NAN),
            mean_p: mean_pbar.to_f64().unwrap_or(f64::NAN),
        });
    }
    let transfer = von_neumann_transfer::<T>();
    let m_q = transfer.row(QBAR);
    let m_p = transfer.row(P);
    let sigma_mq = state.linear_variance(&m_q).sqrt();
    let sigma_mp = state.linear_variance(&m_p).sqrt();
    let eps_q = state.cov()[(QBAR, QBAR)].sqrt();
    let eps_p = state.cov()[(PBAR, PBAR)].sqrt();
    let hbar = state.hbar();
    let bound = real::<T>(0.5) * hbar;
    let mut report = EdrReport::from_quantities(
        "arthurs-kelly",
        eps_q,
        eps_p,
        sigma_mq,
        sigma_mp,
        T::zero(),
        bound,
    );
    report.push_check(InequalityCheck::at_least(
        "arthurs-kelly-meter-spread",
        sigma_mq * sigma_mp,
        hbar,
        real(1e-12),
    ));
    report.push_check(InequalityCheck::at_least(
        "error-tradeoff",
        eps_q * eps_p,
        bound,
        real(1e-12),
    ));
    Ok(report)
}

/// A complex wavefunction sampled on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction<T: Scalar> {
    x0: T,
    h: T,
    values: Vec<Complex<T>>,
}

impl<T: Scalar> GridFunction<T> {
    pub fn new(x0: T, h: T, values: Vec<Complex<T>>) -> Result<Self> {
        if h <= T::zero() || values.len() < 2 {
            return Err(Error::GridMismatch);
        }
        Ok(Self { x0, h, values })
    }

    /// Normalized Gaussian packet on `n` points spanning
    /// `[center - half_span, center + half_span]`, with position density
    /// mean `mean` and variance `var`.
    pub fn gaussian(center: T, half_span: T, n: usize, mean: T, var: T) -> Self {
        let two = real::<T>(2.0);
        let four = real::<T>(4.0);
        let h = two * half_span / T::from_usize(n - 1).expect("grid size fits the scalar");
        let x0 = center - half_span;
        let norm = (two * T::pi() * var).sqrt().sqrt();
        let values = (0..n)
            .map(|k| {
                let x = x0 + h * T::from_usize(k).expect("grid index fits the scalar");
                let dx = x - mean;
                Complex::new((-dx * dx / (four * var)).exp() / norm, T::zero())
            })
            .collect();
        Self { x0, h, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x0(&self) -> T {
        self.x0
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// Trapezoid-rule L2 norm squared.
    pub fn l2_norm_sq(&self) -> T {
        let half = real::<T>(0.5);
        let n = self.values.len();
        let mut acc = T::zero();
        for (k, v) in self.values.iter().enumerate() {
            let w = if k == 0 || k == n - 1 { half } else { T::one() };
            acc += w * v.norm_sqr();
        }
        acc * self.h
    }

    fn same_grid(&self, other: &Self, tol: T) -> bool {
        self.values.len() == other.values.len()
            && rabs(self.x0 - other.x0) <= tol
            && rabs(self.h - other.h) <= tol
    }
}

/// Outcome density of the meter position on the convolution grid
/// `y_m = 2 x0 + m h`.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeDistribution<T: Scalar> {
    y0: T,
    h: T,
    density: Vec<T>,
}

impl<T: Scalar> OutcomeDistribution<T> {
    pub fn y0(&self) -> T {
        self.y0
    }

    pub fn spacing(&self) -> T {
        self.h
    }

    pub fn density(&self) -> &[T] {
        &self.density
    }

    fn y_at(&self, m: usize) -> T {
        self.y0 + self.h * T::from_usize(m).expect("grid index fits the scalar")
    }

    fn trapezoid_sum(&self, f: impl Fn(usize, T) -> T) -> T {
        let half = real::<T>(0.5);
        let n = self.density.len();
        let mut acc = T::zero();
        for (m, p) in self.density.iter().enumerate() {
            let w = if m == 0 || m == n - 1 { half } else { T::one() };
            acc += w * f(m, *p);
        }
        acc * self.h
    }

    /// Total probability over the full outcome grid.
    pub fn total(&self) -> T {
        self.trapezoid_sum(|_, p| p)
    }

    /// Mean of the outcome under the trapezoid measure.
    pub fn mean(&self) -> T {
        self.trapezoid_sum(|m, p| p * self.y_at(m))
    }

    /// Variance of the outcome under the trapezoid measure.
    pub fn variance(&self) -> T {
        let mu = self.mean();
        self.trapezoid_sum(|m, p| {
            let d = self.y_at(m) - mu;
            p * d * d
        })
    }

    /// Probability of the interval `(a, b]`; `None` bounds are unbounded.
    /// The piecewise-linear density is integrated exactly, including the
    /// fractional cells at the interval ends.
    pub fn probability(&self, a: Option<T>, b: Option<T>) -> T {
        let fb = match b {
            Some(x) => self.cumulative(x),
            None => self.cumulative(self.y_at(self.density.len() - 1)),
        };
        let fa = match a {
            Some(x) => self.cumulative(x),
            None => T::zero(),
        };
        fb - fa
    }

    /// Trapezoid integral of the density from the grid start to `t`.
    fn cumulative(&self, t: T) -> T {
        let n = self.density.len();
        let y_end = self.y_at(n - 1);
        if t <= self.y0 {
            return T::zero();
        }
        let clamped = if t > y_end { y_end } else { t };
        let offset = ((clamped - self.y0) / self.h).to_f64().unwrap_or(0.0);
        let mut cell = offset.floor() as usize;
        if cell >= n - 1 {
            cell = n - 2;
        }
        // fp-edge correction so that y_cell <= t holds
        while cell > 0 && self.y_at(cell) > clamped {
            cell -= 1;
        }
        while cell < n - 2 && self.y_at(cell + 1) < clamped {
            cell += 1;
        }
        let half = real::<T>(0.5);
        let mut acc = T::zero();
        for m in 0..cell {
            acc += half * (self.density[m] + self.density[m + 1]) * self.h;
        }
        let s = clamped - self.y_at(cell);
        let slope = (self.density[cell + 1] - self.density[cell]) / self.h;
        let p_t = self.density[cell] + slope * s;
        acc + half * (self.density[cell] + p_t) * s
    }
}

/// Outcome distribution of the standard model's meter from the propagated
/// kernel: `p(y) = integral |psi(x)|^2 |xi(y - x)|^2 dx`, evaluated as a
/// discrete convolution on the shared grid (trapezoid weights in x).
pub fn outcome_distribution<T: Scalar>(
    psi: &GridFunction<T>,
    xi: &GridFunction<T>,
) -> Result<OutcomeDistribution<T>> {
    let tol = Tolerances::<T>::default();
    if !psi.same_grid(xi, tol.flag) {
        return Err(Error::GridMismatch);
    }
    for f in [psi, xi] {
        let norm_sq = f.l2_norm_sq();
        if rabs(norm_sq - T::one()) > tol.grid_norm {
            return Err(Error::GridNotNormalized {
                norm_sq: norm_sq.to_f64().unwrap_or(f64::NAN),
                tol: tol.grid_norm.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    let n = psi.len();
    let half = real::<T>(0.5);
    let psi_sq: Vec<T> = psi.values.iter().map(|v| v.norm_sqr()).collect();
    let xi_sq: Vec<T> = xi.values.iter().map(|v| v.norm_sqr()).collect();
    let mut density = vec![T::zero(); 2 * n - 1];
    for (m, slot) in density.iter_mut().enumerate() {
        let lo = m.saturating_sub(n - 1);
        let hi = if m < n { m } else { n - 1 };
        let mut acc = T::zero();
        for i in lo..=hi {
            let w = if i == 0 || i == n - 1 { half } else { T::one() };
            acc += w * psi_sq[i] * xi_sq[m - i];
        }
        *slot = acc * psi.h;
    }
    Ok(OutcomeDistribution { y0: psi.x0 + psi.x0, h: psi.h, density })
}

/// Probability that the meter outcome falls in `(a, b]`, from grid
/// quadrature of the outcome kernel.
pub fn outcome_probability<T: Scalar>(
    psi: &GridFunction<T>,
    xi: &GridFunction<T>,
    a: Option<T>,
    b: Option<T>,
) -> Result<T> {
    Ok(outcome_distribution(psi, xi)?.probability(a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn minimal_state(width: f64) -> GaussianState4<f64> {
        GaussianState4::from_blocks(
            ModeMoments::minimal(width, 1.0),
            ModeMoments::minimal(width, 1.0),
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn von_neumann_rows_match_equations_of_motion() {
        let t = von_neumann_transfer::<f64>();
        assert_eq!(t.row(QBAR), RowVector4::new(1.0, 0.0, 1.0, 0.0));
        assert_eq!(t.row(P), RowVector4::new(0.0, 1.0, 0.0, -1.0));
        assert_eq!(t.row(Q), RowVector4::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!(t.row(PBAR), RowVector4::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(symplectic_defect(t.matrix()), 0.0);
    }

    #[test]
    fn ozawa_transfer_endpoints() {
        let t0 = ozawa_transfer::<f64>(0.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(t0.matrix()[(i, j)], want, epsilon = 1e-15);
            }
        }

        let t1 = ozawa_transfer::<f64>(1.0).unwrap();
        let m = t1.matrix();
        for (row, want) in [
            (Q, [1.0, 0.0, -1.0, 0.0]),
            (QBAR, [1.0, 0.0, 0.0, 0.0]),
            (P, [0.0, 0.0, 0.0, -1.0]),
            (PBAR, [0.0, 1.0, 0.0, 1.0]),
        ] {
            for j in 0..4 {
                assert_abs_diff_eq!(m[(row, j)], want[j], epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn ozawa_transfer_symplectic_along_sweep() {
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let t = ozawa_transfer::<f64>(s).unwrap();
            assert!(symplectic_defect(t.matrix()) < 1e-12);
        }
    }

    #[test]
    fn ozawa_transfer_rejects_out_of_range() {
        assert!(matches!(ozawa_transfer::<f64>(1.5), Err(Error::TauOutOfRange { .. })));
        assert!(matches!(ozawa_transfer::<f64>(-0.1), Err(Error::TauOutOfRange { .. })));
    }

    #[test]
    fn exponential_matches_closed_forms() {
        // nilpotent generator: exact affine flow
        for k in 0..=10 {
            let s = k as f64 / 10.0;
            let num = matrix_exponential_check(CvModelKind::VonNeumann, s).unwrap();
            let row = num.row(QBAR);
            assert_abs_diff_eq!(row[Q], s, epsilon = 1e-12);
            assert_abs_diff_eq!(row[QBAR], 1.0, epsilon = 1e-12);
            let closed = transfer_at(CvModelKind::VonNeumann, s).unwrap();
            let diff = num.matrix() - closed.matrix();
            assert!(diff.iter().all(|x| x.abs() < 1e-12));
        }
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let num = matrix_exponential_check(CvModelKind::Ozawa1988, s).unwrap();
            let closed = ozawa_transfer::<f64>(s).unwrap();
            let diff = num.matrix() - closed.matrix();
            assert!(diff.iter().all(|x| x.abs() < 1e-9));
            assert!(symplectic_defect(num.matrix()) < 1e-12);
        }
    }

    #[test]
    fn rms_error_examples() {
        // error-free model: exact operator identity
        let state = minimal_state(0.7);
        assert_eq!(rms_error_q(CvModelKind::Ozawa1988, &state), 0.0);

        // standard model: probe position spread
        let state = GaussianState4::from_blocks(
            ModeMoments::minimal(1.0, 1.0),
            ModeMoments::minimal(0.5, 1.0),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(rms_error_q(CvModelKind::VonNeumann, &state), 0.5, epsilon = 1e-12);

        // biased narrow probe: the mean dominates as the width shrinks
        let probe = ModeMoments::new(1.0, 0.0, 1e-8, 1.0 / (4.0 * 1e-8), 0.0);
        let state =
            GaussianState4::from_blocks(ModeMoments::minimal(1.0, 1.0), probe, 1.0).unwrap();
        assert_abs_diff_eq!(rms_error_q(CvModelKind::VonNeumann, &state), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn rms_disturbance_examples() {
        let state = GaussianState4::from_blocks(
            ModeMoments::minimal(1.0, 1.0),
            ModeMoments::minimal(0.5, 1.0),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(
            rms_disturbance_p(CvModelKind::VonNeumann, &state),
            1.0,
            epsilon = 1e-12
        );

        let both_unit = GaussianState4::from_blocks(
            ModeMoments::zero_mean(1.0, 1.0),
            ModeMoments::zero_mean(1.0, 1.0),
            1.0,
        )
        .unwrap();
        assert_abs_diff_eq!(
            rms_disturbance_p(CvModelKind::Ozawa1988, &both_unit),
            2.0f64.sqrt(),
            epsilon = 1e-12
        );

        // near momentum eigenstate: the disturbance vanishes as well
        let mut last = f64::INFINITY;
        for k in 0..=20 {
            let var_p = 2.0f64.powi(-k);
            let var_q = 1.0 / (4.0 * var_p);
            let mode = ModeMoments::zero_mean(var_q, var_p);
            let state = GaussianState4::from_blocks(mode, mode, 1.0).unwrap();
            let eta = rms_disturbance_p(CvModelKind::Ozawa1988, &state);
            assert_eq!(rms_error_q(CvModelKind::Ozawa1988, &state), 0.0);
            assert!(eta < last);
            last = eta;
        }
        assert!(last < 2e-3);
    }

    #[test]
    fn product_reports() {
        let state = minimal_state(0.5);
        let report = edr_product_report(CvModelKind::VonNeumann, &state);
        assert_abs_diff_eq!(report.lhs_heisenberg, 0.5, epsilon = 1e-12);
        assert!(report.heisenberg_satisfied);
        assert!(report.check("heisenberg-edr-product").unwrap().satisfied);

        let report = edr_product_report(CvModelKind::Ozawa1988, &state);
        assert_eq!(report.epsilon_a, 0.0);
        assert_eq!(report.lhs_heisenberg, 0.0);
        assert!(!report.heisenberg_satisfied);
        // the correlation term carries the corrected relation
        assert_abs_diff_eq!(report.correlation_term, 1.0, epsilon = 1e-15);
        assert!(report.universal_satisfied);
        assert!(report.ozawa_satisfied);

        let wide = GaussianState4::from_blocks(
            ModeMoments::minimal(1.0, 1.0),
            ModeMoments::zero_mean(1.0, 1.0),
            1.0,
        )
        .unwrap();
        let report = edr_product_report(CvModelKind::VonNeumann, &wide);
        assert_abs_diff_eq!(report.lhs_heisenberg, 1.0, epsilon = 1e-12);
        assert!(report.heisenberg_satisfied);
    }

    #[test]
    fn kennard_examples() {
        let r = kennard_check(0.5, 0.5, 1.0);
        let c = r.check("kennard").unwrap();
        assert_abs_diff_eq!(c.lhs, 0.5, epsilon = 1e-12);
        assert!(c.satisfied);

        let r = kennard_check(1.0, 1.0, 1.0);
        assert!(r.check("kennard").unwrap().satisfied);

        // forbidden spreads are rejected at state construction
        let err = GaussianState4::from_blocks(
            ModeMoments::zero_mean(0.1, 0.1),
            ModeMoments::minimal(1.0, 1.0),
            1.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::RobertsonViolated { .. }));
    }

    #[test]
    fn arthurs_kelly_examples() {
        let state = minimal_state(2.0f64.sqrt() / 2.0); // all variances 0.5
        let r = arthurs_kelly_check(&state).unwrap();
        let meter = r.check("arthurs-kelly-meter-spread").unwrap();
        assert_abs_diff_eq!(meter.lhs, 1.0, epsilon = 1e-12);
        let tradeoff = r.check("error-tradeoff").unwrap();
        assert_abs_diff_eq!(tradeoff.lhs, 0.5, epsilon = 1e-12);

        let squeezed = GaussianState4::from_blocks(
            ModeMoments::zero_mean(0.1, 2.5),
            ModeMoments::minimal(2.0f64.sqrt() / 2.0, 1.0),
            1.0,
        )
        .unwrap();
        let r = arthurs_kelly_check(&squeezed).unwrap();
        let meter = r.check("arthurs-kelly-meter-spread").unwrap();
        assert_abs_diff_eq!(meter.lhs, (0.6f64 * 3.0).sqrt(), epsilon = 1e-12);
        assert!(meter.satisfied);

        let biased = GaussianState4::from_blocks(
            ModeMoments::minimal(1.0, 1.0),
            ModeMoments::new(0.3, 0.0, 1.0, 1.0, 0.0),
            1.0,
        )
        .unwrap();
        assert!(matches!(arthurs_kelly_check(&biased), Err(Error::BiasedProbe { .. })));
    }

    #[test]
    fn outcome_distribution_examples() {
        let n = 1024;
        let psi = GridFunction::gaussian(0.0, 12.0, n, 0.0, 1.0);
        let xi = GridFunction::gaussian(0.0, 12.0, n, 0.0, 1.0);
        let dist = outcome_distribution(&psi, &xi).unwrap();

        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(dist.probability(None, None), 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(dist.probability(None, Some(0.0)), 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(dist.mean(), 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(dist.variance(), 2.0, epsilon = 1e-4);
    }

    #[test]
    fn outcome_distribution_narrow_probe_approaches_born() {
        let n = 2048;
        let psi = GridFunction::gaussian(0.0, 12.0, n, 0.3, 1.0);
        let xi = GridFunction::gaussian(0.0, 12.0, n, 0.0, 0.0025);
        let p = outcome_probability(&psi, &xi, Some(-1.0), Some(0.5)).unwrap();
        // Born probability of (-1, 0.5] for the object density N(0.3, 1)
        let born = normal_cdf(0.5 - 0.3) - normal_cdf(-1.0 - 0.3);
        assert_abs_diff_eq!(p, born, epsilon = 5e-3);
    }

    // standard normal CDF via a Taylor series (test-only oracle)
    fn normal_cdf(z: f64) -> f64 {
        let x = z / 2.0f64.sqrt();
        let mut term = x;
        let mut sum = 0.0;
        for k in 0..200 {
            sum += term / (2 * k + 1) as f64;
            term = term * (-x * x) / (k + 1) as f64;
            if term.abs() < 1e-18 {
                break;
            }
        }
        0.5 + sum / std::f64::consts::PI.sqrt()
    }

    #[test]
    fn outcome_distribution_rejects_bad_inputs() {
        let psi = GridFunction::gaussian(0.0, 12.0, 256, 0.0, 1.0);
        let other = GridFunction::gaussian(0.0, 10.0, 256, 0.0, 1.0);
        assert!(matches!(outcome_distribution(&psi, &other), Err(Error::GridMismatch)));

        let mut skewed = psi.clone();
        skewed.values.iter_mut().for_each(|v| *v *= Complex::new(1.1, 0.0));
        assert!(matches!(
            outcome_distribution(&psi, &skewed),
            Err(Error::GridNotNormalized { .. })
        ));
    }

    #[test]
    fn grid_moments_match_moment_engine() {
        // object N(0.4, 1), probe N(-0.1, 0.25): the meter reads Q + Qbar,
        // so the outcome mean and variance add.
        let n = 2048;
        let psi = GridFunction::gaussian(0.0, 14.0, n, 0.4, 1.0);
        let xi = GridFunction::gaussian(0.0, 14.0, n, -0.1, 0.25);
        let dist = outcome_distribution(&psi, &xi).unwrap();

        let state = GaussianState4::from_blocks(
            ModeMoments::new(0.4, 0.0, 1.0, 0.25, 0.0),
            ModeMoments::new(-0.1, 0.0, 0.25, 1.0, 0.0),
            1.0,
        )
        .unwrap();
        let transfer = von_neumann_transfer::<f64>();
        let meter_row = transfer.row(QBAR);
        assert_abs_diff_eq!(dist.mean(), state.linear_mean(&meter_row), epsilon = 1e-4);
        assert_abs_diff_eq!(dist.variance(), state.linear_variance(&meter_row), epsilon = 1e-4);
        assert_abs_diff_eq!(dist.total(), 1.0, epsilon = 1e-6);
    }

    #[test]
    fn canonical_quadruple_validation() {
        assert!(CanonicalQuadruple::new(0.0).is_err());
        let q = CanonicalQuadruple::new(2.0).unwrap();
        assert_eq!(q.hbar(), 2.0);
        let j = CanonicalQuadruple::<f64>::symplectic_form();
        assert_eq!(j[(Q, P)], 1.0);
        assert_eq!(j[(PBAR, QBAR)], -1.0);
    }

    #[test]
    fn cv_model_coupling() {
        let m = CvModel::new(CvModelKind::VonNeumann, 4.0).unwrap();
        assert_eq!(m.coupling() * m.interaction_time(), 1.0);
        assert!(CvModel::<f64>::new(CvModelKind::Ozawa1988, 0.0).is_err());
    }
}
