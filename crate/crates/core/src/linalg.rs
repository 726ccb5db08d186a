//! Dense complex-matrix foundation: Hermitian operators, density states,
//! unitaries, tensor products, spectral decompositions and expectation
//! values.
//!
//! Everything downstream (measuring processes, inequality evaluators,
//! estimators) is built on the handful of operations in this module. All
//! types are immutable after construction and all operations are pure.

use nalgebra::{ComplexField, DMatrix, DVector};
use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{cx, rabs, real, rmax, Scalar};
use crate::tolerances::Tolerances;

pub type CMatrix<T> = DMatrix<Complex<T>>;
pub type CVector<T> = DVector<Complex<T>>;

/// Largest entry modulus of `m`.
pub fn max_abs<T: Scalar>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, c| rmax(acc, c.modulus()))
}

/// Largest deviation of `m` from its own adjoint.
pub fn max_asymmetry<T: Scalar>(m: &CMatrix<T>) -> T {
    let adj = m.adjoint();
    max_abs(&(m - adj))
}

/// Spectral norm (largest singular value).
pub fn spectral_norm<T: Scalar>(m: &CMatrix<T>) -> T {
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(T::zero(), |acc, s| rmax(acc, *s))
}

/// Commutator `[a, b] = ab - ba`.
pub fn commutator<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Kronecker product with a-major block ordering:
/// entry `((i*db + k), (j*db + l)) = a[i,j] * b[k,l]`.
pub fn tensor<T: Scalar>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

/// `Tr[op * state]`.
pub fn trace_product<T: Scalar>(op: &CMatrix<T>, state: &CMatrix<T>) -> Complex<T> {
    // Tr[AB] = sum_ij A_ij B_ji, without forming the product.
    let (n, _) = op.shape();
    let mut acc = Complex::new(T::zero(), T::zero());
    for i in 0..n {
        for j in 0..n {
            acc += op[(i, j)] * state[(j, i)];
        }
    }
    acc
}

/// Identity matrix of the given dimension.
pub fn identity<T: Scalar>(dim: usize) -> CMatrix<T> {
    CMatrix::identity(dim, dim)
}

/// Computational basis vector `|k>` in the given dimension.
pub fn basis_vector<T: Scalar>(dim: usize, k: usize) -> CVector<T> {
    let mut v = CVector::zeros(dim);
    v[k] = Complex::new(T::one(), T::zero());
    v
}

/// Normalized ket from complex entries.
pub fn ket<T: Scalar>(entries: &[Complex<T>]) -> CVector<T> {
    let v = CVector::from_column_slice(entries);
    let n = v.norm();
    v / cx(n)
}

/// Projector `|v><v|`.
pub fn outer<T: Scalar>(v: &CVector<T>) -> CMatrix<T> {
    v * v.adjoint()
}

fn pauli<T: Scalar>(entries: [[Complex<T>; 2]; 2]) -> HermitianOperator<T> {
    let m = CMatrix::from_row_slice(2, 2, &[entries[0][0], entries[0][1], entries[1][0], entries[1][1]]);
    HermitianOperator::new(m).expect("pauli matrices are Hermitian")
}

pub fn pauli_x<T: Scalar>() -> HermitianOperator<T> {
    let o = Complex::new(T::zero(), T::zero());
    let l = Complex::new(T::one(), T::zero());
    pauli([[o, l], [l, o]])
}

pub fn pauli_y<T: Scalar>() -> HermitianOperator<T> {
    let o = Complex::new(T::zero(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    pauli([[o, -i], [i, o]])
}

pub fn pauli_z<T: Scalar>() -> HermitianOperator<T> {
    let o = Complex::new(T::zero(), T::zero());
    let l = Complex::new(T::one(), T::zero());
    pauli([[l, o], [o, -l]])
}

/// An observable: a square complex matrix equal to its own adjoint within
/// the configured tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator<T: Scalar> {
    mat: CMatrix<T>,
}

impl<T: Scalar> HermitianOperator<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: CMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let asym = max_asymmetry(&mat);
        if asym > tol.hermit {
            return Err(Error::NotHermitian {
                max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
                tol: tol.hermit.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mat })
    }

    /// Builds the observable from real entries (row-major).
    pub fn from_real_rows(dim: usize, rows: &[f64]) -> Result<Self> {
        let entries: Vec<Complex<T>> = rows.iter().map(|&x| Complex::new(real(x), T::zero())).collect();
        Self::new(CMatrix::from_row_slice(dim, dim, &entries))
    }

    /// Diagonal observable from real eigenvalues.
    pub fn from_diagonal(diag: &[T]) -> Self {
        let dim = diag.len();
        let mut m = CMatrix::zeros(dim, dim);
        for (k, &x) in diag.iter().enumerate() {
            m[(k, k)] = cx(x);
        }
        Self { mat: m }
    }

    pub fn zero(dim: usize) -> Self {
        Self { mat: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMatrix<T> {
        self.mat
    }

    /// Spectral decomposition with eigenvalues merged at the degeneracy
    /// tolerance, one projector per distinct eigenvalue.
    pub fn spectral_decompose(&self) -> SpectralDecomposition<T> {
        spectral_decompose_with(self, &Tolerances::default())
    }
}

/// A state: Hermitian, unit trace, positive semidefinite within tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState<T: Scalar> {
    mat: CMatrix<T>,
}

impl<T: Scalar> DensityState<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: CMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let asym = max_asymmetry(&mat);
        if asym > tol.hermit {
            return Err(Error::NotHermitian {
                max_asymmetry: asym.to_f64().unwrap_or(f64::NAN),
                tol: tol.hermit.to_f64().unwrap_or(f64::NAN),
            });
        }
        let tr = mat.trace();
        if rabs(tr.re - T::one()) > tol.trace || rabs(tr.im) > tol.trace {
            return Err(Error::TraceNotOne {
                trace: tr.re.to_f64().unwrap_or(f64::NAN),
                tol: tol.trace.to_f64().unwrap_or(f64::NAN),
            });
        }
        let hermitized = (&mat + mat.adjoint()) * cx(real::<T>(0.5));
        let eigs = hermitized.symmetric_eigen().eigenvalues;
        let min_eig = eigs.iter().fold(T::zero(), |acc, &x| if x < acc { x } else { acc });
        if min_eig < -tol.psd {
            return Err(Error::NotPositive {
                eigenvalue: min_eig.to_f64().unwrap_or(f64::NAN),
                tol: tol.psd.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mat })
    }

    /// Pure state `|v><v|` from a (not necessarily normalized) ket.
    pub fn pure(v: &CVector<T>) -> Self {
        let n = v.norm();
        let unit = v / cx(n);
        Self { mat: outer(&unit) }
    }

    /// Maximally mixed state `I/d`.
    pub fn maximally_mixed(dim: usize) -> Self {
        let d = T::from_usize(dim).expect("dimension fits the scalar");
        Self { mat: identity::<T>(dim) * cx(T::one() / d) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    /// Eigenvectors with eigenvalue above the support threshold.
    pub fn support_vectors(&self, tol: &Tolerances<T>) -> Vec<CVector<T>> {
        let eig = self.mat.clone().symmetric_eigen();
        let mut out = Vec::new();
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > tol.support_eig {
                out.push(eig.eigenvectors.column(k).into_owned());
            }
        }
        out
    }

    /// Projector onto the support subspace.
    pub fn support_projector(&self, tol: &Tolerances<T>) -> CMatrix<T> {
        let vs = self.support_vectors(tol);
        let mut p = CMatrix::zeros(self.dim(), self.dim());
        for v in &vs {
            p += outer(v);
        }
        p
    }
}

/// Unitary evolution of a composite system.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryOperator<T: Scalar> {
    mat: CMatrix<T>,
}

impl<T: Scalar> UnitaryOperator<T> {
    pub fn new(mat: CMatrix<T>) -> Result<Self> {
        Self::with_tolerances(mat, &Tolerances::default())
    }

    pub fn with_tolerances(mat: CMatrix<T>, tol: &Tolerances<T>) -> Result<Self> {
        let dev = max_abs(&(mat.adjoint() * &mat - identity::<T>(mat.nrows())));
        if dev > tol.unitary {
            return Err(Error::NotUnitary {
                max_deviation: dev.to_f64().unwrap_or(f64::NAN),
                tol: tol.unitary.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { mat })
    }

    pub fn identity(dim: usize) -> Self {
        Self { mat: identity(dim) }
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.mat
    }

    /// Heisenberg-picture conjugation `U† op U`.
    pub fn conjugate(&self, op: &CMatrix<T>) -> CMatrix<T> {
        self.mat.adjoint() * op * &self.mat
    }
}

/// Spectral measure of an observable: ascending distinct eigenvalues and the
/// orthogonal projectors onto their eigenspaces.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Scalar> {
    pub eigenvalues: Vec<T>,
    pub projectors: Vec<CMatrix<T>>,
}

impl<T: Scalar> SpectralDecomposition<T> {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.projectors.first().map_or(0, |p| p.nrows())
    }

    /// `sum_k lambda_k P_k`.
    pub fn reconstruct(&self) -> CMatrix<T> {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (lam, p) in self.eigenvalues.iter().zip(&self.projectors) {
            m += p * cx(*lam);
        }
        m
    }

    /// Born distribution of the outcomes in the given (matrix) state.
    pub fn probabilities(&self, state: &CMatrix<T>) -> Vec<T> {
        self.projectors.iter().map(|p| trace_product(p, state).re).collect()
    }

    /// Checks idempotency, mutual orthogonality, completeness and
    /// reconstruction against `op`, returning the largest violation.
    pub fn max_violation(&self, op: &CMatrix<T>) -> T {
        let dim = self.dim();
        let mut worst = T::zero();
        for (i, p) in self.projectors.iter().enumerate() {
            worst = rmax(worst, max_abs(&(p * p - p)));
            for q in self.projectors.iter().skip(i + 1) {
                worst = rmax(worst, max_abs(&(p * q)));
            }
        }
        let sum = self
            .projectors
            .iter()
            .fold(CMatrix::zeros(dim, dim), |acc, p| acc + p);
        worst = rmax(worst, max_abs(&(sum - identity::<T>(dim))));
        worst = rmax(worst, max_abs(&(self.reconstruct() - op)));
        worst
    }
}

/// Spectral decomposition of a Hermitian operator, merging eigenvalues
/// closer than the degeneracy tolerance into a single projector.
pub fn spectral_decompose<T: Scalar>(op: &HermitianOperator<T>) -> SpectralDecomposition<T> {
    spectral_decompose_with(op, &Tolerances::default())
}

pub fn spectral_decompose_with<T: Scalar>(
    op: &HermitianOperator<T>,
    tol: &Tolerances<T>,
) -> SpectralDecomposition<T> {
    let eig = op.matrix().clone().symmetric_eigen();
    let dim = op.dim();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("eigenvalues of a Hermitian matrix are comparable")
    });

    let mut eigenvalues: Vec<T> = Vec::new();
    let mut projectors: Vec<CMatrix<T>> = Vec::new();
    let mut members: Vec<usize> = Vec::new();
    let mut group_start = T::zero();

    let flush = |members: &mut Vec<usize>,
                 eigenvalues: &mut Vec<T>,
                 projectors: &mut Vec<CMatrix<T>>| {
        if members.is_empty() {
            return;
        }
        let inv = T::one() / T::from_usize(members.len()).expect("group size fits the scalar");
        let mut mean = T::zero();
        let mut proj = CMatrix::zeros(dim, dim);
        for &k in members.iter() {
            mean += eig.eigenvalues[k] * inv;
            let v = eig.eigenvectors.column(k);
            proj += v * v.adjoint();
        }
        eigenvalues.push(mean);
        projectors.push(proj);
        members.clear();
    };

    for &k in &order {
        let lam = eig.eigenvalues[k];
        if members.is_empty() || lam - group_start <= tol.degeneracy {
            if members.is_empty() {
                group_start = lam;
            }
            members.push(k);
        } else {
            flush(&mut members, &mut eigenvalues, &mut projectors);
            group_start = lam;
            members.push(k);
        }
    }
    flush(&mut members, &mut eigenvalues, &mut projectors);

    SpectralDecomposition { eigenvalues, projectors }
}

/// `Tr[op * state]`. The result is real (within tolerance) whenever `op` is
/// Hermitian.
pub fn expectation<T: Scalar>(op: &CMatrix<T>, state: &DensityState<T>) -> Result<Complex<T>> {
    if op.nrows() != state.dim() {
        return Err(Error::DimensionMismatch { left: op.nrows(), right: state.dim() });
    }
    Ok(trace_product(op, state.matrix()))
}

/// Real expectation value of a Hermitian observable.
pub fn real_expectation<T: Scalar>(op: &HermitianOperator<T>, state: &DensityState<T>) -> Result<T> {
    Ok(expectation(op.matrix(), state)?.re)
}

/// Standard deviation `sigma(A) = sqrt(<A^2> - <A>^2)` in the given state.
///
/// A raw variance within the clamp tolerance below zero is truncated to
/// zero; anything lower signals a corrupted input and errors out.
pub fn std_dev<T: Scalar>(op: &HermitianOperator<T>, state: &DensityState<T>) -> Result<T> {
    std_dev_with(op, state, &Tolerances::default())
}

pub fn std_dev_with<T: Scalar>(
    op: &HermitianOperator<T>,
    state: &DensityState<T>,
    tol: &Tolerances<T>,
) -> Result<T> {
    let sq = op.matrix() * op.matrix();
    let mean_sq = expectation(&sq, state)?.re;
    let mean = expectation(op.matrix(), state)?.re;
    let var = mean_sq - mean * mean;
    clamped_sqrt(var, tol)
}

/// `sqrt(max(0, x))`, erroring when `x` is below the clamp tolerance.
pub fn clamped_sqrt<T: Scalar>(x: T, tol: &Tolerances<T>) -> Result<T> {
    if x < -tol.clamp {
        return Err(Error::NegativeVariance {
            value: x.to_f64().unwrap_or(f64::NAN),
            tol: tol.clamp.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(if x > T::zero() { x.sqrt() } else { T::zero() })
}

/// Probe-side expectation of a composite operator: the system operator `K`
/// with `<phi|K|phi> = <phi (x) xi| op |phi (x) xi>` for every system vector.
pub fn partial_probe_expectation<T: Scalar>(
    composite_op: &CMatrix<T>,
    probe_state: &CVector<T>,
) -> Result<CMatrix<T>> {
    let total = composite_op.nrows();
    let probe_dim = probe_state.len();
    if probe_dim == 0 || !total.is_multiple_of(probe_dim) {
        return Err(Error::NonFactorableDimension { composite: total, system: 0 });
    }
    let sys_dim = total / probe_dim;
    let norm = probe_state.norm();
    let tol = Tolerances::<T>::default();
    if rabs(norm - T::one()) > tol.unit_norm {
        return Err(Error::NotUnitNorm {
            norm: norm.to_f64().unwrap_or(f64::NAN),
            tol: tol.unit_norm.to_f64().unwrap_or(f64::NAN),
        });
    }
    let mut out = CMatrix::zeros(sys_dim, sys_dim);
    for i in 0..sys_dim {
        for j in 0..sys_dim {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in 0..probe_dim {
                for l in 0..probe_dim {
                    acc += probe_state[k].conj()
                        * probe_state[l]
                        * composite_op[(i * probe_dim + k, j * probe_dim + l)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}
