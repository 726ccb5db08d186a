//! Seeded random generators for the property and fuzz suites: Haar-random
//! unitaries, Gaussian Hermitian ensembles, Wishart density states, random
//! measuring processes and random valid Gaussian states.
//!
//! Everything is driven by an explicit RNG so identical seeds reproduce
//! identical instances across runs and thread layouts.

use nalgebra::ComplexField;
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::gaussian::{GaussianState4, ModeMoments};
use crate::linalg::{CMatrix, CVector, DensityState, HermitianOperator, UnitaryOperator};
use crate::measurement::MeasuringProcess;
use crate::scalar::{cx, real, Scalar};

/// Standard complex Gaussian entry.
pub fn complex_normal<T: Scalar>(rng: &mut impl Rng) -> Complex<T> {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(real(re), real(im))
}

/// Ginibre matrix: i.i.d. standard complex Gaussian entries.
pub fn ginibre<T: Scalar>(dim: usize, rng: &mut impl Rng) -> CMatrix<T> {
    CMatrix::from_fn(dim, dim, |_, _| complex_normal(rng))
}

/// Random Hermitian matrix from the Gaussian ensemble, `(G + G†)/2`.
pub fn random_hermitian<T: Scalar>(dim: usize, rng: &mut impl Rng) -> HermitianOperator<T> {
    let g = ginibre::<T>(dim, rng);
    let h = (&g + g.adjoint()) * cx(real::<T>(0.5));
    HermitianOperator::new(h).expect("symmetrized matrix is Hermitian")
}

/// Haar-random unitary via QR of a Ginibre matrix with the phase fixed so
/// the R diagonal is positive.
pub fn random_unitary<T: Scalar>(dim: usize, rng: &mut impl Rng) -> UnitaryOperator<T> {
    let g = ginibre::<T>(dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for k in 0..dim {
        let d = r[(k, k)];
        let m = d.modulus();
        let phase = if m > T::zero() { d / cx(m) } else { Complex::new(T::one(), T::zero()) };
        let col = q.column(k) * phase.conj();
        q.set_column(k, &col);
    }
    UnitaryOperator::new(q).expect("orthonormalized matrix is unitary")
}

/// Random pure state: normalized complex Gaussian vector.
pub fn random_pure_vector<T: Scalar>(dim: usize, rng: &mut impl Rng) -> CVector<T> {
    loop {
        let v = CVector::from_fn(dim, |_, _| complex_normal::<T>(rng));
        let n = v.norm();
        if n > real(1e-6) {
            return v / cx(n);
        }
    }
}

/// Random full-rank density state from a Wishart construction `GG†/Tr`.
pub fn random_density<T: Scalar>(dim: usize, rng: &mut impl Rng) -> DensityState<T> {
    let g = ginibre::<T>(dim, rng);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityState::new(w / cx(tr)).expect("normalized Wishart matrix is a state")
}

/// Random measuring process: Haar coupling, Gaussian meter, random pure
/// probe state.
pub fn random_measuring_process<T: Scalar>(
    sys_dim: usize,
    probe_dim: usize,
    rng: &mut impl Rng,
) -> MeasuringProcess<T> {
    let probe_state = random_pure_vector(probe_dim, rng);
    let coupling = random_unitary(sys_dim * probe_dim, rng);
    let meter = random_hermitian(probe_dim, rng);
    MeasuringProcess::new(sys_dim, probe_state, coupling, meter).expect("dimensions line up")
}

/// Random single-mode moments: rotated squeezed thermal covariance (purity
/// factor in [1, 3], squeezing |r| <= 1) with standard normal means.
pub fn random_mode<T: Scalar>(hbar: T, rng: &mut impl Rng) -> ModeMoments<T> {
    let u: f64 = rng.random_range(1.0..3.0);
    let r: f64 = rng.random_range(-1.0..1.0);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::PI);
    let mean_q: f64 = rng.sample(StandardNormal);
    let mean_p: f64 = rng.sample(StandardNormal);

    let half = real::<T>(0.5);
    let scale = half * hbar * real::<T>(u);
    let e_plus = real::<T>((2.0 * r).exp());
    let e_minus = real::<T>((-2.0 * r).exp());
    let (c, s) = (real::<T>(theta.cos()), real::<T>(theta.sin()));
    // R(theta) diag(e^{2r}, e^{-2r}) R(theta)^T, scaled to purity u
    let var_q = scale * (c * c * e_plus + s * s * e_minus);
    let var_p = scale * (s * s * e_plus + c * c * e_minus);
    let cov_qp = scale * c * s * (e_plus - e_minus);
    ModeMoments::new(real(mean_q), real(mean_p), var_q, var_p, cov_qp)
}

/// Zero-mean variant of [`random_mode`] for unbiased-probe scenarios.
pub fn random_zero_mean_mode<T: Scalar>(hbar: T, rng: &mut impl Rng) -> ModeMoments<T> {
    let mut mode = random_mode(hbar, rng);
    mode.mean_q = T::zero();
    mode.mean_p = T::zero();
    mode
}

/// Random valid Gaussian product state of object and probe.
pub fn random_gaussian_state<T: Scalar>(hbar: T, rng: &mut impl Rng) -> GaussianState4<T> {
    GaussianState4::from_blocks(random_mode(hbar, rng), random_mode(hbar, rng), hbar)
        .expect("squeezed thermal blocks satisfy the Robertson condition")
}
