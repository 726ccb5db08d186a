//! Randomized property suites tying the modules together: spectral
//! round-trips, the weak-joint expansion identity, the four-way equivalence
//! of the precision conditions, the theorem inequalities and the estimator
//! equivalences, all on seeded random instances.

use edrlab_core::edr::{heisenberg_edr, ozawa_edr, universal_edr};
use edrlab_core::estimators::{
    disturbance_weak_joint, measurement_weak_joint, output_moments, three_state_disturbance,
    three_state_error, three_state_error_shifted, weak_method_error,
};
use edrlab_core::gaussian::{
    edr_product_report, rms_error_q, symplectic_defect, transfer_at, CvModelKind,
    matrix_exponential_check,
};
use edrlab_core::linalg::{
    expectation, identity, max_abs, spectral_decompose, tensor, trace_product,
};
use edrlab_core::measurement::{
    cyclic_subspace, error_quadratic_form, is_precise, locally_uniform_error,
    locally_uniform_sup_oracle, rms_disturbance, rms_error, rms_error_on_vector,
    theorem1_conditions,
};
use edrlab_core::random::{
    random_density, random_gaussian_state, random_hermitian, random_measuring_process,
};
use edrlab_core::{DensityState64, HermitianOperator64};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn random_dims(rng: &mut impl Rng) -> (usize, usize) {
    (rng.random_range(2..=4), rng.random_range(2..=3))
}

#[test]
fn spectral_reconstruction_on_random_inputs() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..60 {
        let dim = rng.random_range(2..=8);
        let op = random_hermitian::<f64>(dim, &mut rng);
        let dec = spectral_decompose(&op);
        assert!(dec.max_violation(op.matrix()) < 1e-9, "dim {dim}");
    }
}

#[test]
fn projector_expectations_stay_in_range() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..40 {
        let dim = rng.random_range(2..=6);
        let op = random_hermitian::<f64>(dim, &mut rng);
        let rho = random_density::<f64>(dim, &mut rng);
        for p in &spectral_decompose(&op).projectors {
            let val = expectation(p, &rho).unwrap();
            assert!(val.re >= -1e-10 && val.re <= 1.0 + 1e-10);
            assert!(val.im.abs() < 1e-10);
        }
    }
}

#[test]
fn error_form_is_positive_semidefinite() {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    for _ in 0..30 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let k = error_quadratic_form(&mp, &a).unwrap();
        let h = HermitianOperator64::with_tolerances(
            k,
            &edrlab_core::Tolerances { hermit: 1e-8, ..Default::default() },
        )
        .unwrap();
        let dec = spectral_decompose(&h);
        assert!(dec.eigenvalues[0] >= -1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn tensor_of_hermitian_is_hermitian(seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_hermitian::<f64>(3, &mut rng);
        let b = random_hermitian::<f64>(2, &mut rng);
        let t = tensor(a.matrix(), b.matrix());
        prop_assert!(max_abs(&(t.adjoint() - &t)) < 1e-12);
    }

    #[test]
    fn tensor_block_ordering(i in 0usize..2, j in 0usize..2, k in 0usize..3, l in 0usize..3) {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let a = random_hermitian::<f64>(2, &mut rng);
        let b = random_hermitian::<f64>(3, &mut rng);
        let t = tensor(a.matrix(), b.matrix());
        let got = t[(i * 3 + k, j * 3 + l)];
        let want = a.matrix()[(i, j)] * b.matrix()[(k, l)];
        prop_assert!((got - want).norm() < 1e-14);
    }
}

#[test]
fn weak_joint_expansion_identity_on_random_models() {
    // epsilon(A, rho)^2 = sum (x-y)^2 Re mu_W(x, y), commuting or not
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for _ in 0..120 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        let eps = rms_error(&mp, &a, &rho).unwrap();
        let wjd = measurement_weak_joint(&mp, &a, &rho).unwrap();
        let est = weak_method_error(&wjd).unwrap();
        assert!(
            (est * est - eps * eps).abs() < 1e-9,
            "identity broke: {est} vs {eps}"
        );
    }
}

#[test]
fn theorem1_conditions_agree_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for k in 0..200 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        let conditions = theorem1_conditions(&mp, &a, &rho, 1000 + k).unwrap();
        assert!(conditions.all_agree(), "disagreement at instance {k}: {conditions:?}");
    }
}

#[test]
fn theorem_inequalities_hold_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    for k in 0..150 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let b = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        // the evaluators error out on a theorem violation
        let u = universal_edr(&mp, &a, &b, &rho)
            .unwrap_or_else(|e| panic!("universal relation failed at {k}: {e}"));
        let o = ozawa_edr(&mp, &a, &b, &rho)
            .unwrap_or_else(|e| panic!("three-term relation failed at {k}: {e}"));
        assert!(o.lhs_ozawa >= o.lhs_heisenberg - 1e-12);
        let h = heisenberg_edr(&mp, &a, &b, &rho).unwrap();
        assert!((h.lhs_heisenberg - u.lhs_heisenberg).abs() < 1e-12);
    }
}

#[test]
fn locally_uniform_error_dominates_samples_and_matches_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(107);
    for k in 0..25 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        let sup = locally_uniform_error(&mp, &a, &rho).unwrap();
        let k_form = error_quadratic_form(&mp, &a).unwrap();
        let cyc = cyclic_subspace(&a, &rho);
        for _ in 0..200 {
            let phi = cyc.random_unit_vector(&mut rng);
            assert!(rms_error_on_vector(&k_form, &phi) <= sup + 1e-9);
        }
        let oracle = locally_uniform_sup_oracle(&k_form, &cyc, 2000, 50 + k);
        assert!((sup - oracle).abs() < 1e-6, "sup {sup} oracle {oracle}");
        // the equivalence: zero locally uniform error iff precise
        let precise = is_precise(&mp, &a, &rho).unwrap().precise;
        assert_eq!(sup <= 1e-9, precise);
    }
}

#[test]
fn estimators_match_trace_formulas_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    for _ in 0..120 {
        let (sys, probe) = random_dims(&mut rng);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let b = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);

        let eps = rms_error(&mp, &a, &rho).unwrap();
        let eta = rms_disturbance(&mp, &b, &rho).unwrap();

        let moments = output_moments(&mp).unwrap();
        let eps_three = three_state_error(&moments, &a, &rho).unwrap();
        assert!((eps_three - eps).abs() < 1e-9, "three-state {eps_three} vs {eps}");

        let eta_three = three_state_disturbance(&mp, &b, &rho).unwrap();
        assert!((eta_three - eta).abs() < 1e-9, "three-state eta {eta_three} vs {eta}");

        let eps_weak = weak_method_error(&measurement_weak_joint(&mp, &a, &rho).unwrap()).unwrap();
        assert!((eps_weak - eps).abs() < 1e-9, "weak {eps_weak} vs {eps}");

        let eta_weak = weak_method_error(&disturbance_weak_joint(&mp, &b, &rho).unwrap()).unwrap();
        assert!((eta_weak - eta).abs() < 1e-9, "weak eta {eta_weak} vs {eta}");

        // shift covariance
        let shifted = three_state_error_shifted(&moments, &a, &rho, 1.3).unwrap();
        assert!((shifted - eps_three).abs() < 1e-9);
    }
}

#[test]
fn error_bound_holds_for_non_disturbing_processes() {
    // an idle apparatus never disturbs anything, so the error bound
    // epsilon(A) sigma(B) >= |<[A,B]>|/2 applies in every state
    use edrlab_core::edr::corollary_bounds;
    use edrlab_core::measurement::identity_process;
    let mut rng = ChaCha8Rng::seed_from_u64(112);
    for _ in 0..80 {
        let meter = random_hermitian::<f64>(2, &mut rng);
        let idle = identity_process(3, 2, meter).unwrap();
        let a = random_hermitian::<f64>(3, &mut rng);
        let b = random_hermitian::<f64>(3, &mut rng);
        let rho = random_density::<f64>(3, &mut rng);
        let r = corollary_bounds(&idle, &a, &b, &rho).unwrap();
        let eb = r.check("error-bound").expect("eta = 0 for every observable");
        assert!(eb.satisfied, "error bound failed: {} < {}", eb.lhs, eb.rhs);
    }
}

#[test]
fn gaussian_ensembles_respect_the_model_dichotomy() {
    let mut rng = ChaCha8Rng::seed_from_u64(109);
    for _ in 0..300 {
        let state = random_gaussian_state::<f64>(1.0, &mut rng);
        let vn = edr_product_report(CvModelKind::VonNeumann, &state);
        assert!(vn.lhs_heisenberg >= 0.5 - 1e-12);
        assert_eq!(rms_error_q(CvModelKind::Ozawa1988, &state), 0.0);
        let oz = edr_product_report(CvModelKind::Ozawa1988, &state);
        assert!(!oz.heisenberg_satisfied);
        assert!(oz.universal_satisfied && oz.ozawa_satisfied);
    }
}

#[test]
fn transfer_sweep_is_symplectic_and_matches_exponential() {
    for kind in [CvModelKind::VonNeumann, CvModelKind::Ozawa1988] {
        for k in 0..=100 {
            let s = k as f64 / 100.0;
            let closed = transfer_at(kind, s).unwrap();
            assert!(symplectic_defect(closed.matrix()) < 1e-10);
            let num = matrix_exponential_check(kind, s).unwrap();
            let diff = num.matrix() - closed.matrix();
            assert!(diff.iter().all(|x| x.abs() < 1e-9));
        }
    }
}

#[test]
fn sampling_error_shrinks_at_root_n_without_bias() {
    use edrlab_core::estimators::three_state_error_sampled;
    use edrlab_core::linalg::pauli_x;
    use edrlab_core::measurement::cnot_process;

    let mp = cnot_process::<f64>();
    let a = pauli_x::<f64>();
    let rho = DensityState64::pure(&edrlab_core::linalg::ket(&[
        num_complex::Complex::new(1.0, 0.0),
        num_complex::Complex::new(0.0, 1.0),
    ]));
    let exact_sq = {
        let e = edrlab_core::measurement::rms_error(&mp, &a, &rho).unwrap();
        e * e
    };

    let rms_dev = |shots: u64| -> f64 {
        let mut acc = 0.0;
        let seeds = 12;
        for k in 0..seeds {
            let est = three_state_error_sampled(&mp, &a, &rho, shots, 900 + k).unwrap();
            let d = est.raw_square - exact_sq;
            acc += d * d;
        }
        (acc / seeds as f64).sqrt()
    };

    // 16x the shots should shrink the deviation by about 4
    let coarse = rms_dev(2_000);
    let fine = rms_dev(32_000);
    let ratio = coarse / fine;
    assert!((2.0..8.0).contains(&ratio), "rate ratio {ratio} (coarse {coarse}, fine {fine})");

    // bias stays below the statistical error of the seed ensemble
    let seeds = 20;
    let mut mean_dev = 0.0;
    let mut mean_se = 0.0;
    for k in 0..seeds {
        let est = three_state_error_sampled(&mp, &a, &rho, 100_000, 300 + k).unwrap();
        mean_dev += est.raw_square - exact_sq;
        mean_se += est.std_error_square;
    }
    mean_dev /= seeds as f64;
    mean_se /= seeds as f64;
    assert!(
        mean_dev.abs() <= 5.0 * mean_se / (seeds as f64).sqrt(),
        "ensemble bias {mean_dev} vs se {mean_se}"
    );
}

#[test]
fn outcome_probabilities_stay_in_range_and_grow_with_the_interval() {
    use edrlab_core::gaussian::{outcome_distribution, GridFunction};
    let psi = GridFunction::gaussian(0.0, 12.0, 512, 0.2, 1.0);
    let xi = GridFunction::gaussian(0.0, 12.0, 512, -0.3, 0.5);
    let dist = outcome_distribution(&psi, &xi).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(113);
    for _ in 0..200 {
        let a: f64 = rng.random_range(-30.0..30.0);
        let b: f64 = rng.random_range(-30.0..30.0);
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let p = dist.probability(Some(lo), Some(hi));
        assert!((-1e-8..=1.0 + 1e-8).contains(&p), "P({lo},{hi}] = {p}");
        // widening the interval never loses mass
        let wider = dist.probability(Some(lo - 1.0), Some(hi + 1.0));
        assert!(wider >= p - 1e-12);
    }
}

#[test]
fn f32_instantiation_smoke() {
    // the whole stack is generic over the scalar; run one loose-tolerance
    // pass at reduced precision
    let tol = edrlab_core::Tolerances::<f32> {
        hermit: 1e-4,
        trace: 1e-4,
        psd: 1e-4,
        unit_norm: 1e-4,
        unitary: 1e-4,
        ..Default::default()
    };
    let one = num_complex::Complex::new(1.0f32, 0.0);
    let zero = num_complex::Complex::new(0.0f32, 0.0);
    let m = edrlab_core::linalg::CMatrix::<f32>::from_row_slice(2, 2, &[zero, one, one, zero]);
    let op = edrlab_core::linalg::HermitianOperator::with_tolerances(m, &tol).unwrap();
    let dec = spectral_decompose(&op);
    assert_eq!(dec.eigenvalues.len(), 2);
    assert!((dec.eigenvalues[0] + 1.0).abs() < 1e-5);

    let loose = edrlab_core::Tolerances::<f32> { symplectic: 1e-4, ..Default::default() };
    let t = edrlab_core::gaussian::transfer_at_with(CvModelKind::Ozawa1988, 0.5f32, &loose).unwrap();
    assert!(symplectic_defect(t.matrix()) < 1e-5);
}

#[test]
fn density_and_projector_sanity_under_proptest_seeds() {
    let mut rng = ChaCha8Rng::seed_from_u64(110);
    for _ in 0..20 {
        let rho = random_density::<f64>(4, &mut rng);
        let tr = trace_product(&identity::<f64>(4), rho.matrix());
        assert!((tr.re - 1.0).abs() < 1e-10);
    }
    let _ = DensityState64::maximally_mixed(3);
}
