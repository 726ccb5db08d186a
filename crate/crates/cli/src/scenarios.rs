//! Scenario implementations: each one reproduces a headline result as a
//! sweep table plus a list of asserted checks, deterministically from the
//! resolved configuration and seed.

use anyhow::{anyhow, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use edrlab_core::edr::{
    corollary_bounds, heisenberg_edr, locally_uniform_edr, ozawa_edr, universal_edr,
};
use edrlab_core::estimators::{
    disturbance_weak_joint, measurement_weak_joint, output_moments, three_state_disturbance,
    three_state_disturbance_sampled, three_state_error, three_state_error_sampled,
    weak_method_disturbance_sampled, weak_method_error, weak_method_error_sampled,
};
use edrlab_core::gaussian::{
    arthurs_kelly_check, edr_product_report, kennard_check, matrix_exponential_check,
    outcome_distribution, rms_disturbance_p, rms_error_q, symplectic_defect, transfer_at,
    von_neumann_transfer, CvModelKind, GaussianState4, GridFunction, ModeMoments, P, Q, QBAR,
};
use edrlab_core::linalg::{ket, pauli_x, pauli_z};
use edrlab_core::measurement::{
    cnot_process, constant_meter_process, cyclic_subspace, error_quadratic_form, is_non_disturbing, is_precise, locally_uniform_disturbance,
    locally_uniform_error, locally_uniform_sup_oracle, rms_disturbance, rms_error,
    theorem1_conditions,
};
use edrlab_core::random::{
    random_density, random_gaussian_state, random_hermitian, random_measuring_process,
    random_zero_mean_mode,
};
use edrlab_core::{DensityState64, C64};

use crate::config::Config;
use crate::output::{Cell, CheckRecord, ScenarioReport, Table};

pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub run: fn(&Config) -> Result<ScenarioReport>,
}

pub const SCENARIOS: &[Scenario] = &[
    Scenario {
        name: "von-neumann-edr",
        summary: "standard position-measurement model: product relation holds, with equality for minimal packets; includes the grid-quadrature cross-check",
        run: von_neumann_edr,
    },
    Scenario {
        name: "ozawa-violation",
        summary: "error-free model: epsilon(Q) = 0 exactly, the product relation fails, and the disturbance vanishes near a momentum eigenstate",
        run: ozawa_violation,
    },
    Scenario {
        name: "kennard",
        summary: "preparation uncertainty sigma(Q) sigma(P) >= hbar/2 with Gaussian equality",
        run: kennard,
    },
    Scenario {
        name: "arthurs-kelly",
        summary: "unbiased joint position-momentum measurement: meter-spread and error-tradeoff bounds",
        run: arthurs_kelly,
    },
    Scenario {
        name: "cnot-qubit",
        summary: "qubit copy process: product relation violated while the corrected and three-term relations hold, in exact arithmetic",
        run: cnot_qubit,
    },
    Scenario {
        name: "theorem1-fuzz",
        summary: "four-way equivalence of the precise-measurement conditions on random instances",
        run: theorem1_fuzz,
    },
    Scenario {
        name: "universal-edr-fuzz",
        summary: "the correlation-corrected, three-term and locally uniform relations as theorems on random instances",
        run: universal_edr_fuzz,
    },
    Scenario {
        name: "three-state-demo",
        summary: "three-state estimation of error and disturbance, exact and finite-shot",
        run: three_state_demo,
    },
    Scenario {
        name: "weak-method-demo",
        summary: "weak-measurement estimation of error and disturbance, exact and finite-shot",
        run: weak_method_demo,
    },
    Scenario {
        name: "ozawa-tau-sweep",
        summary: "transfer-matrix sweep of the error-free model against the matrix-exponential oracle",
        run: ozawa_tau_sweep,
    },
];

pub fn find(name: &str) -> Option<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name)
}

const DEFAULT_SEED: u64 = 17;
const DEFAULT_INSTANCES: u64 = 1000;
const DEFAULT_SHOTS: u64 = 100_000;
const DEFAULT_SAMPLE_SEEDS: u64 = 20;
const DEFAULT_GRID_POINTS: u64 = 2048;
const DEFAULT_TAU_POINTS: u64 = 101;

fn instance_seed(seed: u64, i: usize) -> u64 {
    seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Evaluates `n` independent sweep points, optionally on a thread pool;
/// results come back in index order either way.
fn run_indexed<T: Send>(jobs: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    if jobs <= 1 {
        Ok((0..n).map(f).collect())
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| anyhow!("building thread pool: {e}"))?;
        Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
    }
}

fn common_params(cfg: &Config) -> Result<(u64, usize, f64)> {
    let seed = cfg.get_u64("seed", DEFAULT_SEED)?;
    let jobs = cfg.get_usize("jobs", 1)?;
    let hbar = cfg.get_f64("hbar", 1.0)?;
    Ok((seed, jobs, hbar))
}

fn resolved(entries: &[(&str, String)]) -> Vec<(String, String)> {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn plus_i_state() -> DensityState64 {
    DensityState64::pure(&ket(&[C64::new(1.0, 0.0), C64::new(0.0, 1.0)]))
}

fn von_neumann_edr(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, jobs, hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;
    let widths = cfg.get_f64_list("widths", &[0.25, 0.5, 1.0, 2.0])?;
    let grid_points = cfg.get_u64("grid_points", DEFAULT_GRID_POINTS)? as usize;

    let mut table = Table::new(&[
        "width",
        "epsilon_q",
        "eta_p",
        "product",
        "bound",
        "heisenberg_satisfied",
    ]);
    let mut min_product = f64::INFINITY;
    let mut max_equality_gap: f64 = 0.0;
    for &w in &widths {
        let state =
            GaussianState4::from_blocks(ModeMoments::minimal(1.0, hbar), ModeMoments::minimal(w, hbar), hbar)
                .map_err(|e| anyhow!("state construction: {e}"))?;
        let report = edr_product_report(CvModelKind::VonNeumann, &state);
        min_product = min_product.min(report.lhs_heisenberg);
        max_equality_gap = max_equality_gap.max((report.lhs_heisenberg - 0.5 * hbar).abs());
        table.push(vec![
            Cell::Num(w),
            Cell::Num(report.epsilon_a),
            Cell::Num(report.eta_b),
            Cell::Num(report.lhs_heisenberg),
            Cell::Num(report.commutator_bound),
            Cell::Bool(report.heisenberg_satisfied),
        ]);
    }

    let ensemble_min = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let state = random_gaussian_state::<f64>(hbar, &mut rng);
        edr_product_report(CvModelKind::VonNeumann, &state).lhs_heisenberg
    })?
    .into_iter()
    .fold(f64::INFINITY, f64::min);

    // grid-quadrature cross-check of the outcome distribution
    let psi = GridFunction::gaussian(0.0, 14.0, grid_points, 0.4, 1.0);
    let xi = GridFunction::gaussian(0.0, 14.0, grid_points, -0.1, 0.25);
    let dist = outcome_distribution(&psi, &xi).map_err(|e| anyhow!("grid path: {e}"))?;
    let state = GaussianState4::from_blocks(
        ModeMoments::new(0.4, 0.0, 1.0, 0.25, 0.0),
        ModeMoments::new(-0.1, 0.0, 0.25, 1.0, 0.0),
        hbar,
    )
    .map_err(|e| anyhow!("state construction: {e}"))?;
    let meter_row = von_neumann_transfer::<f64>().row(QBAR);
    let want_mean = state.linear_mean(&meter_row);
    let want_var = state.linear_variance(&meter_row);

    let mut report = ScenarioReport::new(
        "von-neumann-edr",
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("hbar", hbar.to_string()),
            ("instances", instances.to_string()),
            ("grid_points", grid_points.to_string()),
        ]),
        table,
    );
    report.push_check(CheckRecord::at_least(
        "sweep-product-bound",
        min_product,
        0.5 * hbar,
        1e-12,
    ));
    report.push_check(
        CheckRecord::at_most("sweep-minimal-equality", max_equality_gap, 1e-12)
            .with_detail("minimal packets saturate the bound"),
    );
    report.push_check(CheckRecord::at_least(
        "ensemble-product-bound",
        ensemble_min,
        0.5 * hbar,
        1e-12,
    ));
    report.push_check(CheckRecord::equals("grid-mean", dist.mean(), want_mean, 1e-4));
    report.push_check(CheckRecord::equals("grid-variance", dist.variance(), want_var, 1e-4));
    report.push_check(CheckRecord::equals("grid-total-probability", dist.total(), 1.0, 1e-6));
    Ok(report)
}

fn ozawa_violation(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, jobs, hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;
    let sweep_len = cfg.get_u64("sweep_len", 21)? as usize;

    // near-momentum-eigenstate limit: both momentum variances shrink
    // geometrically while the state stays valid
    let mut table = Table::new(&[
        "k",
        "momentum_variance",
        "epsilon_q",
        "eta_p",
        "product",
        "heisenberg_satisfied",
        "ozawa_satisfied",
    ]);
    let mut last_eta = f64::INFINITY;
    let mut monotone = true;
    for k in 0..sweep_len {
        let var_p = 2.0f64.powi(-(k as i32));
        let var_q = hbar * hbar / (4.0 * var_p);
        let mode = ModeMoments::zero_mean(var_q, var_p);
        let state = GaussianState4::from_blocks(mode, mode, hbar)
            .map_err(|e| anyhow!("state construction: {e}"))?;
        let r = edr_product_report(CvModelKind::Ozawa1988, &state);
        if r.eta_b >= last_eta {
            monotone = false;
        }
        last_eta = r.eta_b;
        table.push(vec![
            Cell::Int(k as i64),
            Cell::Num(var_p),
            Cell::Num(r.epsilon_a),
            Cell::Num(r.eta_b),
            Cell::Num(r.lhs_heisenberg),
            Cell::Bool(r.heisenberg_satisfied),
            Cell::Bool(r.ozawa_satisfied),
        ]);
    }

    let ensemble = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let state = random_gaussian_state::<f64>(hbar, &mut rng);
        let r = edr_product_report(CvModelKind::Ozawa1988, &state);
        (r.epsilon_a, r.lhs_heisenberg, r.heisenberg_satisfied, r.ozawa_satisfied)
    })?;
    let max_eps = ensemble.iter().fold(0.0f64, |acc, e| acc.max(e.0));
    let max_product = ensemble.iter().fold(0.0f64, |acc, e| acc.max(e.1));
    let any_heisenberg = ensemble.iter().any(|e| e.2);
    let all_ozawa = ensemble.iter().all(|e| e.3);

    let mut report = ScenarioReport::new(
        "ozawa-violation",
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("hbar", hbar.to_string()),
            ("instances", instances.to_string()),
            ("sweep_len", sweep_len.to_string()),
        ]),
        table,
    );
    report.push_check(
        CheckRecord::at_most("ensemble-epsilon-zero", max_eps, 0.0)
            .with_detail("readout error is an exact operator identity"),
    );
    report.push_check(CheckRecord::at_most(
        "ensemble-product-below-bound",
        max_product,
        0.5 * hbar - 1e-12,
    ));
    report.push_check(CheckRecord::boolean("ensemble-heisenberg-violated", !any_heisenberg));
    report.push_check(CheckRecord::boolean("ensemble-three-term-satisfied", all_ozawa));
    report.push_check(CheckRecord::boolean("eta-monotone-decreasing", monotone));
    report.push_check(CheckRecord::at_most(
        "eta-near-eigenstate-limit",
        last_eta,
        2.0 * (2.0f64).sqrt() * 2.0f64.powi(-((sweep_len as i32 - 1) / 2)),
    ));
    Ok(report)
}

fn kennard(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, _jobs, hbar) = common_params(cfg)?;
    let pairs = [(0.5 * hbar, 0.5 * hbar), (1.0, 1.0), (0.25, 1.0), (2.0, 0.125)];
    let mut table = Table::new(&["var_q", "var_p", "sigma_product", "bound", "satisfied"]);
    let mut min_margin = f64::INFINITY;
    for (vq, vp) in pairs {
        let r = kennard_check(vq, vp, hbar);
        let check = r.check("kennard").expect("kennard check is always attached");
        min_margin = min_margin.min(check.lhs - check.rhs);
        table.push(vec![
            Cell::Num(vq),
            Cell::Num(vp),
            Cell::Num(check.lhs),
            Cell::Num(check.rhs),
            Cell::Bool(check.satisfied),
        ]);
    }

    let equality = kennard_check(0.5 * hbar, 0.5 * hbar, hbar);
    let eq_check = equality.check("kennard").expect("kennard check is always attached");

    let forbidden = GaussianState4::from_blocks(
        ModeMoments::zero_mean(0.1, 0.1),
        ModeMoments::minimal(1.0, hbar),
        hbar,
    );

    let mut report = ScenarioReport::new(
        "kennard",
        seed,
        resolved(&[("seed", seed.to_string()), ("hbar", hbar.to_string())]),
        table,
    );
    report.push_check(CheckRecord::at_least("kennard-bound", min_margin, 0.0, 1e-12));
    report.push_check(CheckRecord::equals(
        "gaussian-equality",
        eq_check.lhs,
        0.5 * hbar,
        1e-12,
    ));
    report.push_check(
        CheckRecord::boolean("robertson-rejection", forbidden.is_err())
            .with_detail("spreads below the bound are rejected at state construction"),
    );
    Ok(report)
}

fn arthurs_kelly(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, jobs, hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;

    let rows = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let state = GaussianState4::from_blocks(
            random_zero_mean_mode::<f64>(hbar, &mut rng),
            random_zero_mean_mode::<f64>(hbar, &mut rng),
            hbar,
        )
        .expect("random modes satisfy the Robertson condition");
        let r = arthurs_kelly_check(&state).expect("zero-mean probe is unbiased");
        let meter = r.check("arthurs-kelly-meter-spread").expect("check attached").lhs;
        let tradeoff = r.check("error-tradeoff").expect("check attached").lhs;
        (r.sigma_a, r.sigma_b, meter, r.epsilon_a, r.eta_b, tradeoff)
    })?;

    let mut table = Table::new(&[
        "instance",
        "sigma_mq",
        "sigma_mp",
        "meter_product",
        "epsilon_q",
        "epsilon_p",
        "error_product",
    ]);
    let mut min_meter = f64::INFINITY;
    let mut min_error = f64::INFINITY;
    for (i, row) in rows.iter().enumerate() {
        min_meter = min_meter.min(row.2);
        min_error = min_error.min(row.5);
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Num(row.0),
            Cell::Num(row.1),
            Cell::Num(row.2),
            Cell::Num(row.3),
            Cell::Num(row.4),
            Cell::Num(row.5),
        ]);
    }

    // equality at the all-minimal state
    let w = (0.5f64 * hbar).sqrt();
    let minimal = GaussianState4::from_blocks(
        ModeMoments::minimal(w, hbar),
        ModeMoments::minimal(w, hbar),
        hbar,
    )
    .map_err(|e| anyhow!("state construction: {e}"))?;
    let r = arthurs_kelly_check(&minimal).map_err(|e| anyhow!("minimal state: {e}"))?;
    let meter_eq = r.check("arthurs-kelly-meter-spread").expect("check attached").lhs;
    let error_eq = r.check("error-tradeoff").expect("check attached").lhs;

    let biased = GaussianState4::from_blocks(
        ModeMoments::minimal(1.0, hbar),
        ModeMoments::new(0.4, 0.0, 1.0, 1.0, 0.0),
        hbar,
    )
    .map_err(|e| anyhow!("state construction: {e}"))?;

    let mut report = ScenarioReport::new(
        "arthurs-kelly",
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("hbar", hbar.to_string()),
            ("instances", instances.to_string()),
        ]),
        table,
    );
    report.push_check(CheckRecord::at_least("meter-product-bound", min_meter, hbar, 1e-12));
    report.push_check(CheckRecord::at_least(
        "error-product-bound",
        min_error,
        0.5 * hbar,
        1e-12,
    ));
    report.push_check(CheckRecord::equals("minimal-meter-equality", meter_eq, hbar, 1e-12));
    report.push_check(CheckRecord::equals(
        "minimal-error-equality",
        error_eq,
        0.5 * hbar,
        1e-12,
    ));
    report.push_check(CheckRecord::boolean(
        "biased-probe-rejected",
        arthurs_kelly_check(&biased).is_err(),
    ));
    Ok(report)
}

fn cnot_qubit(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, _jobs, _hbar) = common_params(cfg)?;
    let mp = cnot_process::<f64>();
    let a = pauli_z::<f64>();
    let b = pauli_x::<f64>();
    let rho = plus_i_state();

    let h = heisenberg_edr(&mp, &a, &b, &rho).map_err(|e| anyhow!("{e}"))?;
    let u = universal_edr(&mp, &a, &b, &rho).map_err(|e| anyhow!("{e}"))?;
    let o = ozawa_edr(&mp, &a, &b, &rho).map_err(|e| anyhow!("{e}"))?;
    let c = corollary_bounds(&mp, &a, &b, &rho).map_err(|e| anyhow!("{e}"))?;
    let lu = locally_uniform_edr(&mp, &a, &b, &rho).map_err(|e| anyhow!("{e}"))?;

    let mut table = Table::new(&["relation", "lhs", "rhs", "satisfied"]);
    table.push(vec![
        Cell::Text("heisenberg-product".into()),
        Cell::Num(h.lhs_heisenberg),
        Cell::Num(h.commutator_bound),
        Cell::Bool(h.heisenberg_satisfied),
    ]);
    table.push(vec![
        Cell::Text("correlation-corrected".into()),
        Cell::Num(u.lhs_universal),
        Cell::Num(u.commutator_bound),
        Cell::Bool(u.universal_satisfied),
    ]);
    table.push(vec![
        Cell::Text("three-term".into()),
        Cell::Num(o.lhs_ozawa),
        Cell::Num(o.commutator_bound),
        Cell::Bool(o.ozawa_satisfied),
    ]);
    let db = c.check("disturbance-bound").ok_or_else(|| anyhow!("disturbance bound missing"))?;
    table.push(vec![
        Cell::Text("disturbance-bound".into()),
        Cell::Num(db.lhs),
        Cell::Num(db.rhs),
        Cell::Bool(db.satisfied),
    ]);
    table.push(vec![
        Cell::Text("locally-uniform-three-term".into()),
        Cell::Num(lu.lhs_ozawa),
        Cell::Num(lu.commutator_bound),
        Cell::Bool(lu.ozawa_satisfied),
    ]);

    let sqrt2 = 2.0f64.sqrt();
    let eps_bar = locally_uniform_error(&mp, &a, &rho).map_err(|e| anyhow!("{e}"))?;
    let eta_bar = locally_uniform_disturbance(&mp, &b, &rho).map_err(|e| anyhow!("{e}"))?;
    let t1_cnot = theorem1_conditions(&mp, &a, &rho, seed).map_err(|e| anyhow!("{e}"))?;
    let lazy = constant_meter_process::<f64>(2);
    let t1_lazy = theorem1_conditions(&lazy, &a, &rho, seed).map_err(|e| anyhow!("{e}"))?;

    let mut report = ScenarioReport::new(
        "cnot-qubit",
        seed,
        resolved(&[("seed", seed.to_string())]),
        table,
    );
    report.push_check(CheckRecord::at_most("epsilon-exact-zero", h.epsilon_a, 1e-12));
    report.push_check(CheckRecord::equals("eta-sqrt-two", h.eta_b, sqrt2, 1e-12));
    report.push_check(CheckRecord::equals("commutator-bound-one", h.commutator_bound, 1.0, 1e-12));
    report.push_check(CheckRecord::boolean("heisenberg-violated", !h.heisenberg_satisfied));
    report.push_check(CheckRecord::equals("three-term-lhs", o.lhs_ozawa, sqrt2, 1e-12));
    report.push_check(CheckRecord::at_least("three-term-bound", o.lhs_ozawa, 1.0, 1e-12));
    report.push_check(CheckRecord::equals("correlation-term", u.correlation_term, 2.0, 1e-12));
    report.push_check(CheckRecord::at_least("universal-bound", u.lhs_universal, 1.0, 1e-10));
    report.push_check(CheckRecord::equals("disturbance-bound-lhs", db.lhs, sqrt2, 1e-12));
    report.push_check(CheckRecord::at_most("locally-uniform-error-zero", eps_bar, 1e-12));
    report.push_check(CheckRecord::equals(
        "locally-uniform-disturbance",
        eta_bar,
        sqrt2,
        1e-12,
    ));
    report.push_check(CheckRecord::boolean(
        "theorem1-designed-precise",
        t1_cnot.as_array() == [true; 4],
    ));
    report.push_check(CheckRecord::boolean(
        "theorem1-designed-imprecise",
        t1_lazy.as_array() == [false; 4],
    ));
    Ok(report)
}

fn theorem1_fuzz(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, jobs, _hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;

    let rows = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let sys = rng.random_range(2..=4usize);
        let probe = rng.random_range(2..=3usize);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        let conditions = theorem1_conditions(&mp, &a, &rho, instance_seed(seed, i))
            .expect("random instances satisfy the preconditions");
        (sys, probe, conditions)
    })?;

    let mut table = Table::new(&[
        "instance",
        "sys_dim",
        "probe_dim",
        "precise",
        "weak_diagonal",
        "vanishing_on_cyclic",
        "vanishing_on_generating",
        "agree",
    ]);
    let mut agree_count = 0usize;
    for (i, (sys, probe, c)) in rows.iter().enumerate() {
        let agree = c.all_agree();
        agree_count += usize::from(agree);
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Int(*sys as i64),
            Cell::Int(*probe as i64),
            Cell::Bool(c.precise),
            Cell::Bool(c.weak_diagonal),
            Cell::Bool(c.vanishing_on_cyclic),
            Cell::Bool(c.vanishing_on_generating),
            Cell::Bool(agree),
        ]);
    }

    let mut report = ScenarioReport::new(
        "theorem1-fuzz",
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("instances", instances.to_string()),
        ]),
        table,
    );
    report.push_check(CheckRecord::equals(
        "all-agree-count",
        agree_count as f64,
        instances as f64,
        0.0,
    ));
    Ok(report)
}

fn universal_edr_fuzz(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, jobs, _hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;
    let oracle_stride = cfg.get_u64("oracle_stride", 20)? as usize;
    let oracle_samples = cfg.get_u64("oracle_samples", 10_000)? as usize;

    struct Row {
        lhs_universal: f64,
        lhs_three_term: f64,
        lhs_locally_uniform: f64,
        bound: f64,
        eps_bar: f64,
        eta_bar: f64,
        precise_consistent: bool,
        non_disturbing_consistent: bool,
        oracle_gap: f64,
        theorem_error: Option<String>,
    }

    let rows = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let sys = rng.random_range(2..=4usize);
        let probe = rng.random_range(2..=3usize);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let b = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);

        let mut theorem_error = None;
        let mut grab = |r: edrlab_core::Result<edrlab_core::EdrReport64>| match r {
            Ok(rep) => Some(rep),
            Err(e) => {
                theorem_error = Some(e.to_string());
                None
            }
        };
        let u = grab(universal_edr(&mp, &a, &b, &rho));
        let o = grab(ozawa_edr(&mp, &a, &b, &rho));
        let lu = grab(locally_uniform_edr(&mp, &a, &b, &rho));

        let eps_bar = locally_uniform_error(&mp, &a, &rho).unwrap_or(f64::NAN);
        let eta_bar = locally_uniform_disturbance(&mp, &b, &rho).unwrap_or(f64::NAN);
        let precise = is_precise(&mp, &a, &rho).map(|d| d.precise).unwrap_or(false);
        let non_disturbing = is_non_disturbing(&mp, &b, &rho).map(|d| d.precise).unwrap_or(false);

        // compare the eigenvalue route against the sampling oracle on a
        // stride of instances (it is the expensive part)
        let oracle_gap = if oracle_stride > 0 && i % oracle_stride == 0 {
            let k_form = error_quadratic_form(&mp, &a).expect("valid instance");
            let cyc = cyclic_subspace(&a, &rho);
            let oracle =
                locally_uniform_sup_oracle(&k_form, &cyc, oracle_samples, instance_seed(seed, i));
            (eps_bar - oracle).abs()
        } else {
            0.0
        };

        Row {
            lhs_universal: u.as_ref().map(|r| r.lhs_universal).unwrap_or(f64::NAN),
            lhs_three_term: o.as_ref().map(|r| r.lhs_ozawa).unwrap_or(f64::NAN),
            lhs_locally_uniform: lu.as_ref().map(|r| r.lhs_ozawa).unwrap_or(f64::NAN),
            bound: u.as_ref().map(|r| r.commutator_bound).unwrap_or(f64::NAN),
            eps_bar,
            eta_bar,
            precise_consistent: (eps_bar <= 1e-9) == precise,
            non_disturbing_consistent: (eta_bar <= 1e-9) == non_disturbing,
            oracle_gap,
            theorem_error,
        }
    })?;

    let mut table = Table::new(&[
        "instance",
        "lhs_universal",
        "lhs_three_term",
        "lhs_locally_uniform",
        "bound",
        "eps_bar",
        "eta_bar",
    ]);
    let mut min_margin = f64::INFINITY;
    let mut violations = Vec::new();
    let mut equiv_ok = true;
    let mut max_oracle_gap: f64 = 0.0;
    for (i, row) in rows.iter().enumerate() {
        if let Some(e) = &row.theorem_error {
            violations.push(format!("instance {i}: {e}"));
        }
        for lhs in [row.lhs_universal, row.lhs_three_term, row.lhs_locally_uniform] {
            if lhs.is_finite() {
                min_margin = min_margin.min(lhs - row.bound);
            }
        }
        equiv_ok &= row.precise_consistent && row.non_disturbing_consistent;
        max_oracle_gap = max_oracle_gap.max(row.oracle_gap);
        table.push(vec![
            Cell::Int(i as i64),
            Cell::Num(row.lhs_universal),
            Cell::Num(row.lhs_three_term),
            Cell::Num(row.lhs_locally_uniform),
            Cell::Num(row.bound),
            Cell::Num(row.eps_bar),
            Cell::Num(row.eta_bar),
        ]);
    }

    let mut report = ScenarioReport::new(
        "universal-edr-fuzz",
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("instances", instances.to_string()),
            ("oracle_stride", oracle_stride.to_string()),
            ("oracle_samples", oracle_samples.to_string()),
        ]),
        table,
    );
    report.push_check(
        CheckRecord::boolean("no-theorem-violations", violations.is_empty())
            .with_detail(&violations.join("; ")),
    );
    report.push_check(CheckRecord::at_least("min-theorem-margin", min_margin, 0.0, 1e-10));
    report.push_check(CheckRecord::boolean("locally-uniform-zero-iff-precise", equiv_ok));
    report.push_check(CheckRecord::at_most("sup-oracle-gap", max_oracle_gap, 1e-6));
    Ok(report)
}

/// Shared scaffolding of the two estimator demos: exact-mode agreement on
/// random instances plus finite-shot agreement across seeds.
fn estimator_demo(
    cfg: &Config,
    scenario: &'static str,
    exact_epsilon: fn(&edrlab_core::MeasuringProcess64, &edrlab_core::HermitianOperator64, &DensityState64) -> Result<f64>,
    exact_eta: fn(&edrlab_core::MeasuringProcess64, &edrlab_core::HermitianOperator64, &DensityState64) -> Result<f64>,
    sampled_epsilon: fn(&edrlab_core::MeasuringProcess64, &edrlab_core::HermitianOperator64, &DensityState64, u64, u64) -> edrlab_core::Result<edrlab_core::estimators::SampledEstimate<f64>>,
    sampled_eta: fn(&edrlab_core::MeasuringProcess64, &edrlab_core::HermitianOperator64, &DensityState64, u64, u64) -> edrlab_core::Result<edrlab_core::estimators::SampledEstimate<f64>>,
) -> Result<ScenarioReport> {
    let (seed, jobs, _hbar) = common_params(cfg)?;
    let instances = cfg.get_u64("instances", DEFAULT_INSTANCES)? as usize;
    let shots = cfg.get_u64("shots", DEFAULT_SHOTS)?;
    let sample_seeds = cfg.get_u64("sample_seeds", DEFAULT_SAMPLE_SEEDS)? as usize;

    // exact mode on random qubit/qutrit instances
    let exact_rows = run_indexed(jobs, instances, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(seed, i));
        let sys = rng.random_range(2..=3usize);
        let probe = rng.random_range(2..=3usize);
        let mp = random_measuring_process::<f64>(sys, probe, &mut rng);
        let a = random_hermitian::<f64>(sys, &mut rng);
        let b = random_hermitian::<f64>(sys, &mut rng);
        let rho = random_density::<f64>(sys, &mut rng);
        let eps_dev = (exact_epsilon(&mp, &a, &rho).expect("estimator runs")
            - rms_error(&mp, &a, &rho).expect("oracle runs"))
        .abs();
        let eta_dev = (exact_eta(&mp, &b, &rho).expect("estimator runs")
            - rms_disturbance(&mp, &b, &rho).expect("oracle runs"))
        .abs();
        (eps_dev, eta_dev)
    })?;
    let max_eps_dev = exact_rows.iter().fold(0.0f64, |acc, r| acc.max(r.0));
    let max_eta_dev = exact_rows.iter().fold(0.0f64, |acc, r| acc.max(r.1));

    // sampling mode on the designed qubit instance with nonzero error
    let mp = cnot_process::<f64>();
    let a = pauli_x::<f64>();
    let b = pauli_x::<f64>();
    let rho = plus_i_state();
    let exact_eps = rms_error(&mp, &a, &rho).map_err(|e| anyhow!("{e}"))?;
    let exact_eta_val = rms_disturbance(&mp, &b, &rho).map_err(|e| anyhow!("{e}"))?;

    let mut table = Table::new(&[
        "sample_seed",
        "epsilon_estimate",
        "epsilon_exact",
        "epsilon_sigmas",
        "eta_estimate",
        "eta_exact",
        "eta_sigmas",
    ]);
    let sampled = run_indexed(jobs, sample_seeds, |k| {
        let s = instance_seed(seed, 7000 + k);
        let eps = sampled_epsilon(&mp, &a, &rho, shots, s).expect("sampling runs");
        let eta = sampled_eta(&mp, &b, &rho, shots, s).expect("sampling runs");
        (eps, eta)
    })?;
    let mut max_sigmas: f64 = 0.0;
    for (k, (eps, eta)) in sampled.iter().enumerate() {
        let eps_sig = eps.deviation_in_sigmas(exact_eps);
        let eta_sig = eta.deviation_in_sigmas(exact_eta_val);
        max_sigmas = max_sigmas.max(eps_sig).max(eta_sig);
        table.push(vec![
            Cell::Int(k as i64),
            Cell::Num(eps.value),
            Cell::Num(exact_eps),
            Cell::Num(eps_sig),
            Cell::Num(eta.value),
            Cell::Num(exact_eta_val),
            Cell::Num(eta_sig),
        ]);
    }

    let mut report = ScenarioReport::new(
        scenario,
        seed,
        resolved(&[
            ("seed", seed.to_string()),
            ("instances", instances.to_string()),
            ("shots", shots.to_string()),
            ("sample_seeds", sample_seeds.to_string()),
        ]),
        table,
    );
    report.push_check(CheckRecord::at_most("exact-epsilon-deviation", max_eps_dev, 1e-9));
    report.push_check(CheckRecord::at_most("exact-eta-deviation", max_eta_dev, 1e-9));
    report.push_check(CheckRecord::at_most("sampling-within-five-sigma", max_sigmas, 5.0));
    Ok(report)
}

fn three_state_demo(cfg: &Config) -> Result<ScenarioReport> {
    estimator_demo(
        cfg,
        "three-state-demo",
        |mp, a, rho| {
            let moments = output_moments(mp).map_err(|e| anyhow!("{e}"))?;
            three_state_error(&moments, a, rho).map_err(|e| anyhow!("{e}"))
        },
        |mp, b, rho| three_state_disturbance(mp, b, rho).map_err(|e| anyhow!("{e}")),
        three_state_error_sampled,
        three_state_disturbance_sampled,
    )
}

fn weak_method_demo(cfg: &Config) -> Result<ScenarioReport> {
    let mut report = estimator_demo(
        cfg,
        "weak-method-demo",
        |mp, a, rho| {
            let wjd = measurement_weak_joint(mp, a, rho).map_err(|e| anyhow!("{e}"))?;
            weak_method_error(&wjd).map_err(|e| anyhow!("{e}"))
        },
        |mp, b, rho| {
            let wjd = disturbance_weak_joint(mp, b, rho).map_err(|e| anyhow!("{e}"))?;
            weak_method_error(&wjd).map_err(|e| anyhow!("{e}"))
        },
        weak_method_error_sampled,
        weak_method_disturbance_sampled,
    )?;

    // the designed instance has complex weak values, and the estimate still
    // matches the trace formula there
    let mp = cnot_process::<f64>();
    let a = pauli_x::<f64>();
    let rho = plus_i_state();
    let wjd = measurement_weak_joint(&mp, &a, &rho).map_err(|e| anyhow!("{e}"))?;
    report.push_check(CheckRecord::at_least(
        "weak-values-complex",
        wjd.max_imaginary(),
        1e-3,
        0.0,
    ));
    Ok(report)
}

fn ozawa_tau_sweep(cfg: &Config) -> Result<ScenarioReport> {
    let (seed, _jobs, _hbar) = common_params(cfg)?;
    let tau_points = cfg.get_u64("tau_points", DEFAULT_TAU_POINTS)? as usize;

    let labels = ["q", "p", "qbar", "pbar"];
    let mut columns: Vec<String> = vec!["tau".to_string()];
    for row in labels {
        for col in labels {
            columns.push(format!("s_{row}_{col}"));
        }
    }
    columns.push("expm_max_diff".to_string());
    columns.push("symplectic_defect".to_string());
    let column_refs: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut table = Table::new(&column_refs);

    let mut worst = [0.0f64; 4]; // expm diff, defect per model
    for k in 0..tau_points {
        let tau = k as f64 / (tau_points - 1) as f64;
        for (m, kind) in [CvModelKind::Ozawa1988, CvModelKind::VonNeumann].iter().enumerate() {
            let closed = transfer_at(*kind, tau).map_err(|e| anyhow!("{e}"))?;
            let numeric = matrix_exponential_check(*kind, tau).map_err(|e| anyhow!("{e}"))?;
            let diff = (numeric.matrix() - closed.matrix())
                .iter()
                .fold(0.0f64, |acc, x| acc.max(x.abs()));
            let defect = symplectic_defect(closed.matrix());
            worst[2 * m] = worst[2 * m].max(diff);
            worst[2 * m + 1] = worst[2 * m + 1].max(defect);
            if *kind == CvModelKind::Ozawa1988 {
                let mut row = vec![Cell::Num(tau)];
                for i in 0..4 {
                    for j in 0..4 {
                        row.push(Cell::Num(closed.matrix()[(i, j)]));
                    }
                }
                row.push(Cell::Num(diff));
                row.push(Cell::Num(defect));
                table.push(row);
            }
        }
    }

    let mut report = ScenarioReport::new(
        "ozawa-tau-sweep",
        seed,
        resolved(&[("seed", seed.to_string()), ("tau_points", tau_points.to_string())]),
        table,
    );
    report.push_check(CheckRecord::at_most("ozawa-expm-agreement", worst[0], 1e-9));
    report.push_check(CheckRecord::at_most("ozawa-symplectic-defect", worst[1], 1e-10));
    report.push_check(CheckRecord::at_most("von-neumann-expm-agreement", worst[2], 1e-9));
    report.push_check(CheckRecord::at_most("von-neumann-symplectic-defect", worst[3], 1e-10));

    // endpoint rows pin the interaction to the solved equations of motion
    let t1 = transfer_at(CvModelKind::Ozawa1988, 1.0).map_err(|e| anyhow!("{e}"))?;
    report.push_check(CheckRecord::equals("endpoint-qbar-reads-q", t1.matrix()[(QBAR, Q)], 1.0, 1e-12));
    report.push_check(CheckRecord::equals(
        "endpoint-p-flips-pbar",
        t1.matrix()[(P, edrlab_core::gaussian::PBAR)],
        -1.0,
        1e-12,
    ));
    // the moment engine agrees with the operator identities at the endpoint
    let state = GaussianState4::from_blocks(
        ModeMoments::minimal(1.0, 1.0),
        ModeMoments::minimal(1.0, 1.0),
        1.0,
    )
    .map_err(|e| anyhow!("{e}"))?;
    report.push_check(CheckRecord::at_most(
        "endpoint-epsilon-zero",
        rms_error_q(CvModelKind::Ozawa1988, &state),
        0.0,
    ));
    report.push_check(CheckRecord::at_least(
        "endpoint-eta-positive",
        rms_disturbance_p(CvModelKind::Ozawa1988, &state),
        0.0,
        0.0,
    ));
    Ok(report)
}
