use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::Arc;

use proptest::prelude::*;

use super::*;
use crate::models::{cavity_feedback_model, CavityLevel, ModelParams, StateLibrary};
use crate::qspace::{transition_matrix, I};

fn qubit() -> CompositeSpace {
    CompositeSpace::from_labels(&[("q", &["g", "e"])]).unwrap()
}

fn sigma_x(s: &CompositeSpace) -> Operator {
    Operator::transition(s, "q", "g", "e").unwrap().plus_hc()
}

fn random_hermitian(n: usize, seed: &[f64]) -> CMatrix {
    let m = CMatrix::from_fn(n, n, |i, j| C64::new(seed[(i * n + j) % seed.len()], seed[(i + 3 * j + 1) % seed.len()]));
    (&m + m.adjoint()) * C64::new(0.5, 0.0)
}

#[test]
fn grid_validation() {
    assert!(TimeGrid::new(0.0, 1.0, 1).is_err());
    assert!(TimeGrid::new(1.0, 1.0, 5).is_err());
    let g = TimeGrid::new(0.0, 2.0, 5).unwrap();
    assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
}

#[test]
fn null_hamiltonian_keeps_state() {
    let s = qubit();
    let psi = QuantumState::basis_ket(&s, &["e"]).unwrap();
    let r = evolve_schrodinger(&TimeDependentOperator::zeros(&s), &psi, &TimeGrid::new(0.0, 5.0, 3).unwrap(), &Record::default()).unwrap();
    assert_eq!(r.final_state, psi);
}

#[test]
fn rabi_half_period() {
    let s = qubit();
    let omega = 0.7;
    let h = sigma_x(&s) * omega;
    let g = QuantumState::basis_ket(&s, &["g"]).unwrap();
    let e = QuantumState::basis_ket(&s, &["e"]).unwrap();
    let grid = TimeGrid::new(0.0, PI / (2.0 * omega), 11).unwrap();
    let r = evolve_schrodinger(&h.into(), &g, &grid, &Record::populations(&[("e", &e)]).unwrap()).unwrap();
    assert!((r.final_state.population(&e).unwrap() - 1.0).abs() < 1e-8);
    for (t, p) in r.times.iter().zip(r.observable("e").unwrap()) {
        assert!((p - (omega * t).sin().powi(2)).abs() < 1e-8);
    }
}

#[test]
fn static_evolution_matches_matrix_exponential() {
    let s = CompositeSpace::from_labels(&[("a", &["0", "1", "2"]), ("b", &["0", "1"])]).unwrap();
    let seed = [0.3, -1.1, 0.7, 0.25, 1.9, -0.4, 0.05, 0.8, -0.6];
    let h = Operator::new(s.clone(), random_hermitian(6, &seed)).unwrap();
    let psi = QuantumState::normalized(&s, CVector::from_fn(6, |i, _| C64::new(1.0 + i as f64, 0.5 - i as f64))).unwrap();
    let t = 3.7;
    let r = evolve_schrodinger(&h.clone().into(), &psi, &TimeGrid::new(0.0, t, 2).unwrap(), &Record::default()).unwrap();
    let u = (h.matrix() * (-I * t)).exp();
    let want = &u * psi.vector().unwrap();
    assert!((r.final_state.vector().unwrap() - &want).norm() < 1e-8);

    let problem = LindbladProblem::new(h, psi.to_mixed()).unwrap();
    let rl = evolve_lindblad(&problem, &TimeGrid::new(0.0, t, 2).unwrap(), &Record::default()).unwrap();
    let want_rho = &want * want.adjoint();
    assert!(frobenius(&(as_density(&rl.final_state) - want_rho)) < 1e-8);
}

#[test]
fn amplitude_decay_is_exponential() {
    let s = qubit();
    let gamma: f64 = 0.37;
    let e = QuantumState::basis_ket(&s, &["e"]).unwrap();
    let lower = Operator::transition(&s, "q", "g", "e").unwrap() * gamma.sqrt();
    let problem = LindbladProblem::new(Operator::zeros(&s), e.clone()).unwrap().with_collapse(lower).unwrap();
    let grid = TimeGrid::new(0.0, 10.0, 21).unwrap();
    let r = evolve_lindblad(&problem, &grid, &Record::populations(&[("e", &e)]).unwrap()).unwrap();
    for (t, p) in r.times.iter().zip(r.observable("e").unwrap()) {
        assert!((p - (-gamma * t).exp()).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn time_dependent_collapse_operator() {
    // c(t) = √γ(t)|g⟩⟨e| with γ(t) = γ₀(1 + sin t): P_e = exp(−γ₀(t + 1 − cos t))
    let s = qubit();
    let g0 = 0.2;
    let e = QuantumState::basis_ket(&s, &["e"]).unwrap();
    let c = TimeDependentOperator::zeros(&s)
        .with_term(Arc::new(move |t: f64| C64::new((g0 * (1.0 + t.sin())).sqrt(), 0.0)), Operator::transition(&s, "q", "g", "e").unwrap())
        .unwrap();
    let problem = LindbladProblem::new(Operator::zeros(&s), e.clone()).unwrap().with_collapse(c).unwrap();
    let r = evolve_lindblad(&problem, &TimeGrid::new(0.0, 6.0, 13).unwrap(), &Record::populations(&[("e", &e)]).unwrap()).unwrap();
    for (t, p) in r.times.iter().zip(r.observable("e").unwrap()) {
        assert!((p - (-g0 * (t + 1.0 - t.cos())).exp()).abs() < 1e-8);
    }
}

#[test]
fn decay_steady_state_is_ground() {
    let s = qubit();
    let e = QuantumState::basis_ket(&s, &["e"]).unwrap();
    let g = QuantumState::basis_ket(&s, &["g"]).unwrap();
    let problem = LindbladProblem::new(Operator::zeros(&s), e)
        .unwrap()
        .with_collapse(Operator::transition(&s, "q", "g", "e").unwrap())
        .unwrap();
    let ss = steady_state(&problem).unwrap();
    assert!(ss.unique);
    assert!((ss.state.population(&g).unwrap() - 1.0).abs() < 1e-12);
}

fn eq25(eta: f64) -> (LindbladProblem, StateLibrary) {
    let p = ModelParams {
        g: 10.0,
        omega_b: 10.0,
        delta_p: 100.0,
        kappa: 10.0,
        omega_mw: 1.0,
        eta,
        ..Default::default()
    };
    let m = cavity_feedback_model(&p, CavityLevel::ReducedFeedback).unwrap();
    let lib = StateLibrary::new(m.space()).unwrap();
    let problem = m.into_problem(lib.gg().unwrap()).unwrap();
    (problem, lib)
}

fn blockade_subspace(lib: &StateLibrary) -> Vec<QuantumState> {
    ["gg", "ge", "eg"].iter().map(|l| {
        let (a, b) = l.split_at(1);
        lib.ket(&[a, b]).unwrap()
    }).collect()
}

#[test]
fn feedback_steady_state_is_singlet() {
    let (problem, lib) = eq25(-FRAC_PI_2);
    let ss = steady_state_on(&problem, &blockade_subspace(&lib)).unwrap();
    assert!(ss.unique, "kernel {}", ss.kernel_dim);
    assert!(ss.residual < 1e-10);
    assert!(ss.state.population(&lib.singlet().unwrap()).unwrap() > 1.0 - 1e-8);
    // |ee⟩ is decoupled on the full space, so the kernel there is larger.
    let full = steady_state(&problem).unwrap();
    assert!(!full.unique);
}

#[test]
fn no_rotation_kernel_contains_singlet() {
    let (problem, lib) = eq25(0.0);
    let s = lib.singlet().unwrap().to_mixed();
    let d = problem.liouvillian_apply(0.0, &as_density(&s));
    assert!(frobenius(&d) < 1e-14);
    let ss = steady_state_on(&problem, &blockade_subspace(&lib)).unwrap();
    assert!(ss.kernel_dim >= 2, "kernel {}", ss.kernel_dim);
}

#[test]
fn feedback_dissipator_is_traceless() {
    let (problem, lib) = eq25(-0.4 * PI);
    let rho = QuantumState::maximally_mixed(lib.space());
    let m = random_hermitian(4, &[0.2, 0.9, -0.3, 0.4, 0.1]);
    let rho_m = as_density(&rho) + &m * m.adjoint() * C64::new(0.1, 0.0);
    let rho_m = &rho_m / rho_m.trace();
    let d = problem.liouvillian_apply(0.0, &rho_m);
    assert!(d.trace().norm() < 1e-12);
    // The sparse kernel agrees with the dense evaluation.
    let mut k = kernel::LindbladKernel::new(&problem);
    let mut out = vec![C64::new(0.0, 0.0); 16];
    k.rhs(0.0, rho_m.as_slice(), &mut out);
    assert!(frobenius(&(CMatrix::from_column_slice(4, 4, &out) - d)) < 1e-14);
}

#[test]
fn non_unitary_feedback_rejected() {
    let s = qubit();
    let problem = LindbladProblem::new(Operator::zeros(&s), QuantumState::basis_ket(&s, &["g"]).unwrap())
        .unwrap()
        .with_collapse(Operator::identity(&s))
        .unwrap();
    let bad = FeedbackLoop {
        channel: 0,
        unitary: Operator::identity(&s) * 2.0,
    };
    assert!(matches!(problem.clone().with_feedback(bad), Err(Error::Validation(_))));
    let missing = FeedbackLoop {
        channel: 3,
        unitary: Operator::identity(&s),
    };
    assert!(matches!(problem.with_feedback(missing), Err(Error::Validation(_))));
}

#[test]
fn compare_identical_and_mismatched() {
    let s = qubit();
    let g = QuantumState::basis_ket(&s, &["g"]).unwrap();
    let rec = Record::populations(&[("g", &g)]).unwrap();
    let h: TimeDependentOperator = sigma_x(&s).into();
    let a = evolve_schrodinger(&h, &g, &TimeGrid::new(0.0, 1.0, 5).unwrap(), &rec).unwrap();
    let b = evolve_schrodinger(&h, &g, &TimeGrid::new(0.0, 2.0, 5).unwrap(), &rec).unwrap();
    let same = compare_models(&[&a, &a], "g").unwrap();
    assert_eq!(same[0].max_abs, 0.0);
    assert!(matches!(compare_models(&[&a, &b], "g"), Err(Error::Validation(_))));
    assert!(compare_models(&[&a, &a], "x").is_err());
}

#[test]
fn tolerance_halving_is_stable() {
    let (problem, lib) = eq25(-FRAC_PI_2);
    let rec = Record::populations(&[("S", &lib.singlet().unwrap())]).unwrap();
    let g1 = TimeGrid::new(0.0, 20.0, 41).unwrap();
    let g2 = g1.with_tolerances(DEFAULT_RTOL / 2.0, DEFAULT_ATOL / 2.0).unwrap();
    let a = evolve_lindblad(&problem, &g1, &rec).unwrap();
    let b = evolve_lindblad(&problem, &g2, &rec).unwrap();
    let d = compare_models(&[&a, &b], "S").unwrap();
    assert!(d[0].max_abs < 1e-6);
}

fn random_problem(seed: &[f64], rates: &[f64]) -> LindbladProblem {
    let s = CompositeSpace::from_labels(&[("a", &["0", "1", "2"])]).unwrap();
    let h = Operator::new(s.clone(), random_hermitian(3, seed)).unwrap();
    let psi = QuantumState::normalized(&s, CVector::from_fn(3, |i, _| C64::new(seed[i], seed[i + 1]))).unwrap();
    let mut p = LindbladProblem::new(h, psi).unwrap();
    for (k, &r) in rates.iter().enumerate() {
        let (to, from) = [(0, 1), (1, 2), (0, 2)][k % 3];
        let c = Operator::new(s.clone(), transition_matrix(3, to, from) * C64::new(r.sqrt(), 0.0)).unwrap();
        p = p.with_collapse(c).unwrap();
    }
    p
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn lindblad_preserves_state_properties(
        seed in proptest::collection::vec(-1.0f64..1.0, 9),
        rates in proptest::collection::vec(0.0f64..2.0, 1..4),
    ) {
        prop_assume!(seed[0].abs() + seed[1].abs() > 0.1);
        let p = random_problem(&seed, &rates);
        let r = evolve_lindblad(&p, &TimeGrid::new(0.0, 5.0, 26).unwrap(), &Record::default()).unwrap();
        prop_assert!(r.diagnostics.max_trace_error < 1e-9);
        prop_assert!(r.diagnostics.max_hermiticity_error < 1e-9);
        prop_assert!(r.diagnostics.min_eigenvalue >= -1e-7);
    }

    #[test]
    fn closed_lindblad_matches_schrodinger(seed in proptest::collection::vec(-1.0f64..1.0, 9)) {
        prop_assume!(seed[0].abs() + seed[1].abs() > 0.1);
        let p = random_problem(&seed, &[]);
        // both runs carry ~rtol of global error; tighten so the gap measures the kernels
        let grid = TimeGrid::new(0.0, 3.0, 4).unwrap().with_tolerances(1e-10, 1e-12).unwrap();
        let a = evolve_lindblad(&p, &grid, &Record::default()).unwrap();
        let b = evolve_schrodinger(p.hamiltonian(), p.initial(), &grid, &Record::default()).unwrap();
        prop_assert!(frobenius(&(as_density(&a.final_state) - as_density(&b.final_state))) < 1e-8);
        prop_assert!(b.diagnostics.max_trace_error < 1e-8);
    }
}
