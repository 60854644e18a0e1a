use std::sync::Arc;

use super::{
    atom_label, atoms_space, local, pair_sum, push_nonzero, DrivePair, ModelBundle, ModelParams,
    ATOM_LEVELS, QUBIT_LEVELS, RYDBERG_LEVELS,
};
use crate::error::{Error, Result};
use crate::qspace::{Coefficient, CompositeSpace, Operator, TimeDependentOperator, C64};

fn require_atoms(p: &ModelParams, n: usize) -> Result<()> {
    if p.n_atoms != n {
        return Err(Error::Configuration(format!("model needs n_atoms = {n}, got {}", p.n_atoms)));
    }
    Ok(())
}

fn tr(space: &CompositeSpace, atom: usize, to: &str, from: &str) -> Result<Operator> {
    Operator::transition(space, &atom_label(atom), to, from)
}

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Drive-independent part of the four-level atomic Hamiltonian for `n` atoms:
/// Rydberg coupling, detunings, pairwise interaction and the `Ω_c` Stark
/// counter-term.
pub(crate) fn static_four_level(space: &CompositeSpace, n: usize, p: &ModelParams) -> Result<Operator> {
    let mut h = Operator::zeros(space);
    for i in 0..n {
        h += tr(space, i, "r", "e")?.plus_hc() * p.omega_c;
        h += tr(space, i, "p", "p")? * -p.delta_p;
        h += tr(space, i, "r", "r")? * -p.delta_r;
        if p.stark_compensation && p.omega_c != 0.0 {
            h += tr(space, i, "e", "e")? * (-p.omega_c * p.omega_c / p.delta_r);
        }
    }
    let rr = local(&ATOM_LEVELS, "r", "r")?;
    h += pair_sum(space, n, &rr, &rr)? * p.interaction;
    Ok(h)
}

/// Adds the `Ω_a`, `Ω_b` laser couplings (and their Stark counter-terms) of
/// `n` four-level atoms to `h`.
pub(crate) fn add_lasers(
    mut h: TimeDependentOperator,
    space: &CompositeSpace,
    n: usize,
    p: &ModelParams,
    drives: Option<&DrivePair>,
    with_omega_a: bool,
) -> Result<TimeDependentOperator> {
    let comp = p.stark_compensation && p.delta_p != 0.0;
    match drives {
        None => {
            let mut c = Operator::zeros(space);
            for i in 0..n {
                if with_omega_a {
                    c += tr(space, i, "p", "g")?.plus_hc() * p.omega_a;
                }
                c += tr(space, i, "p", "e")?.plus_hc() * p.omega_b;
                if comp {
                    if with_omega_a {
                        c += tr(space, i, "g", "g")? * (-p.omega_a * p.omega_a / p.delta_p);
                    }
                    c += tr(space, i, "e", "e")? * (-p.omega_b * p.omega_b / p.delta_p);
                }
            }
            h = h.add_constant(&c)?;
        }
        Some(d) => {
            let mut pg = Operator::zeros(space);
            let mut pe = Operator::zeros(space);
            let mut gg = Operator::zeros(space);
            let mut ee = Operator::zeros(space);
            for i in 0..n {
                pg += tr(space, i, "p", "g")?;
                pe += tr(space, i, "p", "e")?;
                gg += tr(space, i, "g", "g")?;
                ee += tr(space, i, "e", "e")?;
            }
            if with_omega_a {
                h = h.with_hermitian_term(d.omega_a.clone(), pg)?;
            }
            h = h.with_hermitian_term(d.omega_b.clone(), pe)?;
            if comp {
                let dp = p.delta_p;
                if with_omega_a {
                    let a = d.omega_a.clone();
                    h = h.with_term(Arc::new(move |t| re(-a(t).norm_sqr() / dp)), gg)?;
                }
                let b = d.omega_b.clone();
                h = h.with_term(Arc::new(move |t| re(-b(t).norm_sqr() / dp)), ee)?;
            }
        }
    }
    Ok(h)
}

/// Two four-level atoms driven on `g↔p` (`Ω_a`), `e↔p` (`Ω_b`) and `e↔r`
/// (`Ω_c`), with `U` on `|rr⟩`. `drives` replaces the constant `Ω_a`, `Ω_b`.
pub fn full_two_atom_hamiltonian(p: &ModelParams, drives: Option<&DrivePair>) -> Result<TimeDependentOperator> {
    p.validate()?;
    require_atoms(p, 2)?;
    let space = atoms_space(2, &ATOM_LEVELS)?;
    let h = TimeDependentOperator::constant(static_four_level(&space, 2, p)?);
    add_lasers(h, &space, 2, p, drives, true)
}

/// Spontaneous emission `√(γ_p/2)|g⟩⟨p|`, `√(γ_p/2)|e⟩⟨p|` and Rydberg decay
/// `√γ_r|e⟩⟨r|` for each of `n` four-level atoms.
pub(crate) fn atomic_collapse(space: &CompositeSpace, n: usize, p: &ModelParams) -> Result<Vec<TimeDependentOperator>> {
    let mut ops = Vec::new();
    let sp = (p.gamma_p / 2.0).sqrt();
    for i in 0..n {
        push_nonzero(&mut ops, tr(space, i, "g", "p")? * sp);
        push_nonzero(&mut ops, tr(space, i, "e", "p")? * sp);
        push_nonzero(&mut ops, tr(space, i, "e", "r")? * p.gamma_r.sqrt());
    }
    Ok(ops)
}

pub fn full_two_atom_collapse(p: &ModelParams) -> Result<Vec<TimeDependentOperator>> {
    require_atoms(p, 2)?;
    atomic_collapse(&atoms_space(2, &ATOM_LEVELS)?, 2, p)
}

/// Full two-atom Hamiltonian plus its decay channels.
pub fn full_two_atom_model(p: &ModelParams, drives: Option<&DrivePair>) -> Result<ModelBundle> {
    Ok(ModelBundle {
        hamiltonian: full_two_atom_hamiltonian(p, drives)?,
        collapse: full_two_atom_collapse(p)?,
        feedback: None,
    })
}

/// Raman coupling, antiblockade block and detuning on an atomic space whose
/// atoms carry at least `g, e, r`:
/// `Σᵢ Ω_eff|g⟩ᵢ⟨e| + Σ_{i<j} λ|ee⟩⟨rr| + H.c. + Δ Σ_{i<j}|rr⟩⟨rr|`.
fn effective_terms(
    space: &CompositeSpace,
    levels: &[&str],
    n: usize,
    p: &ModelParams,
    omega_eff: Option<Coefficient>,
) -> Result<TimeDependentOperator> {
    let d = p.derived();
    let er = local(levels, "e", "r")?;
    let rr = local(levels, "r", "r")?;
    let block = pair_sum(space, n, &er, &er)?.plus_hc() * d.lambda + pair_sum(space, n, &rr, &rr)? * d.delta;
    let mut ge = Operator::zeros(space);
    for i in 0..n {
        ge += tr(space, i, "g", "e")?;
    }
    let h = TimeDependentOperator::constant(block);
    match omega_eff {
        None => h.add_constant(&(ge.plus_hc() * d.omega_eff)),
        Some(c) => h.with_hermitian_term(c, ge),
    }
}

/// Effective two-atom Hamiltonian on the full 16-dim space (zero `|p⟩` sector).
pub fn effective_two_atom_hamiltonian(p: &ModelParams) -> Result<Operator> {
    p.validate()?;
    require_atoms(p, 2)?;
    let space = atoms_space(2, &ATOM_LEVELS)?;
    Ok(effective_terms(&space, &ATOM_LEVELS, 2, p, None)?.constant_part().clone())
}

/// Effective decay channels `R_mp = √(γ_p/2)|m⟩(Ω_a⟨g| + Ω_b⟨e|)/Δ_p`,
/// `m ∈ {g, e}`, per atom, plus `√γ_r|e⟩⟨r|` when enabled and the atoms keep
/// a Rydberg level.
pub fn effective_decay_operators(
    space: &CompositeSpace,
    n: usize,
    p: &ModelParams,
    drives: Option<&DrivePair>,
) -> Result<Vec<TimeDependentOperator>> {
    let mut ops = Vec::new();
    if p.gamma_p > 0.0 && p.delta_p > 0.0 {
        let s = (p.gamma_p / 2.0).sqrt() / p.delta_p;
        for i in 0..n {
            for m in ["g", "e"] {
                let from_g = tr(space, i, m, "g")?;
                let from_e = tr(space, i, m, "e")?;
                match drives {
                    None => push_nonzero(&mut ops, from_g * (s * p.omega_a) + from_e * (s * p.omega_b)),
                    Some(d) => {
                        let (a, b) = (d.omega_a.clone(), d.omega_b.clone());
                        ops.push(
                            TimeDependentOperator::zeros(space)
                                .with_term(Arc::new(move |t| a(t) * s), from_g)?
                                .with_term(Arc::new(move |t| b(t) * s), from_e)?,
                        );
                    }
                }
            }
        }
    }
    if p.rydberg_decay_effective && p.gamma_r > 0.0 {
        let has_r = space.subsystems()[0].level_index("r").is_ok();
        if has_r {
            for i in 0..n {
                push_nonzero(&mut ops, tr(space, i, "e", "r")? * p.gamma_r.sqrt());
            }
        }
    }
    Ok(ops)
}

/// Effective two-atom model on the 16-dim space, optionally with
/// time-dependent drives (Raman coupling `Ω̄_a Ω_b/Δ_p`).
pub fn effective_two_atom_driven(p: &ModelParams, drives: Option<&DrivePair>) -> Result<ModelBundle> {
    p.validate()?;
    require_atoms(p, 2)?;
    let space = atoms_space(2, &ATOM_LEVELS)?;
    let coupling = drives.map(|d| d.raman(p.delta_p));
    Ok(ModelBundle {
        hamiltonian: effective_terms(&space, &ATOM_LEVELS, 2, p, coupling)?,
        collapse: effective_decay_operators(&space, 2, p, drives)?,
        feedback: None,
    })
}

/// Effective model on `{g, e, r}` atoms (`n_atoms` of them) with every
/// pairwise antiblockade block resolved.
pub fn antiblockade_effective_model(p: &ModelParams, drives: Option<&DrivePair>) -> Result<ModelBundle> {
    p.validate()?;
    let n = p.n_atoms;
    let space = atoms_space(n, &RYDBERG_LEVELS)?;
    let coupling = drives.map(|d| d.raman(p.delta_p));
    Ok(ModelBundle {
        hamiltonian: effective_terms(&space, &RYDBERG_LEVELS, n, p, coupling)?,
        collapse: effective_decay_operators(&space, n, p, drives)?,
        feedback: None,
    })
}

/// `√2 Ω_eff |gg⟩⟨T| + H.c.` on two qubits.
pub fn ground_blockade_hamiltonian(p: &ModelParams) -> Result<Operator> {
    p.validate()?;
    let space = atoms_space(2, &QUBIT_LEVELS)?;
    let d = p.derived();
    let g = local(&QUBIT_LEVELS, "g", "g")?;
    let ge = local(&QUBIT_LEVELS, "g", "e")?;
    let h = Operator::product(&space, &[g.clone(), ge.clone()])? + Operator::product(&space, &[ge, g])?;
    Ok(h.plus_hc() * d.omega_eff)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::StateLibrary;
    use crate::qspace::{QuantumState, ALGEBRA_TOL};

    fn generic() -> ModelParams {
        ModelParams {
            omega_a: 0.7,
            omega_b: 0.9,
            omega_c: 1.3,
            delta_p: 40.0,
            delta_r: 20.0,
            interaction: 38.0,
            gamma_p: 1.0,
            gamma_r: 0.01,
            ..Default::default()
        }
    }

    fn el(h: &Operator, row: &QuantumState, col: &QuantumState) -> C64 {
        h.element(row, col).unwrap()
    }

    #[test]
    fn full_hamiltonian_elements() {
        let p = generic();
        let h = full_two_atom_hamiltonian(&p, None).unwrap().at(0.0);
        let s = h.space().clone();
        let k = |a: &str, b: &str| QuantumState::basis_ket(&s, &[a, b]).unwrap();
        assert!((el(&h, &k("p", "g"), &k("g", "g")) - re(0.7)).norm() < 1e-15);
        assert!((el(&h, &k("r", "r"), &k("r", "r")) - re(38.0 - 40.0)).norm() < 1e-12);
        assert!((el(&h, &k("r", "g"), &k("e", "g")) - re(1.3)).norm() < 1e-15);
        assert!(h.hermitian_defect() < ALGEBRA_TOL);
    }

    #[test]
    fn undriven_interaction_only() {
        let p = ModelParams {
            interaction: 1.0,
            delta_r: 20.0,
            stark_compensation: false,
            ..Default::default()
        };
        let h = full_two_atom_hamiltonian(&p, None).unwrap().at(0.0);
        let s = h.space().clone();
        let rr = s.index_of(&["r", "r"]).unwrap();
        assert!((h.matrix()[(rr, rr)] - re(1.0 - 40.0)).norm() < 1e-12);
        // Besides |rr⟩ only the single-atom Rydberg detunings survive.
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                let v = h.matrix()[(i, j)];
                if i != j {
                    assert_eq!(v, re(0.0));
                } else if i != rr {
                    let nr = s.labels_of(i).iter().filter(|l| **l == "r").count() as f64;
                    assert_eq!(v, re(-20.0 * nr));
                }
            }
        }
    }

    #[test]
    fn wrong_atom_count() {
        let p = ModelParams {
            n_atoms: 3,
            ..generic()
        };
        assert!(matches!(full_two_atom_hamiltonian(&p, None), Err(Error::Configuration(_))));
    }

    #[test]
    fn driven_hamiltonian_matches_constant() {
        let p = generic();
        let d = DrivePair::from_params(&p);
        let a = full_two_atom_hamiltonian(&p, None).unwrap().at(1.0);
        let b = full_two_atom_hamiltonian(&p, Some(&d)).unwrap().at(1.0);
        assert!((&a - &b).norm() < 1e-13);
    }

    #[test]
    fn effective_block_eigenvalues() {
        // Δ = 0, λ = 10 Ω_eff
        let p = ModelParams {
            delta_p: 100.0,
            delta_r: 20.0,
            ..Default::default()
        }
        .with_effective_couplings(0.01, 0.1, 0.0)
        .unwrap();
        let h = effective_two_atom_hamiltonian(&p).unwrap();
        let s = h.space().clone();
        let lib = StateLibrary::new(&s).unwrap();
        let (ee, rr) = (lib.ee().unwrap(), lib.rr().unwrap());
        let block = nalgebra::DMatrix::from_fn(2, 2, |i, j| {
            let b = [&ee, &rr];
            h.element(b[i], b[j]).unwrap()
        });
        let eig = nalgebra::SymmetricEigen::new(block).eigenvalues;
        let mut v: Vec<f64> = eig.iter().copied().collect();
        v.sort_by(f64::total_cmp);
        assert!((v[0] + 0.1).abs() < 1e-12 && (v[1] - 0.1).abs() < 1e-12);
        let t = lib.triplet().unwrap();
        assert!((h.element(&lib.gg().unwrap(), &t).unwrap() - re(2f64.sqrt() * 0.01)).norm() < 1e-15);
        assert!(h.hermitian_defect() < ALGEBRA_TOL);
        // nothing couples into or out of the |p⟩ sector
        let pg = QuantumState::basis_ket(&s, &["p", "g"]).unwrap();
        assert_eq!(h.element(&pg, &pg).unwrap().norm(), 0.0);
        let np = Operator::transition(&s, "atom1", "p", "p").unwrap();
        assert!(h.commutator(&np).unwrap().is_zero());
    }

    #[test]
    fn effective_zero_raman_keeps_block_only() {
        let p = ModelParams {
            delta_p: 100.0,
            delta_r: 20.0,
            ..Default::default()
        }
        .with_effective_couplings(0.0, 0.1, 0.3)
        .unwrap();
        let h = effective_two_atom_hamiltonian(&p).unwrap();
        let s = h.space();
        let allowed = [s.index_of(&["e", "e"]).unwrap(), s.index_of(&["r", "r"]).unwrap()];
        for ((i, j), v) in h.matrix().iter().enumerate().map(|(k, v)| ((k % 16, k / 16), v)) {
            if v.norm() > 0.0 {
                assert!(allowed.contains(&i) && allowed.contains(&j));
            }
        }
    }

    #[test]
    fn ground_blockade_spectrum_and_ee_decoupled() {
        let p = ModelParams {
            omega_a: 1.0,
            omega_b: 2.0,
            delta_p: 10.0,
            ..Default::default()
        };
        let h = ground_blockade_hamiltonian(&p).unwrap();
        let w = 2f64.sqrt() * 0.2;
        let ev = h.hermitian_eigenvalues();
        let want = [-w, 0.0, 0.0, w];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let lib = StateLibrary::new(h.space()).unwrap();
        let ee = lib.ee().unwrap();
        assert_eq!(h.apply(&ee).unwrap().norm_or_trace(), 0.0);
        assert!(h.hermitian_defect() < ALGEBRA_TOL);
    }

    #[test]
    fn reduced_decay_with_equal_drives() {
        let p = ModelParams {
            omega_a: 2.0,
            omega_b: 2.0,
            delta_p: 20.0,
            gamma_p: 0.5,
            ..Default::default()
        };
        let space = atoms_space(2, &QUBIT_LEVELS).unwrap();
        let ops = effective_decay_operators(&space, 2, &p, None).unwrap();
        assert_eq!(ops.len(), 4);
        let want = (0.25f64).sqrt() * 0.1;
        let r = ops[0].at(0.0);
        let lib = StateLibrary::new(&space).unwrap();
        let k = |a: &str, b: &str| lib.ket(&[a, b]).unwrap();
        assert!((r.element(&k("g", "g"), &k("g", "g")).unwrap() - re(want)).norm() < 1e-15);
        assert!((r.element(&k("g", "g"), &k("e", "g")).unwrap() - re(want)).norm() < 1e-15);
    }
}
