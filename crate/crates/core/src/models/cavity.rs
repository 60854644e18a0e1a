use serde::{Deserialize, Serialize};

use super::two_atom::{add_lasers, atomic_collapse, static_four_level};
use super::{
    atom_label, atoms_space, atoms_with_cavity, local, pair_sum, push_nonzero, FeedbackForm, ModelBundle,
    ModelParams, ATOM_LEVELS, CAVITY, QUBIT_LEVELS, RYDBERG_LEVELS,
};
use crate::dynamics::FeedbackLoop;
use crate::error::{Error, Result};
use crate::qspace::{CMatrix, CompositeSpace, Operator, TimeDependentOperator, C64};

/// Elimination level of the cavity-feedback model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CavityLevel {
    /// Four-level atoms, cavity on `g↔p`, lasers `Ω_b`, `Ω_c`, microwave `ω`.
    Full,
    /// `|p⟩` eliminated: `{g, e, r}` atoms with `g_eff a†|g⟩⟨e|` and the
    /// antiblockade block.
    Effective,
    /// Ground-state blockade applied: qubit atoms with
    /// `(g_eff a† + ω) J₋ + H.c.`.
    Blocked,
    /// Cavity eliminated: `ω(J₊ + J₋)` with collective decay `√Γ J₋`.
    Reduced,
    /// As `Reduced` with the feedback unitary applied after each emission.
    ReducedFeedback,
}

impl CavityLevel {
    pub fn has_cavity(self) -> bool {
        matches!(self, Self::Full | Self::Effective | Self::Blocked)
    }
}

/// `J₋ = |g…g⟩ Σ_k ⟨g…e_k…g|` on `n` atoms with the given level set.
pub fn collective_lowering(space: &CompositeSpace, n: usize, levels: &[&str]) -> Result<Operator> {
    let gg = local(levels, "g", "g")?;
    let ge = local(levels, "g", "e")?;
    let mut j = Operator::zeros(space);
    let rest = space.subsystems().len() - n;
    for k in 0..n {
        let mut factors: Vec<CMatrix> = (0..n).map(|i| if i == k { ge.clone() } else { gg.clone() }).collect();
        for s in &space.subsystems()[n..n + rest] {
            factors.push(CMatrix::identity(s.dim(), s.dim()));
        }
        j += Operator::product(space, &factors)?;
    }
    Ok(j)
}

/// `exp[−iη σx⊗I⊗…]` on atom 1 or its blockade-conditioned form
/// `exp[−iη σx⊗|g…g⟩⟨g…g|]`.
pub fn feedback_unitary(space: &CompositeSpace, n: usize, levels: &[&str], eta: f64, form: FeedbackForm) -> Result<Operator> {
    let sx = &local(levels, "g", "e")? + &local(levels, "e", "g")?;
    let generator = match form {
        FeedbackForm::Exact => Operator::embed(space, &atom_label(0), &sx)?,
        FeedbackForm::Conditional => {
            let g = local(levels, "g", "g")?;
            let mut factors = vec![sx];
            factors.extend((1..n).map(|_| g.clone()));
            for s in &space.subsystems()[n..] {
                factors.push(CMatrix::identity(s.dim(), s.dim()));
            }
            Operator::product(space, &factors)?
        }
    };
    Operator::unitary_from_generator(&generator, eta)
}

fn annihilation(space: &CompositeSpace) -> Result<Operator> {
    let d = space.subsystem(CAVITY)?.dim();
    let a = CMatrix::from_fn(d, d, |i, j| if j == i + 1 { C64::new((j as f64).sqrt(), 0.0) } else { C64::new(0.0, 0.0) });
    Operator::embed(space, CAVITY, &a)
}

/// Effective emission from the eliminated `|p⟩`:
/// `√(γ_p/2)/Δ_p · |m⟩(g a⟨g| + Ω_b⟨e|)` for `m ∈ {g, e}`; the cavity part is
/// dropped on spaces without a cavity.
fn eliminated_decay(space: &CompositeSpace, n: usize, p: &ModelParams) -> Result<Vec<TimeDependentOperator>> {
    let mut ops = Vec::new();
    if p.gamma_p <= 0.0 || p.delta_p <= 0.0 {
        return Ok(ops);
    }
    let s = (p.gamma_p / 2.0).sqrt() / p.delta_p;
    let a = space.subsystem_index(CAVITY).ok().map(|_| annihilation(space)).transpose()?;
    for i in 0..n {
        for m in ["g", "e"] {
            let mut op = Operator::transition(space, &atom_label(i), m, "e")? * (s * p.omega_b);
            if let Some(a) = &a {
                op += &(&Operator::transition(space, &atom_label(i), m, "g")? * a) * (s * p.g);
            }
            push_nonzero(&mut ops, op);
        }
    }
    Ok(ops)
}

fn rydberg_decay(space: &CompositeSpace, n: usize, p: &ModelParams, ops: &mut Vec<TimeDependentOperator>) -> Result<()> {
    if p.rydberg_decay_effective && p.gamma_r > 0.0 {
        for i in 0..n {
            push_nonzero(ops, Operator::transition(space, &atom_label(i), "e", "r")? * p.gamma_r.sqrt());
        }
    }
    Ok(())
}

/// Atoms coupled to a lossy cavity whose output drives a feedback rotation of
/// atom 1, at the requested elimination level. `p.n_atoms` may be 2 or 3.
pub fn cavity_feedback_model(p: &ModelParams, level: CavityLevel) -> Result<ModelBundle> {
    p.validate()?;
    let n = p.n_atoms;
    if level.has_cavity() && p.n_fock < 1 {
        return Err(Error::Configuration("cavity model needs n_fock >= 1".into()));
    }
    if level.has_cavity() && p.kappa <= 0.0 {
        return Err(Error::Configuration("cavity model needs kappa > 0".into()));
    }
    let d = p.derived();
    match level {
        CavityLevel::Full => {
            let space = atoms_with_cavity(n, &ATOM_LEVELS, p.n_fock)?;
            let a = annihilation(&space)?;
            let mut h = static_four_level(&space, n, p)?;
            for i in 0..n {
                let lbl = atom_label(i);
                h += (&Operator::transition(&space, &lbl, "p", "g")? * &a).plus_hc() * p.g;
                h += Operator::transition(&space, &lbl, "g", "e")?.plus_hc() * p.omega_mw;
            }
            let h = add_lasers(TimeDependentOperator::constant(h), &space, n, p, None, false)?;
            let atoms = atoms_space(n, &ATOM_LEVELS)?;
            finish(h, atomic_collapse(&space, n, p)?, &space, &atoms, n, &ATOM_LEVELS, a * p.kappa.sqrt(), p)
        }
        CavityLevel::Effective => {
            let space = atoms_with_cavity(n, &RYDBERG_LEVELS, p.n_fock)?;
            let a = annihilation(&space)?;
            let er = local(&RYDBERG_LEVELS, "e", "r")?;
            let rr = local(&RYDBERG_LEVELS, "r", "r")?;
            let mut h = pair_sum(&space, n, &er, &er)?.plus_hc() * d.lambda + pair_sum(&space, n, &rr, &rr)? * d.delta;
            let adag = a.dagger();
            for i in 0..n {
                let ge = Operator::transition(&space, &atom_label(i), "g", "e")?;
                h += (&adag * &ge).plus_hc() * d.g_eff + ge.plus_hc() * p.omega_mw;
            }
            let mut collapse = eliminated_decay(&space, n, p)?;
            rydberg_decay(&space, n, p, &mut collapse)?;
            let atoms = atoms_space(n, &RYDBERG_LEVELS)?;
            finish(h.into(), collapse, &space, &atoms, n, &RYDBERG_LEVELS, a * p.kappa.sqrt(), p)
        }
        CavityLevel::Blocked => {
            let space = atoms_with_cavity(n, &QUBIT_LEVELS, p.n_fock)?;
            let a = annihilation(&space)?;
            let j = collective_lowering(&space, n, &QUBIT_LEVELS)?;
            let drive = &a.dagger() * d.g_eff + Operator::identity(&space) * p.omega_mw;
            let h = (&drive * &j).plus_hc();
            let atoms = atoms_space(n, &QUBIT_LEVELS)?;
            finish(h.into(), eliminated_decay(&space, n, p)?, &space, &atoms, n, &QUBIT_LEVELS, a * p.kappa.sqrt(), p)
        }
        CavityLevel::Reduced | CavityLevel::ReducedFeedback => {
            let space = atoms_space(n, &QUBIT_LEVELS)?;
            let j = collective_lowering(&space, n, &QUBIT_LEVELS)?;
            let h = j.plus_hc() * p.omega_mw;
            let mut collapse = vec![TimeDependentOperator::constant(j * d.gamma_collective.sqrt())];
            let feedback = if level == CavityLevel::ReducedFeedback {
                Some(FeedbackLoop {
                    channel: 0,
                    unitary: feedback_unitary(&space, n, &QUBIT_LEVELS, p.eta, p.feedback_form)?,
                })
            } else {
                None
            };
            collapse.extend(eliminated_decay(&space, n, p)?);
            Ok(ModelBundle {
                hamiltonian: h.into(),
                collapse,
                feedback,
            })
        }
    }
}

/// Puts the cavity loss first among the channels and attaches the feedback
/// unitary to it.
#[allow(clippy::too_many_arguments)]
fn finish(
    h: TimeDependentOperator,
    others: Vec<TimeDependentOperator>,
    space: &CompositeSpace,
    atoms: &CompositeSpace,
    n: usize,
    levels: &[&str],
    loss: Operator,
    p: &ModelParams,
) -> Result<ModelBundle> {
    let mut collapse = vec![TimeDependentOperator::constant(loss)];
    collapse.extend(others);
    let unitary = feedback_unitary(atoms, n, levels, p.eta, p.feedback_form)?.extend_to(space)?;
    Ok(ModelBundle {
        hamiltonian: h,
        collapse,
        feedback: Some(FeedbackLoop { channel: 0, unitary }),
    })
}
