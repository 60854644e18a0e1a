use serde::{Deserialize, Serialize};

use super::cavity::{cavity_feedback_model, collective_lowering, CavityLevel};
use super::two_atom::{antiblockade_effective_model, effective_decay_operators};
use super::{atoms_space, DrivePair, ModelBundle, ModelParams, QUBIT_LEVELS};
use crate::error::{Error, Result};
use crate::qspace::TimeDependentOperator;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThreeAtomVariant {
    /// Blocked qubit model `√3 Ω_eff(t)|ggg⟩⟨W| + H.c.` with per-atom
    /// effective decay. Qubit atoms carry no Rydberg level, so `γ_r` is unused.
    SapEffective,
    /// `{g, e, r}` atoms with every pairwise antiblockade block kept, so
    /// leakage through `|ee⟩`-containing states is resolved.
    SapAntiblockade,
    FeedbackReduced,
    FeedbackBlockedCavity,
}

/// Three-atom models. `drives` supplies the time-dependent `Ω_a`, `Ω_b` of the
/// adiabatic-passage variants and is ignored by the feedback variants.
pub fn three_atom_models(p: &ModelParams, variant: ThreeAtomVariant, drives: Option<&DrivePair>) -> Result<ModelBundle> {
    p.validate()?;
    if p.n_atoms != 3 {
        return Err(Error::Configuration(format!("three-atom model with n_atoms = {}", p.n_atoms)));
    }
    match variant {
        ThreeAtomVariant::SapEffective => {
            let space = atoms_space(3, &QUBIT_LEVELS)?;
            // √3|ggg⟩⟨W| is exactly J₋.
            let j = collective_lowering(&space, 3, &QUBIT_LEVELS)?;
            let h = match drives {
                None => TimeDependentOperator::constant(j.plus_hc() * p.derived().omega_eff),
                Some(d) => TimeDependentOperator::zeros(&space).with_hermitian_term(d.raman(p.delta_p), j)?,
            };
            Ok(ModelBundle {
                hamiltonian: h,
                collapse: effective_decay_operators(&space, 3, p, drives)?,
                feedback: None,
            })
        }
        ThreeAtomVariant::SapAntiblockade => antiblockade_effective_model(p, drives),
        ThreeAtomVariant::FeedbackReduced => cavity_feedback_model(p, CavityLevel::ReducedFeedback),
        ThreeAtomVariant::FeedbackBlockedCavity => cavity_feedback_model(p, CavityLevel::Blocked),
    }
}
