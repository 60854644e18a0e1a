//! Hamiltonians, collapse operators and named states for two and three
//! N-type Rydberg atoms, optionally coupled to a lossy cavity mode.
//!
//! All Hamiltonians follow the rotating-frame sign convention in which the
//! intermediate level carries `−Δ_p|p⟩⟨p|`, each Rydberg excitation carries
//! `−Δ_r|r⟩⟨r|`, and a doubly excited pair picks up the interaction `U`, so
//! `⟨rr|H|rr⟩ = U − 2Δ_r`.
//!
//! Effective models are expressed through [`DerivedParams`]:
//!
//! | symbol | definition |
//! |---|---|
//! | `Ω_eff` | `Ω_a Ω_b / Δ_p` |
//! | `λ` | `2 Ω_c² / Δ_r` |
//! | `Δ` | `U − 2Δ_r + 2Ω_c²/Δ_r` |
//! | `g_eff` | `g Ω_b / Δ_p` |
//! | `Γ` | `4 g_eff² / κ` |
//! | `γ_eff` | `γ_p Ω_a Ω_b / (2 Δ_p²)` |

mod cavity;
mod single_atom;
mod states;
mod three_atom;
mod two_atom;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dynamics::{FeedbackLoop, LindbladProblem};
use crate::error::{Error, Result};
use crate::qspace::{Coefficient, CompositeSpace, Operator, QuantumState, TimeDependentOperator, C64};

pub use cavity::{cavity_feedback_model, collective_lowering, feedback_unitary, CavityLevel};
pub use single_atom::{single_atom_model, SingleAtomLevel};
pub use states::StateLibrary;
pub use three_atom::{three_atom_models, ThreeAtomVariant};
pub use two_atom::{
    antiblockade_effective_model, effective_decay_operators, effective_two_atom_driven,
    effective_two_atom_hamiltonian, full_two_atom_collapse, full_two_atom_hamiltonian, full_two_atom_model,
    ground_blockade_hamiltonian,
};

/// Level labels of one N-type atom.
pub const ATOM_LEVELS: [&str; 4] = ["g", "e", "p", "r"];
/// Ground-state qubit levels only.
pub const QUBIT_LEVELS: [&str; 2] = ["g", "e"];
/// Ground states plus the Rydberg level (intermediate level eliminated).
pub const RYDBERG_LEVELS: [&str; 3] = ["g", "e", "r"];
/// Label of the cavity subsystem.
pub const CAVITY: &str = "cavity";

pub fn atom_label(i: usize) -> String {
    format!("atom{}", i + 1)
}

/// `n` atoms with the given level set, labeled `atom1..atomN`.
pub fn atoms_space(n: usize, levels: &[&str]) -> Result<CompositeSpace> {
    CompositeSpace::new(
        (0..n)
            .map(|i| crate::qspace::Subsystem::new(atom_label(i), levels))
            .collect(),
    )
}

/// `n` atoms followed by a cavity Fock register truncated at `n_fock` photons.
pub fn atoms_with_cavity(n: usize, levels: &[&str], n_fock: usize) -> Result<CompositeSpace> {
    let fock: Vec<String> = (0..=n_fock).map(|k| k.to_string()).collect();
    let mut subs: Vec<_> = (0..n)
        .map(|i| crate::qspace::Subsystem::new(atom_label(i), levels))
        .collect();
    subs.push(crate::qspace::Subsystem::new(CAVITY, &fock));
    CompositeSpace::new(subs)
}

/// Which feedback unitary follows a detected emission.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackForm {
    /// `exp[−iη σx⊗I⊗…]` on atom 1.
    #[default]
    Exact,
    /// `exp[−iη σx⊗|g…g⟩⟨g…g|]`, rotation of atom 1 conditioned on the others
    /// being in `|g⟩`.
    Conditional,
}

/// Physical parameters shared by every model. Frequencies are angular.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Rabi frequency `|g⟩ ↔ |p⟩`.
    pub omega_a: f64,
    /// Rabi frequency `|e⟩ ↔ |p⟩`.
    pub omega_b: f64,
    /// Rabi frequency `|e⟩ ↔ |r⟩`.
    pub omega_c: f64,
    pub delta_p: f64,
    pub delta_r: f64,
    /// Rydberg–Rydberg interaction `U`.
    pub interaction: f64,
    pub gamma_p: f64,
    pub gamma_r: f64,
    /// Atom–cavity coupling on `|g⟩ ↔ |p⟩`.
    pub g: f64,
    pub kappa: f64,
    /// Microwave Rabi frequency `ω` on `|g⟩ ↔ |e⟩`.
    pub omega_mw: f64,
    /// Feedback rotation angle `η` (radians).
    pub eta: f64,
    pub n_atoms: usize,
    pub n_fock: usize,
    /// Add counter-terms cancelling the single-atom Stark shifts.
    pub stark_compensation: bool,
    /// Attach `√γ_r |e⟩⟨r|` to effective models that keep `|r⟩`.
    pub rydberg_decay_effective: bool,
    pub feedback_form: FeedbackForm,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            omega_a: 0.0,
            omega_b: 0.0,
            omega_c: 0.0,
            delta_p: 0.0,
            delta_r: 0.0,
            interaction: 0.0,
            gamma_p: 0.0,
            gamma_r: 0.0,
            g: 0.0,
            kappa: 0.0,
            omega_mw: 0.0,
            eta: 0.0,
            n_atoms: 2,
            n_fock: 3,
            stark_compensation: true,
            rydberg_decay_effective: false,
            feedback_form: FeedbackForm::Exact,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        let reals = [
            ("omega_a", self.omega_a),
            ("omega_b", self.omega_b),
            ("omega_c", self.omega_c),
            ("delta_p", self.delta_p),
            ("delta_r", self.delta_r),
            ("interaction", self.interaction),
            ("gamma_p", self.gamma_p),
            ("gamma_r", self.gamma_r),
            ("g", self.g),
            ("kappa", self.kappa),
            ("omega_mw", self.omega_mw),
            ("eta", self.eta),
        ];
        for (name, v) in reals {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite")));
            }
        }
        for (name, v) in [("gamma_p", self.gamma_p), ("gamma_r", self.gamma_r), ("kappa", self.kappa)] {
            if v < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be nonnegative")));
            }
        }
        if (self.omega_a != 0.0 || self.omega_b != 0.0 || self.g != 0.0) && self.delta_p <= 0.0 {
            return Err(Error::InvalidParameter(
                "delta_p must be positive when the intermediate level is driven".into(),
            ));
        }
        if self.omega_c != 0.0 && self.delta_r <= 0.0 {
            return Err(Error::InvalidParameter(
                "delta_r must be positive when the Rydberg level is driven".into(),
            ));
        }
        if self.g > 0.0 && self.n_fock < 1 {
            return Err(Error::InvalidParameter("n_fock must be at least 1 when g > 0".into()));
        }
        if !(2..=3).contains(&self.n_atoms) {
            return Err(Error::InvalidParameter(format!("n_atoms = {} (expected 2 or 3)", self.n_atoms)));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams::from(self)
    }

    /// Sets `Ω_a = Ω_b`, `Ω_c` and `U` so the effective couplings become
    /// `(Ω_eff, λ, Δ)` at the current `Δ_p` and `Δ_r`.
    pub fn with_effective_couplings(mut self, omega_eff: f64, lambda: f64, delta: f64) -> Result<Self> {
        if self.delta_p <= 0.0 || self.delta_r <= 0.0 {
            return Err(Error::InvalidParameter(
                "delta_p and delta_r must be positive to invert the effective couplings".into(),
            ));
        }
        if omega_eff < 0.0 || lambda < 0.0 {
            return Err(Error::InvalidParameter("omega_eff and lambda must be nonnegative".into()));
        }
        let omega = (omega_eff * self.delta_p).sqrt();
        self.omega_a = omega;
        self.omega_b = omega;
        self.omega_c = (lambda * self.delta_r / 2.0).sqrt();
        self.interaction = delta + 2.0 * self.delta_r - lambda;
        Ok(self)
    }
}

/// Effective couplings implied by a [`ModelParams`] record.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub omega_eff: f64,
    pub lambda: f64,
    pub delta: f64,
    pub g_eff: f64,
    /// Collective amplitude damping rate `Γ`.
    pub gamma_collective: f64,
    pub gamma_eff: f64,
}

impl From<&ModelParams> for DerivedParams {
    fn from(p: &ModelParams) -> Self {
        let ratio = |num: f64, den: f64| if num == 0.0 { 0.0 } else { num / den };
        let omega_eff = ratio(p.omega_a * p.omega_b, p.delta_p);
        let lambda = ratio(2.0 * p.omega_c * p.omega_c, p.delta_r);
        let g_eff = ratio(p.g * p.omega_b, p.delta_p);
        Self {
            omega_eff,
            lambda,
            delta: p.interaction - 2.0 * p.delta_r + lambda,
            g_eff,
            gamma_collective: ratio(4.0 * g_eff * g_eff, p.kappa),
            gamma_eff: ratio(p.gamma_p * p.omega_a * p.omega_b, 2.0 * p.delta_p * p.delta_p),
        }
    }
}

/// Eigenstructure of the `{|ee⟩, |rr⟩}` antiblockade block
/// `λ(|ee⟩⟨rr| + H.c.) + Δ|rr⟩⟨rr|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockadeSpectrum {
    /// Mixing angle with `|Ψ₊⟩ = cos α|rr⟩ + sin α|ee⟩`.
    pub alpha: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub r1: f64,
    pub r2: f64,
}

pub fn blockade_spectrum(lambda: f64, delta: f64, omega_eff: f64) -> Result<BlockadeSpectrum> {
    if omega_eff == 0.0 || !omega_eff.is_finite() {
        return Err(Error::InvalidParameter("omega_eff must be finite and nonzero".into()));
    }
    if !lambda.is_finite() || !delta.is_finite() {
        return Err(Error::InvalidParameter("lambda and delta must be finite".into()));
    }
    let root = (delta * delta + 4.0 * lambda * lambda).sqrt();
    let alpha = (2.0 * lambda).atan2(delta + root);
    let e_plus = (delta + root) / 2.0;
    // E₋ via the product E₊E₋ = −λ² avoids cancellation when Δ ≫ λ.
    let e_minus = if e_plus != 0.0 { -lambda * lambda / e_plus } else { (delta - root) / 2.0 };
    let s2 = std::f64::consts::SQRT_2 * omega_eff;
    Ok(BlockadeSpectrum {
        alpha,
        e_plus,
        e_minus,
        r1: (e_plus / (s2 * alpha.sin())).abs(),
        r2: (e_minus / (s2 * alpha.cos())).abs(),
    })
}

/// Complex drive amplitudes `Ω_a(t)`, `Ω_b(t)`.
#[derive(Clone)]
pub struct DrivePair {
    pub omega_a: Coefficient,
    pub omega_b: Coefficient,
}

impl DrivePair {
    pub fn constant(a: C64, b: C64) -> Self {
        Self {
            omega_a: Arc::new(move |_| a),
            omega_b: Arc::new(move |_| b),
        }
    }

    pub fn from_params(p: &ModelParams) -> Self {
        Self::constant(C64::new(p.omega_a, 0.0), C64::new(p.omega_b, 0.0))
    }

    /// Two-photon coupling `⟨g|H_eff|e⟩ = Ω̄_a(t) Ω_b(t) / Δ_p`.
    pub fn raman(&self, delta_p: f64) -> Coefficient {
        let (a, b) = (self.omega_a.clone(), self.omega_b.clone());
        Arc::new(move |t| a(t).conj() * b(t) / delta_p)
    }
}

impl std::fmt::Debug for DrivePair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("DrivePair { .. }")
    }
}

/// Hamiltonian, collapse channels and optional feedback of one model.
#[derive(Clone, Debug)]
pub struct ModelBundle {
    pub hamiltonian: TimeDependentOperator,
    pub collapse: Vec<TimeDependentOperator>,
    pub feedback: Option<FeedbackLoop>,
}

impl ModelBundle {
    pub fn space(&self) -> &CompositeSpace {
        self.hamiltonian.space()
    }

    pub fn into_problem(self, initial: QuantumState) -> Result<LindbladProblem> {
        let mut problem = LindbladProblem::new(self.hamiltonian, initial)?;
        for c in self.collapse {
            problem = problem.with_collapse(c)?;
        }
        if let Some(fb) = self.feedback {
            problem = problem.with_feedback(fb)?;
        }
        Ok(problem)
    }
}

/// Keeps only channels with a nonzero operator.
pub(crate) fn push_nonzero(ops: &mut Vec<TimeDependentOperator>, op: Operator) {
    if !op.is_zero() {
        ops.push(TimeDependentOperator::constant(op));
    }
}

/// `Σ_{i<j} A_i ⊗ B_j` for local operators `a`, `b` on the listed atoms.
pub(crate) fn pair_sum(
    space: &CompositeSpace,
    n_atoms: usize,
    a: &crate::qspace::CMatrix,
    b: &crate::qspace::CMatrix,
) -> Result<Operator> {
    let mut out = Operator::zeros(space);
    for i in 0..n_atoms {
        for j in i + 1..n_atoms {
            let oi = Operator::embed(space, &atom_label(i), a)?;
            let oj = Operator::embed(space, &atom_label(j), b)?;
            out += &oi * &oj;
        }
    }
    Ok(out)
}

/// Local `|to⟩⟨from|` matrix on a subsystem with the given level list.
pub(crate) fn local(levels: &[&str], to: &str, from: &str) -> Result<crate::qspace::CMatrix> {
    let find = |l: &str| {
        levels.iter().position(|x| *x == l).ok_or_else(|| Error::UnknownLevel {
            subsystem: "atom".into(),
            label: l.to_owned(),
        })
    };
    Ok(crate::qspace::transition_matrix(levels.len(), find(to)?, find(from)?))
}
