use serde::{Deserialize, Serialize};

use super::two_atom::effective_decay_operators;
use super::{atoms_space, push_nonzero, ModelBundle, ModelParams, QUBIT_LEVELS};
use crate::error::Result;
use crate::qspace::{Operator, TimeDependentOperator};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SingleAtomLevel {
    /// Three levels `{g, e, p}` with spontaneous emission from `|p⟩`.
    Full,
    /// Two-level Raman model with effective decay operators.
    Reduced,
}

/// One Λ atom driven on `g↔p` and `e↔p`, as a full three-level or a reduced
/// two-level model.
pub fn single_atom_model(p: &ModelParams, level: SingleAtomLevel) -> Result<ModelBundle> {
    p.validate()?;
    match level {
        SingleAtomLevel::Full => {
            let space = atoms_space(1, &["g", "e", "p"])?;
            let t = |to: &str, from: &str| Operator::transition(&space, "atom1", to, from);
            let mut h = t("p", "g")?.plus_hc() * p.omega_a + t("p", "e")?.plus_hc() * p.omega_b
                + t("p", "p")? * -p.delta_p;
            if p.stark_compensation && p.delta_p != 0.0 {
                h += t("g", "g")? * (-p.omega_a * p.omega_a / p.delta_p);
                h += t("e", "e")? * (-p.omega_b * p.omega_b / p.delta_p);
            }
            let sp = (p.gamma_p / 2.0).sqrt();
            let mut collapse = Vec::new();
            push_nonzero(&mut collapse, t("g", "p")? * sp);
            push_nonzero(&mut collapse, t("e", "p")? * sp);
            Ok(ModelBundle {
                hamiltonian: TimeDependentOperator::constant(h),
                collapse,
                feedback: None,
            })
        }
        SingleAtomLevel::Reduced => {
            let space = atoms_space(1, &QUBIT_LEVELS)?;
            let h = Operator::transition(&space, "atom1", "g", "e")?.plus_hc() * p.derived().omega_eff;
            Ok(ModelBundle {
                hamiltonian: TimeDependentOperator::constant(h),
                collapse: effective_decay_operators(&space, 1, p, None)?,
                feedback: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qspace::ALGEBRA_TOL;

    #[test]
    fn reduced_rates_sum_to_gamma_eff() {
        let omega = (0.004f64 * 160.0).sqrt();
        let p = ModelParams {
            omega_a: omega,
            omega_b: omega,
            delta_p: 160.0,
            gamma_p: 1.0,
            ..Default::default()
        };
        let m = single_atom_model(&p, SingleAtomLevel::Reduced).unwrap();
        assert_eq!(m.collapse.len(), 2);
        // Total out-rate of |e⟩: Σ_m ‖R_mp|e⟩‖² = 2·(γ_p/2)(Ω/Δ_p)² = γ_p Ω²/Δ_p²,
        // which is 2γ_eff for Ω_a = Ω_b.
        let total: f64 = m
            .collapse
            .iter()
            .map(|c| {
                let r = c.at(0.0);
                (r.dagger() * r).matrix()[(1, 1)].re
            })
            .sum();
        assert!((total - 2.0 * p.derived().gamma_eff).abs() < 1e-18);
        assert!((p.derived().gamma_eff - 1.25e-5).abs() < 1e-17);
    }

    #[test]
    fn full_model_shape() {
        let p = ModelParams {
            omega_a: 1.0,
            omega_b: 1.5,
            delta_p: 20.0,
            gamma_p: 1.0,
            ..Default::default()
        };
        let m = single_atom_model(&p, SingleAtomLevel::Full).unwrap();
        assert_eq!(m.space().dim(), 3);
        assert_eq!(m.collapse.len(), 2);
        assert!(m.hamiltonian.at(0.0).hermitian_defect() < ALGEBRA_TOL);
    }
}
