use std::f64::consts::SQRT_2;

use super::atom_label;
use crate::error::{Error, Result};
use crate::qspace::{CompositeSpace, QuantumState, C64};

/// Named two- and three-atom states on an atomic space `atom1 ⊗ atom2 [⊗ atom3]`.
///
/// Any level set works as long as it contains the labels a given state needs,
/// so `T` and `S` exist on qubit, `{g,e,r}` and full four-level atoms alike.
#[derive(Clone, Debug)]
pub struct StateLibrary {
    space: CompositeSpace,
    n_atoms: usize,
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

impl StateLibrary {
    pub fn new(space: &CompositeSpace) -> Result<Self> {
        let n_atoms = space.subsystems().len();
        for (i, s) in space.subsystems().iter().enumerate() {
            if s.label != atom_label(i) {
                return Err(Error::InvalidSpace(format!(
                    "state library expects atom subsystems only, found `{}`",
                    s.label
                )));
            }
        }
        Ok(Self {
            space: space.clone(),
            n_atoms,
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn ket(&self, labels: &[&str]) -> Result<QuantumState> {
        QuantumState::basis_ket(&self.space, labels)
    }

    fn require(&self, n: usize) -> Result<()> {
        if self.n_atoms == n {
            Ok(())
        } else {
            Err(Error::Configuration(format!("state needs {n} atoms, space has {}", self.n_atoms)))
        }
    }

    fn sym2(&self, a: &str, b: &str, sign: f64) -> Result<QuantumState> {
        self.require(2)?;
        let x = self.ket(&[a, b])?;
        let y = self.ket(&[b, a])?;
        QuantumState::superposition(&[(c(1.0 / SQRT_2), &x), (c(sign / SQRT_2), &y)])
    }

    pub fn gg(&self) -> Result<QuantumState> {
        self.require(2)?;
        self.ket(&["g", "g"])
    }

    pub fn ee(&self) -> Result<QuantumState> {
        self.require(2)?;
        self.ket(&["e", "e"])
    }

    pub fn rr(&self) -> Result<QuantumState> {
        self.require(2)?;
        self.ket(&["r", "r"])
    }

    /// `(|ge⟩ + |eg⟩)/√2`
    pub fn triplet(&self) -> Result<QuantumState> {
        self.sym2("g", "e", 1.0)
    }

    /// `(|ge⟩ − |eg⟩)/√2`
    pub fn singlet(&self) -> Result<QuantumState> {
        self.sym2("g", "e", -1.0)
    }

    /// `(|gp⟩ + |pg⟩)/√2`
    pub fn phi(&self) -> Result<QuantumState> {
        self.sym2("g", "p", 1.0)
    }

    /// `(|er⟩ + |re⟩)/√2`
    pub fn chi(&self) -> Result<QuantumState> {
        self.sym2("e", "r", 1.0)
    }

    /// `cos α|rr⟩ + sin α|ee⟩`
    pub fn psi_plus(&self, alpha: f64) -> Result<QuantumState> {
        let (rr, ee) = (self.rr()?, self.ee()?);
        QuantumState::superposition(&[(c(alpha.cos()), &rr), (c(alpha.sin()), &ee)])
    }

    /// `cos α|ee⟩ − sin α|rr⟩`
    pub fn psi_minus(&self, alpha: f64) -> Result<QuantumState> {
        let (rr, ee) = (self.rr()?, self.ee()?);
        QuantumState::superposition(&[(c(-alpha.sin()), &rr), (c(alpha.cos()), &ee)])
    }

    pub fn ggg(&self) -> Result<QuantumState> {
        self.require(3)?;
        self.ket(&["g", "g", "g"])
    }

    /// `(|egg⟩ + |geg⟩ + |gge⟩)/√3`
    pub fn w(&self) -> Result<QuantumState> {
        self.three(&[1.0, 1.0, 1.0], 3f64.sqrt())
    }

    /// `(|gge⟩ + |geg⟩ − 2|egg⟩)/√6`
    pub fn dfs(&self) -> Result<QuantumState> {
        self.three(&[-2.0, 1.0, 1.0], 6f64.sqrt())
    }

    /// Weights on `|egg⟩, |geg⟩, |gge⟩`.
    fn three(&self, w: &[f64; 3], norm: f64) -> Result<QuantumState> {
        self.require(3)?;
        let kets = [
            self.ket(&["e", "g", "g"])?,
            self.ket(&["g", "e", "g"])?,
            self.ket(&["g", "g", "e"])?,
        ];
        QuantumState::superposition(&[
            (c(w[0] / norm), &kets[0]),
            (c(w[1] / norm), &kets[1]),
            (c(w[2] / norm), &kets[2]),
        ])
    }

    /// Looks a state up by name: `gg, ee, rr, T, S, Phi, chi, ggg, W, DFS`.
    pub fn by_name(&self, name: &str) -> Result<QuantumState> {
        match name {
            "gg" => self.gg(),
            "ee" => self.ee(),
            "rr" => self.rr(),
            "T" => self.triplet(),
            "S" => self.singlet(),
            "Phi" => self.phi(),
            "chi" => self.chi(),
            "ggg" => self.ggg(),
            "W" => self.w(),
            "DFS" => self.dfs(),
            other => Err(Error::InvalidParameter(format!("unknown named state `{other}`"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{atoms_space, ATOM_LEVELS, QUBIT_LEVELS};

    #[test]
    fn two_atom_states_orthonormal() {
        let lib = StateLibrary::new(&atoms_space(2, &ATOM_LEVELS).unwrap()).unwrap();
        for name in ["gg", "ee", "rr", "T", "S", "Phi", "chi"] {
            let s = lib.by_name(name).unwrap();
            assert!((s.norm_or_trace() - 1.0).abs() < 1e-12, "{name}");
        }
        assert!(lib.triplet().unwrap().inner(&lib.singlet().unwrap()).unwrap().norm() < 1e-15);
        for alpha in [0.0, 0.3, 1.2] {
            let p = lib.psi_plus(alpha).unwrap();
            let m = lib.psi_minus(alpha).unwrap();
            assert!(p.inner(&m).unwrap().norm() < 1e-15);
        }
        assert!(lib.w().is_err());
    }

    #[test]
    fn three_atom_states_orthonormal() {
        let lib = StateLibrary::new(&atoms_space(3, &QUBIT_LEVELS).unwrap()).unwrap();
        let (w, d) = (lib.w().unwrap(), lib.dfs().unwrap());
        assert!((w.norm_or_trace() - 1.0).abs() < 1e-12);
        assert!((d.norm_or_trace() - 1.0).abs() < 1e-12);
        assert!(w.inner(&d).unwrap().norm() < 1e-15);
        assert!(lib.by_name("X").is_err());
    }

    #[test]
    fn missing_level_reported() {
        let lib = StateLibrary::new(&atoms_space(2, &QUBIT_LEVELS).unwrap()).unwrap();
        assert!(matches!(lib.rr(), Err(Error::UnknownLevel { .. })));
    }
}
