//! Labeled tensor-product Hilbert spaces and dense complex operator algebra.
//!
//! Subsystems are ordered by declaration. Basis index is row-major over the
//! subsystem levels: the first declared subsystem is the most significant
//! digit, so `index(l_1, ..., l_n) = sum_k idx(l_k) * prod_{j>k} d_j`. This
//! matches `A ⊗ B` with `A` acting on the first subsystem and keeps CSV output
//! bit-stable.

mod operator;
mod state;
mod timedep;

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use operator::Operator;
pub use state::{QuantumState, StateData};
pub use timedep::{Coefficient, TimeDependentOperator};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance for operator identities (Hermiticity, commutation).
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Allowed deviation of a pure state's norm from one.
pub const NORM_TOL: f64 = 1e-10;
/// Allowed deviation of a density matrix trace from one.
pub const TRACE_TOL: f64 = 1e-9;
/// Allowed anti-Hermitian part of a density matrix.
pub const HERMITICITY_TOL: f64 = 1e-10;
/// Smallest admissible density-matrix eigenvalue, sign flipped.
pub const POSITIVITY_TOL: f64 = 1e-8;

/// Numerical tolerances used when validating operators and states.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub algebra: f64,
    pub norm: f64,
    pub trace: f64,
    pub hermiticity: f64,
    pub positivity: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            algebra: ALGEBRA_TOL,
            norm: NORM_TOL,
            trace: TRACE_TOL,
            hermiticity: HERMITICITY_TOL,
            positivity: POSITIVITY_TOL,
        }
    }
}

/// One tensor factor: a label plus its ordered level labels.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Subsystem {
    pub label: String,
    pub levels: Vec<String>,
}

impl Subsystem {
    pub fn new<S: Into<String>, L: AsRef<str>>(label: S, levels: &[L]) -> Self {
        Self {
            label: label.into(),
            levels: levels.iter().map(|l| l.as_ref().to_owned()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, level: &str) -> Result<usize> {
        self.levels
            .iter()
            .position(|l| l == level)
            .ok_or_else(|| Error::UnknownLevel {
                subsystem: self.label.clone(),
                label: level.to_owned(),
            })
    }
}

/// An ordered tensor product of labeled subsystems.
///
/// Cloning is cheap; equality compares the subsystem lists.
#[derive(Clone)]
pub struct CompositeSpace {
    subsystems: Arc<[Subsystem]>,
    dim: usize,
}

impl CompositeSpace {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        if subsystems.is_empty() {
            return Err(Error::InvalidSpace("no subsystems".into()));
        }
        for (k, s) in subsystems.iter().enumerate() {
            if s.levels.is_empty() {
                return Err(Error::InvalidSpace(format!("subsystem `{}` has no levels", s.label)));
            }
            for (i, l) in s.levels.iter().enumerate() {
                if s.levels[..i].contains(l) {
                    return Err(Error::InvalidSpace(format!(
                        "duplicate level `{l}` in subsystem `{}`",
                        s.label
                    )));
                }
            }
            if subsystems[..k].iter().any(|o| o.label == s.label) {
                return Err(Error::InvalidSpace(format!("duplicate subsystem `{}`", s.label)));
            }
        }
        let dim = subsystems.iter().map(Subsystem::dim).product();
        Ok(Self {
            subsystems: subsystems.into(),
            dim,
        })
    }

    /// Shorthand for `new` from `(label, levels)` pairs.
    pub fn from_labels(spec: &[(&str, &[&str])]) -> Result<Self> {
        Self::new(spec.iter().map(|(l, lv)| Subsystem::new(*l, lv)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(Subsystem::dim).collect()
    }

    pub fn subsystem_index(&self, label: &str) -> Result<usize> {
        self.subsystems
            .iter()
            .position(|s| s.label == label)
            .ok_or_else(|| Error::UnknownSubsystem(label.to_owned()))
    }

    pub fn subsystem(&self, label: &str) -> Result<&Subsystem> {
        Ok(&self.subsystems[self.subsystem_index(label)?])
    }

    /// Stride of each subsystem in the row-major basis index.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.subsystems.len()];
        for k in (0..self.subsystems.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.subsystems[k + 1].dim();
        }
        strides
    }

    /// Basis index of the product state with one level label per subsystem.
    pub fn index_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<usize> {
        if labels.len() != self.subsystems.len() {
            return Err(Error::Dimension {
                expected: self.subsystems.len(),
                found: labels.len(),
            });
        }
        let mut index = 0;
        for (s, l) in self.subsystems.iter().zip(labels) {
            index = index * s.dim() + s.level_index(l.as_ref())?;
        }
        Ok(index)
    }

    /// Level labels of a basis index, one per subsystem.
    pub fn labels_of(&self, mut index: usize) -> Vec<&str> {
        let mut out = vec![""; self.subsystems.len()];
        for (k, s) in self.subsystems.iter().enumerate().rev() {
            out[k] = &s.levels[index % s.dim()];
            index /= s.dim();
        }
        out
    }

    pub(crate) fn check_same(&self, other: &CompositeSpace) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::SpaceMismatch)
        }
    }
}

impl PartialEq for CompositeSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.subsystems, &other.subsystems) || self.subsystems == other.subsystems
    }
}

impl fmt::Debug for CompositeSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .subsystems
            .iter()
            .map(|s| format!("{}[{}]", s.label, s.levels.join(",")))
            .collect();
        write!(f, "CompositeSpace({})", parts.join(" ⊗ "))
    }
}

/// Kronecker product of two dense matrices.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for q in 0..bc {
                for p in 0..br {
                    out[(i * br + p, j * bc + q)] = aij * b[(p, q)];
                }
            }
        }
    }
    out
}

/// `|i⟩⟨j|` on a `dim`-level system.
pub fn transition_matrix(dim: usize, to: usize, from: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(to, from)] = ONE;
    m
}

/// Frobenius norm of a complex matrix.
pub fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}
