use nalgebra::SymmetricEigen;

use super::{frobenius, CMatrix, CVector, CompositeSpace, Operator, Tolerances, C64, ONE, ZERO};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum StateData {
    Pure(CVector),
    Mixed(CMatrix),
}

/// A pure ket or a density matrix on a [`CompositeSpace`].
#[derive(Clone, Debug, PartialEq)]
pub struct QuantumState {
    space: CompositeSpace,
    data: StateData,
}

impl QuantumState {
    /// Product basis state with one level label per subsystem.
    pub fn basis_ket<S: AsRef<str>>(space: &CompositeSpace, labels: &[S]) -> Result<Self> {
        let idx = space.index_of(labels)?;
        let mut v = CVector::zeros(space.dim());
        v[idx] = ONE;
        Ok(Self {
            space: space.clone(),
            data: StateData::Pure(v),
        })
    }

    /// Validated pure state; the vector must already be normalized.
    pub fn pure(space: &CompositeSpace, vector: CVector) -> Result<Self> {
        let s = Self::from_vector(space, vector)?;
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    /// Pure state from an arbitrary nonzero vector, normalized.
    pub fn normalized(space: &CompositeSpace, vector: CVector) -> Result<Self> {
        let n = vector.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("cannot normalize a zero or non-finite vector".into()));
        }
        Self::from_vector(space, vector / C64::new(n, 0.0))
    }

    /// Linear combination of pure states; the result must have unit norm.
    pub fn superposition(terms: &[(C64, &QuantumState)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidState("empty superposition".into()))?
            .1;
        let mut v = CVector::zeros(first.space.dim());
        for (c, s) in terms {
            first.space.check_same(&s.space)?;
            let sv = s
                .vector()
                .ok_or_else(|| Error::InvalidState("superposition of mixed states".into()))?;
            v += sv * *c;
        }
        Self::pure(&first.space, v)
    }

    /// Validated density matrix.
    pub fn mixed(space: &CompositeSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: matrix.nrows(),
            });
        }
        let s = Self {
            space: space.clone(),
            data: StateData::Mixed(matrix),
        };
        s.validate(&Tolerances::default())?;
        Ok(s)
    }

    pub fn maximally_mixed(space: &CompositeSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            data: StateData::Mixed(CMatrix::identity(n, n) / C64::new(n as f64, 0.0)),
        }
    }

    pub(crate) fn unnormalized(space: CompositeSpace, v: CVector) -> Self {
        Self {
            space,
            data: StateData::Pure(v),
        }
    }

    pub(crate) fn density_unchecked(space: CompositeSpace, m: CMatrix) -> Self {
        Self {
            space,
            data: StateData::Mixed(m),
        }
    }

    fn from_vector(space: &CompositeSpace, vector: CVector) -> Result<Self> {
        if vector.len() != space.dim() {
            return Err(Error::Dimension {
                expected: space.dim(),
                found: vector.len(),
            });
        }
        Ok(Self {
            space: space.clone(),
            data: StateData::Pure(vector),
        })
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn data(&self) -> &StateData {
        &self.data
    }

    pub fn is_pure(&self) -> bool {
        matches!(self.data, StateData::Pure(_))
    }

    pub fn vector(&self) -> Option<&CVector> {
        match &self.data {
            StateData::Pure(v) => Some(v),
            StateData::Mixed(_) => None,
        }
    }

    pub fn density_matrix(&self) -> CMatrix {
        match &self.data {
            StateData::Pure(v) => v * v.adjoint(),
            StateData::Mixed(m) => m.clone(),
        }
    }

    pub fn to_mixed(&self) -> QuantumState {
        Self {
            space: self.space.clone(),
            data: StateData::Mixed(self.density_matrix()),
        }
    }

    /// Norm for pure states, trace for mixed ones.
    pub fn norm_or_trace(&self) -> f64 {
        match &self.data {
            StateData::Pure(v) => v.norm(),
            StateData::Mixed(m) => m.trace().re,
        }
    }

    /// `‖ρ − ρ†‖` (zero for pure states).
    pub fn hermiticity_error(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Mixed(m) => frobenius(&(m - m.adjoint())),
        }
    }

    /// Smallest eigenvalue of the Hermitian part of the density matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        match &self.data {
            StateData::Pure(_) => 0.0,
            StateData::Mixed(m) => {
                let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
                SymmetricEigen::new(h)
                    .eigenvalues
                    .iter()
                    .copied()
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn validate(&self, tol: &Tolerances) -> Result<()> {
        match &self.data {
            StateData::Pure(v) => {
                let n = v.norm();
                if (n - 1.0).abs() > tol.norm {
                    return Err(Error::InvalidState(format!("norm {n} differs from 1")));
                }
            }
            StateData::Mixed(m) => {
                let tr = m.trace();
                if (tr.re - 1.0).abs() > tol.trace || tr.im.abs() > tol.trace {
                    return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
                }
                let h = self.hermiticity_error();
                if h > tol.hermiticity {
                    return Err(Error::InvalidState(format!("non-Hermitian density matrix ({h:e})")));
                }
                let lmin = self.min_eigenvalue();
                if lmin < -tol.positivity {
                    return Err(Error::InvalidState(format!("negative eigenvalue {lmin:e}")));
                }
            }
        }
        Ok(())
    }

    /// `⟨ψ|A|ψ⟩` or `Tr(ρA)`.
    pub fn expectation(&self, op: &Operator) -> Result<C64> {
        self.space.check_same(op.space())?;
        let a = op.matrix();
        Ok(match &self.data {
            StateData::Pure(v) => (v.adjoint() * (a * v))[(0, 0)],
            StateData::Mixed(m) => {
                // Tr(ρA) = Σ_ij ρ_ij A_ji
                let n = m.nrows();
                let mut acc = ZERO;
                for i in 0..n {
                    for j in 0..n {
                        acc += m[(i, j)] * a[(j, i)];
                    }
                }
                acc
            }
        })
    }

    /// `⟨φ|ρ|φ⟩` for a pure target `φ`.
    pub fn population(&self, target: &QuantumState) -> Result<f64> {
        self.space.check_same(&target.space)?;
        let t = target
            .vector()
            .ok_or_else(|| Error::Unsupported("population against a mixed target".into()))?;
        Ok(match &self.data {
            StateData::Pure(v) => t.dotc(v).norm_sqr(),
            StateData::Mixed(m) => (t.adjoint() * m * t)[(0, 0)].re,
        })
    }

    /// `self ⊗ other` on the concatenated space.
    pub fn tensor(&self, other: &QuantumState) -> Result<QuantumState> {
        let mut subs = self.space.subsystems().to_vec();
        subs.extend_from_slice(other.space.subsystems());
        let space = CompositeSpace::new(subs)?;
        let data = match (&self.data, &other.data) {
            (StateData::Pure(a), StateData::Pure(b)) => StateData::Pure(super::kron(
                &CMatrix::from_column_slice(a.len(), 1, a.as_slice()),
                &CMatrix::from_column_slice(b.len(), 1, b.as_slice()),
            )
            .column(0)
            .into_owned()),
            _ => StateData::Mixed(super::kron(&self.density_matrix(), &other.density_matrix())),
        };
        Ok(Self { space, data })
    }

    /// `⟨self|other⟩` for pure states.
    pub fn inner(&self, other: &QuantumState) -> Result<C64> {
        self.space.check_same(&other.space)?;
        match (self.vector(), other.vector()) {
            (Some(a), Some(b)) => Ok(a.dotc(b)),
            _ => Err(Error::InvalidState("inner product needs pure states".into())),
        }
    }

    /// Reduced density operator on the kept subsystems (declaration order).
    pub fn partial_trace<S: AsRef<str>>(&self, keep: &[S]) -> Result<QuantumState> {
        if keep.is_empty() {
            return Err(Error::InvalidParameter("partial trace must keep at least one subsystem".into()));
        }
        let mut kept = vec![false; self.space.subsystems().len()];
        for k in keep {
            kept[self.space.subsystem_index(k.as_ref())?] = true;
        }
        let subs: Vec<_> = self
            .space
            .subsystems()
            .iter()
            .zip(&kept)
            .filter(|(_, &k)| k)
            .map(|(s, _)| s.clone())
            .collect();
        let reduced = CompositeSpace::new(subs)?;
        let dims = self.space.dims();
        let n = self.space.dim();
        // Split each full index into (kept, traced) mixed-radix parts.
        let mut kept_idx = vec![0usize; n];
        let mut traced_idx = vec![0usize; n];
        for (full, (ki, ti)) in kept_idx.iter_mut().zip(traced_idx.iter_mut()).enumerate() {
            let mut rem = full;
            let (mut kv, mut km, mut tv, mut tm) = (0, 1, 0, 1);
            for k in (0..dims.len()).rev() {
                let digit = rem % dims[k];
                rem /= dims[k];
                if kept[k] {
                    kv += digit * km;
                    km *= dims[k];
                } else {
                    tv += digit * tm;
                    tm *= dims[k];
                }
            }
            *ki = kv;
            *ti = tv;
        }
        let rho = self.density_matrix();
        let m = reduced.dim();
        let mut out = CMatrix::zeros(m, m);
        for a in 0..n {
            for b in 0..n {
                if traced_idx[a] == traced_idx[b] {
                    out[(kept_idx[a], kept_idx[b])] += rho[(a, b)];
                }
            }
        }
        Ok(Self {
            space: reduced,
            data: StateData::Mixed(out),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn pair() -> CompositeSpace {
        CompositeSpace::from_labels(&[("atom1", &["g", "e", "p", "r"]), ("atom2", &["g", "e", "p", "r"])])
            .unwrap()
    }

    fn qubits() -> CompositeSpace {
        CompositeSpace::from_labels(&[("q1", &["0", "1"]), ("q2", &["0", "1"])]).unwrap()
    }

    #[test]
    fn ground_ket_is_first_basis_element() {
        let gg = QuantumState::basis_ket(&pair(), &["g", "g"]).unwrap();
        let v = gg.vector().unwrap();
        assert_eq!(v[0], ONE);
        assert_eq!(v.iter().filter(|z| **z != ZERO).count(), 1);
    }

    #[test]
    fn symmetric_superposition() {
        let s = pair();
        let ge = QuantumState::basis_ket(&s, &["g", "e"]).unwrap();
        let eg = QuantumState::basis_ket(&s, &["e", "g"]).unwrap();
        let w = C64::new(FRAC_1_SQRT_2, 0.0);
        let t = QuantumState::superposition(&[(w, &ge), (w, &eg)]).unwrap();
        assert!((t.vector().unwrap().norm() - 1.0).abs() < 1e-15);
        assert!((t.population(&ge).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn unknown_label_error_names_atom() {
        let err = QuantumState::basis_ket(&pair(), &["x", "g"]).unwrap_err();
        assert!(err.to_string().contains("atom1"), "{err}");
    }

    #[test]
    fn expectation_examples() {
        let s = pair();
        let gg = QuantumState::basis_ket(&s, &["g", "g"]).unwrap();
        let ee = QuantumState::basis_ket(&s, &["e", "e"]).unwrap();
        let ge = QuantumState::basis_ket(&s, &["g", "e"]).unwrap();
        let eg = QuantumState::basis_ket(&s, &["e", "g"]).unwrap();
        let w = C64::new(FRAC_1_SQRT_2, 0.0);
        let t = QuantumState::superposition(&[(w, &ge), (w, &eg)]).unwrap();
        let pgg = Operator::projector(&gg).unwrap();
        let pee = Operator::projector(&ee).unwrap();
        assert!((gg.expectation(&pgg).unwrap() - ONE).norm() < 1e-15);
        assert!(t.expectation(&pee).unwrap().norm() < 1e-15);

        let q = CompositeSpace::from_labels(&[("a", &["0", "1"])]).unwrap();
        let z = Operator::new(q.clone(), CMatrix::from_diagonal(&CVector::from_vec(vec![ONE, -ONE]))).unwrap();
        assert!(QuantumState::maximally_mixed(&q).expectation(&z).unwrap().norm() < 1e-15);
    }

    #[test]
    fn expectation_space_mismatch() {
        let gg = QuantumState::basis_ket(&pair(), &["g", "g"]).unwrap();
        assert!(matches!(
            gg.expectation(&Operator::identity(&qubits())),
            Err(Error::SpaceMismatch)
        ));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let q = qubits();
        let a = CMatrix::from_row_slice(2, 2, &[C64::new(0.7, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(0.3, 0.0)]);
        let b = CMatrix::from_row_slice(2, 2, &[C64::new(0.4, 0.0), C64::new(0.0, 0.1), C64::new(0.0, -0.1), C64::new(0.6, 0.0)]);
        let rho = QuantumState::mixed(&q, crate::qspace::kron(&a, &b)).unwrap();
        let ra = rho.partial_trace(&["q1"]).unwrap();
        assert!((ra.density_matrix() - &a).norm() < 1e-14);
        let rb = rho.partial_trace(&["q2"]).unwrap();
        assert!((rb.density_matrix() - &b).norm() < 1e-14);
        assert_eq!(ra.space().subsystems()[0].label, "q1");
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let q = qubits();
        let s00 = QuantumState::basis_ket(&q, &["0", "0"]).unwrap();
        let s11 = QuantumState::basis_ket(&q, &["1", "1"]).unwrap();
        let w = C64::new(FRAC_1_SQRT_2, 0.0);
        let bell = QuantumState::superposition(&[(w, &s00), (w, &s11)]).unwrap();
        let r = bell.to_mixed().partial_trace(&["q1"]).unwrap();
        let half = CMatrix::identity(2, 2) * C64::new(0.5, 0.0);
        assert!((r.density_matrix() - half).norm() < 1e-15);
        assert!(bell.partial_trace::<&str>(&[]).is_err());
        assert!(bell.partial_trace(&["nope"]).is_err());
    }

    #[test]
    fn validation_rejects_bad_states() {
        let q = qubits();
        assert!(QuantumState::pure(&q, CVector::from_element(4, ONE)).is_err());
        let mut m = CMatrix::zeros(4, 4);
        m[(0, 0)] = C64::new(1.5, 0.0);
        m[(1, 1)] = C64::new(-0.5, 0.0);
        assert!(QuantumState::mixed(&q, m).is_err());
    }

    /// Independent reference: explicit sum over the traced index.
    fn trace_out_second(rho: &CMatrix, da: usize, db: usize) -> CMatrix {
        CMatrix::from_fn(da, da, |i, j| (0..db).map(|k| rho[(i * db + k, j * db + k)]).sum())
    }

    proptest! {
        #[test]
        fn partial_trace_preserves_trace(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 36)) {
            let s = CompositeSpace::from_labels(&[("a", &["0", "1"]), ("b", &["0", "1", "2"])]).unwrap();
            let g = CMatrix::from_iterator(6, 6, entries.into_iter().map(|(a, b)| C64::new(a, b)));
            let mut rho = &g * g.adjoint();
            let tr = rho.trace();
            prop_assume!(tr.re > 1e-6);
            rho /= tr;
            let state = QuantumState::mixed(&s, rho.clone()).unwrap();
            let red = state.partial_trace(&["a"]).unwrap();
            prop_assert!((red.density_matrix().trace().re - 1.0).abs() < 1e-9);
            prop_assert!((red.density_matrix() - trace_out_second(&rho, 2, 3)).norm() < 1e-12);
        }

        #[test]
        fn hermitian_expectation_is_real(entries in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
                                          h in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16)) {
            let s = CompositeSpace::from_labels(&[("a", &["0", "1"]), ("b", &["0", "1"])]).unwrap();
            let g = CMatrix::from_iterator(4, 4, entries.into_iter().map(|(a, b)| C64::new(a, b)));
            let mut rho = &g * g.adjoint();
            let tr = rho.trace();
            prop_assume!(tr.re > 1e-6);
            rho /= tr;
            let hm = CMatrix::from_iterator(4, 4, h.into_iter().map(|(a, b)| C64::new(a, b)));
            let op = Operator::new(s.clone(), &hm + hm.adjoint()).unwrap();
            let st = QuantumState::mixed(&s, rho).unwrap();
            prop_assert!(st.expectation(&op).unwrap().im.abs() < 1e-10);
        }
    }
}
