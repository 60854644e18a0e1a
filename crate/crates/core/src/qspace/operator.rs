use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::SymmetricEigen;

use super::{frobenius, kron, transition_matrix, CMatrix, CompositeSpace, QuantumState, C64, I, ONE};
use crate::error::{Error, Result};

/// A dense complex matrix acting on a [`CompositeSpace`].
///
/// Hamiltonians are in angular-frequency units with ħ = 1.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator {
    space: CompositeSpace,
    matrix: CMatrix,
}

impl Operator {
    pub fn new(space: CompositeSpace, matrix: CMatrix) -> Result<Self> {
        let n = space.dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::Dimension {
                expected: n,
                found: if matrix.nrows() != n { matrix.nrows() } else { matrix.ncols() },
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(space: &CompositeSpace) -> Self {
        let n = space.dim();
        Self {
            space: space.clone(),
            matrix: CMatrix::identity(n, n),
        }
    }

    /// Extends a local operator on one subsystem by identities on all others.
    pub fn embed(space: &CompositeSpace, subsystem: &str, local: &CMatrix) -> Result<Self> {
        let k = space.subsystem_index(subsystem)?;
        let d = space.subsystems()[k].dim();
        if local.nrows() != d || local.ncols() != d {
            return Err(Error::Dimension {
                expected: d,
                found: local.nrows().max(local.ncols()),
            });
        }
        let dims = space.dims();
        let left: usize = dims[..k].iter().product();
        let right: usize = dims[k + 1..].iter().product();
        let m = kron(&kron(&CMatrix::identity(left, left), local), &CMatrix::identity(right, right));
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    /// `|to⟩⟨from|` on a single subsystem, identity elsewhere.
    pub fn transition(space: &CompositeSpace, subsystem: &str, to: &str, from: &str) -> Result<Self> {
        let s = space.subsystem(subsystem)?;
        let m = transition_matrix(s.dim(), s.level_index(to)?, s.level_index(from)?);
        Self::embed(space, subsystem, &m)
    }

    /// Tensor product of local operators, one per subsystem in declaration order.
    pub fn product(space: &CompositeSpace, factors: &[CMatrix]) -> Result<Self> {
        let dims = space.dims();
        if factors.len() != dims.len() {
            return Err(Error::Dimension {
                expected: dims.len(),
                found: factors.len(),
            });
        }
        let mut m = CMatrix::identity(1, 1);
        for (f, &d) in factors.iter().zip(&dims) {
            if f.nrows() != d || f.ncols() != d {
                return Err(Error::Dimension {
                    expected: d,
                    found: f.nrows(),
                });
            }
            m = kron(&m, f);
        }
        Ok(Self {
            space: space.clone(),
            matrix: m,
        })
    }

    /// `|ket⟩⟨bra|` for two pure states on the same space.
    pub fn outer(ket: &QuantumState, bra: &QuantumState) -> Result<Self> {
        ket.space().check_same(bra.space())?;
        let (k, b) = match (ket.vector(), bra.vector()) {
            (Some(k), Some(b)) => (k, b),
            _ => return Err(Error::InvalidState("outer product needs pure states".into())),
        };
        Ok(Self {
            space: ket.space().clone(),
            matrix: k * b.adjoint(),
        })
    }

    pub fn projector(state: &QuantumState) -> Result<Self> {
        Self::outer(state, state)
    }

    pub fn space(&self) -> &CompositeSpace {
        &self.space
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn dagger(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix * c,
        }
    }

    pub fn norm(&self) -> f64 {
        frobenius(&self.matrix)
    }

    /// `‖A − A†‖ / ‖A‖` (zero for the zero operator).
    pub fn hermitian_defect(&self) -> f64 {
        let n = self.norm();
        if n == 0.0 {
            return 0.0;
        }
        frobenius(&(&self.matrix - self.matrix.adjoint())) / n
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_defect() <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let n = self.dim();
        let d = &self.matrix.adjoint() * &self.matrix - CMatrix::identity(n, n);
        frobenius(&d) <= tol * (n as f64).sqrt().max(1.0)
    }

    pub fn commutator(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix - &other.matrix * &self.matrix,
        })
    }

    /// Checked composition `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Self> {
        self.space.check_same(&other.space)?;
        Ok(Self {
            space: self.space.clone(),
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn element(&self, row: &QuantumState, col: &QuantumState) -> Result<C64> {
        self.space.check_same(row.space())?;
        self.space.check_same(col.space())?;
        let (r, c) = match (row.vector(), col.vector()) {
            (Some(r), Some(c)) => (r, c),
            _ => return Err(Error::InvalidState("matrix elements need pure states".into())),
        };
        Ok((r.adjoint() * (&self.matrix * c))[(0, 0)])
    }

    pub fn apply(&self, state: &QuantumState) -> Result<QuantumState> {
        self.space.check_same(state.space())?;
        match state.vector() {
            Some(v) => Ok(QuantumState::unnormalized(self.space.clone(), &self.matrix * v)),
            None => Err(Error::InvalidState("apply needs a pure state".into())),
        }
    }

    /// Eigenvalues of a Hermitian operator, ascending.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let eig = SymmetricEigen::new(self.matrix.clone());
        let mut v: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        v.sort_by(|a, b| a.total_cmp(b));
        v
    }

    /// `exp(−i·angle·G)` for a Hermitian generator `G`.
    pub fn unitary_from_generator(generator: &Operator, angle: f64) -> Result<Self> {
        if !generator.is_hermitian(1e-10) {
            return Err(Error::Validation("generator is not Hermitian".into()));
        }
        let eig = SymmetricEigen::new(generator.matrix.clone());
        let phases = eig.eigenvalues.map(|l| (-I * angle * l).exp());
        let v = &eig.eigenvectors;
        let m = v * CMatrix::from_diagonal(&phases) * v.adjoint();
        Ok(Self {
            space: generator.space.clone(),
            matrix: m,
        })
    }

    /// Hermitian part `(A + A†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: (&self.matrix + self.matrix.adjoint()) * C64::new(0.5, 0.0),
        }
    }

    pub fn plus_hc(&self) -> Self {
        Self {
            space: self.space.clone(),
            matrix: &self.matrix + self.matrix.adjoint(),
        }
    }

    /// `A ⊗ I` on a space whose leading subsystems are exactly `self.space()`.
    pub fn extend_to(&self, full: &CompositeSpace) -> Result<Self> {
        let k = self.space.subsystems().len();
        if full.subsystems().len() < k || full.subsystems()[..k] != *self.space.subsystems() {
            return Err(Error::SpaceMismatch);
        }
        let rest: usize = full.dims()[k..].iter().product();
        Ok(Self {
            space: full.clone(),
            matrix: kron(&self.matrix, &CMatrix::identity(rest, rest)),
        })
    }

    pub fn trace(&self) -> C64 {
        self.matrix.trace()
    }

    pub fn is_zero(&self) -> bool {
        self.matrix.iter().all(|z| *z == C64::new(0.0, 0.0))
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix + &rhs.matrix,
        }
    }
}

impl Add for Operator {
    type Output = Operator;
    fn add(self, rhs: Operator) -> Operator {
        &self + &rhs
    }
}

impl AddAssign<&Operator> for Operator {
    fn add_assign(&mut self, rhs: &Operator) {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        self.matrix += &rhs.matrix;
    }
}

impl AddAssign for Operator {
    fn add_assign(&mut self, rhs: Operator) {
        *self += &rhs;
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix - &rhs.matrix,
        }
    }
}

impl Sub for Operator {
    type Output = Operator;
    fn sub(self, rhs: Operator) -> Operator {
        &self - &rhs
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator spaces differ");
        Operator {
            space: self.space.clone(),
            matrix: &self.matrix * &rhs.matrix,
        }
    }
}

impl Mul for Operator {
    type Output = Operator;
    fn mul(self, rhs: Operator) -> Operator {
        &self * &rhs
    }
}

impl Mul<C64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<C64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: C64) -> Operator {
        self.scale(rhs)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<f64> for Operator {
    type Output = Operator;
    fn mul(self, rhs: f64) -> Operator {
        self.scale(C64::new(rhs, 0.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qspace::{CompositeSpace, ALGEBRA_TOL, ZERO};
    use proptest::prelude::*;

    fn pair() -> CompositeSpace {
        CompositeSpace::from_labels(&[("atom1", &["g", "e", "p", "r"]), ("atom2", &["g", "e", "p", "r"])])
            .unwrap()
    }

    fn qubits() -> CompositeSpace {
        CompositeSpace::from_labels(&[("q1", &["0", "1"]), ("q2", &["0", "1"])]).unwrap()
    }

    fn sigma_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    #[test]
    fn embed_identity_is_identity() {
        let s = pair();
        let op = Operator::embed(&s, "atom1", &CMatrix::identity(4, 4)).unwrap();
        assert_eq!(op, Operator::identity(&s));
    }

    #[test]
    fn embed_transition_pattern() {
        let s = pair();
        let op = Operator::transition(&s, "atom1", "p", "g").unwrap();
        for row in 0..16 {
            for col in 0..16 {
                let rl = s.labels_of(row);
                let cl = s.labels_of(col);
                let expected = rl[0] == "p" && cl[0] == "g" && rl[1] == cl[1];
                let v = op.matrix()[(row, col)];
                assert_eq!(v, if expected { ONE } else { ZERO }, "({row},{col})");
            }
        }
    }

    #[test]
    fn sigma_x_flips_first_qubit() {
        let s = qubits();
        let x1 = Operator::embed(&s, "q1", &sigma_x()).unwrap();
        let out = x1.apply(&QuantumState::basis_ket(&s, &["0", "0"]).unwrap()).unwrap();
        let want = QuantumState::basis_ket(&s, &["1", "0"]).unwrap();
        assert!((out.vector().unwrap() - want.vector().unwrap()).norm() < 1e-15);
    }

    #[test]
    fn embed_size_mismatch() {
        let s = qubits();
        assert!(matches!(
            Operator::embed(&s, "q1", &CMatrix::identity(3, 3)),
            Err(Error::Dimension { .. })
        ));
        assert!(Operator::embed(&s, "q9", &CMatrix::identity(2, 2)).is_err());
    }

    #[test]
    fn unitary_from_generator_matches_closed_form() {
        let s = qubits();
        let x1 = Operator::embed(&s, "q1", &sigma_x()).unwrap();
        let eta = -0.5 * std::f64::consts::PI;
        let u = Operator::unitary_from_generator(&x1, eta).unwrap();
        // exp(-iηX) = cos η − i sin η X
        let want = &Operator::identity(&s) * eta.cos() + &x1 * (-I * eta.sin());
        assert!((u.matrix() - want.matrix()).norm() < 1e-12);
        assert!(u.is_unitary(1e-12));
    }

    fn arb_local(d: usize) -> impl Strategy<Value = CMatrix> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
            .prop_map(move |v| CMatrix::from_iterator(d, d, v.into_iter().map(|(a, b)| C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn embed_is_multiplicative(a in arb_local(4), b in arb_local(4)) {
            let s = pair();
            let ea = Operator::embed(&s, "atom2", &a).unwrap();
            let eb = Operator::embed(&s, "atom2", &b).unwrap();
            let eab = Operator::embed(&s, "atom2", &(&a * &b)).unwrap();
            let d = (&ea * &eb) - eab.clone();
            prop_assert!(d.norm() <= ALGEBRA_TOL * eab.norm().max(1.0));
        }

        #[test]
        fn distinct_subsystems_commute(a in arb_local(4), b in arb_local(4)) {
            let s = pair();
            let ea = Operator::embed(&s, "atom1", &a).unwrap();
            let eb = Operator::embed(&s, "atom2", &b).unwrap();
            let c = ea.commutator(&eb).unwrap();
            prop_assert!(c.norm() <= ALGEBRA_TOL * (ea.norm() * eb.norm()).max(1.0));
        }

        #[test]
        fn dagger_involution_and_product_rule(a in arb_local(4), b in arb_local(4)) {
            let s = CompositeSpace::from_labels(&[("x", &["0", "1", "2", "3"])]).unwrap();
            let a = Operator::new(s.clone(), a).unwrap();
            let b = Operator::new(s, b).unwrap();
            prop_assert_eq!(a.dagger().dagger(), a.clone());
            let lhs = (&a * &b).dagger();
            let rhs = &b.dagger() * &a.dagger();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }
}
