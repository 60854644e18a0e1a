use std::fmt;
use std::sync::Arc;

use super::{CMatrix, CompositeSpace, Operator, C64};
use crate::error::Result;

/// Scalar time function multiplying an operator term.
pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// `A(t) = A₀ + Σ_k c_k(t) A_k`.
///
/// Evaluated at integrator-chosen times, so no pre-sampling error enters
/// the dynamics.
#[derive(Clone)]
pub struct TimeDependentOperator {
    constant: Operator,
    terms: Vec<(Coefficient, Operator)>,
}

impl TimeDependentOperator {
    pub fn constant(op: Operator) -> Self {
        Self {
            constant: op,
            terms: Vec::new(),
        }
    }

    pub fn zeros(space: &CompositeSpace) -> Self {
        Self::constant(Operator::zeros(space))
    }

    pub fn with_term(mut self, coefficient: Coefficient, op: Operator) -> Result<Self> {
        self.constant.space().check_same(op.space())?;
        self.terms.push((coefficient, op));
        Ok(self)
    }

    /// Adds `c(t)·A + c̄(t)·A†`, keeping the result Hermitian.
    pub fn with_hermitian_term(self, coefficient: Coefficient, op: Operator) -> Result<Self> {
        let dag = op.dagger();
        let conj: Coefficient = {
            let c = coefficient.clone();
            Arc::new(move |t| c(t).conj())
        };
        self.with_term(coefficient, op)?.with_term(conj, dag)
    }

    pub fn add_constant(mut self, op: &Operator) -> Result<Self> {
        self.constant.space().check_same(op.space())?;
        self.constant += op;
        Ok(self)
    }

    pub fn space(&self) -> &CompositeSpace {
        self.constant.space()
    }

    pub fn is_static(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn constant_part(&self) -> &Operator {
        &self.constant
    }

    pub fn terms(&self) -> &[(Coefficient, Operator)] {
        &self.terms
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.constant.matrix().clone();
        self.accumulate(t, &mut m);
        Operator::new(self.space().clone(), m).expect("dimensions fixed at construction")
    }

    /// Writes `A(t)` into a preallocated matrix.
    pub fn eval_into(&self, t: f64, out: &mut CMatrix) {
        out.copy_from(self.constant.matrix());
        self.accumulate(t, out);
    }

    fn accumulate(&self, t: f64, out: &mut CMatrix) {
        for (c, op) in &self.terms {
            let ct = c(t);
            if ct != C64::new(0.0, 0.0) {
                out.zip_apply(op.matrix(), |o, a| *o += ct * a);
            }
        }
    }
}

impl From<Operator> for TimeDependentOperator {
    fn from(op: Operator) -> Self {
        Self::constant(op)
    }
}

impl fmt::Debug for TimeDependentOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TimeDependentOperator")
            .field("space", self.space())
            .field("terms", &self.terms.len())
            .finish()
    }
}
