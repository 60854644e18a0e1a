//! Right-hand sides of the Schrödinger and master equations.
//!
//! Operators are stored as their nonzero pattern plus one value list per
//! time-dependent piece. The model operators are very sparse (a few entries
//! per row), so products with a dense `ρ` cost `O(nnz·n)` instead of `O(n³)`.

use crate::qspace::{CMatrix, Coefficient, Operator, TimeDependentOperator, C64, ZERO};

use super::LindbladProblem;

/// `Σ_k f_k(t) M_k` on a shared nonzero pattern. `f_k = None` means 1.
pub(crate) struct SparseTd {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    pieces: Vec<(Option<Coefficient>, Vec<C64>)>,
    vals: Vec<C64>,
}

impl SparseTd {
    pub fn from_pieces(n: usize, pieces: Vec<(Option<Coefficient>, CMatrix)>) -> Self {
        let mut mask = vec![false; n * n];
        for (_, m) in &pieces {
            for (k, v) in m.iter().enumerate() {
                if *v != ZERO {
                    mask[k] = true;
                }
            }
        }
        // nalgebra storage is column-major: k = row + col·n
        let (mut rows, mut cols) = (Vec::new(), Vec::new());
        for (k, &m) in mask.iter().enumerate() {
            if m {
                rows.push(k % n);
                cols.push(k / n);
            }
        }
        let pieces: Vec<_> = pieces
            .into_iter()
            .map(|(c, m)| {
                let v = rows.iter().zip(&cols).map(|(&r, &c)| m[(r, c)]).collect();
                (c, v)
            })
            .collect();
        let mut s = Self {
            n,
            vals: vec![ZERO; rows.len()],
            rows,
            cols,
            pieces,
        };
        if s.is_static() {
            s.eval(0.0);
        }
        s
    }

    pub fn from_td(op: &TimeDependentOperator) -> Self {
        let mut pieces = vec![(None, op.constant_part().matrix().clone())];
        for (c, o) in op.terms() {
            pieces.push((Some(c.clone()), o.matrix().clone()));
        }
        Self::from_pieces(op.space().dim(), pieces)
    }

    pub fn is_static(&self) -> bool {
        self.pieces.iter().all(|(c, _)| c.is_none())
    }

    pub fn eval(&mut self, t: f64) {
        self.vals.iter_mut().for_each(|v| *v = ZERO);
        for (c, p) in &self.pieces {
            let f = c.as_ref().map_or(C64::new(1.0, 0.0), |c| c(t));
            if f == ZERO {
                continue;
            }
            for (v, x) in self.vals.iter_mut().zip(p) {
                *v += f * x;
            }
        }
    }

    /// `out += s · self · x` for a column vector `x`.
    fn matvec_acc(&self, x: &[C64], out: &mut [C64], s: C64) {
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            out[r] += s * v * x[c];
        }
    }

    /// `out = self · X` for column-major `n×n` `X`.
    fn left_mul(&self, x: &[C64], out: &mut [C64]) {
        let n = self.n;
        out.iter_mut().for_each(|v| *v = ZERO);
        for col in 0..n {
            let xc = &x[col * n..(col + 1) * n];
            let oc = &mut out[col * n..(col + 1) * n];
            for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
                oc[r] += v * xc[c];
            }
        }
    }

    /// `out += s · X · self†`.
    fn right_mul_adjoint_acc(&self, x: &[C64], out: &mut [C64], s: C64) {
        let n = self.n;
        // (X A†)[:, r] = Σ_c conj(A[r, c]) X[:, c]
        for ((&r, &c), &v) in self.rows.iter().zip(&self.cols).zip(&self.vals) {
            let w = s * v.conj();
            let (src, dst) = (c * n, r * n);
            for i in 0..n {
                out[dst + i] += w * x[src + i];
            }
        }
    }
}

/// Expands `c(t) = Σ_k f_k C_k` into the pieces of `c†c = Σ_kl f̄_k f_l C_k†C_l`.
fn quadratic_pieces(op: &TimeDependentOperator) -> Vec<(Option<Coefficient>, CMatrix)> {
    let mut parts: Vec<(Option<Coefficient>, &Operator)> = vec![(None, op.constant_part())];
    parts.extend(op.terms().iter().map(|(c, o)| (Some(c.clone()), o)));
    parts.retain(|(_, o)| !o.is_zero());
    let mut out = Vec::new();
    for (ck, ok) in &parts {
        for (cl, ol) in &parts {
            let m = ok.matrix().adjoint() * ol.matrix();
            let coeff: Option<Coefficient> = match (ck.clone(), cl.clone()) {
                (None, None) => None,
                (Some(a), None) => Some(std::sync::Arc::new(move |t| a(t).conj())),
                (None, Some(b)) => Some(b),
                (Some(a), Some(b)) => Some(std::sync::Arc::new(move |t| a(t).conj() * b(t))),
            };
            out.push((coeff, m));
        }
    }
    out
}

/// `ρ̇ = −i[H, ρ] + Σ_k D[J_k]ρ` in the form `X + X†` with
/// `X = −i H_eff ρ + ½ Σ_k J_k ρ J_k†` and `H_eff = H − (i/2) Σ_k c_k†c_k`.
/// The jump `J_k` of the feedback channel is `U c_k`; its no-jump part uses
/// `c_k†c_k`, which equals `J_k†J_k` for unitary `U`.
pub(crate) struct LindbladKernel {
    n: usize,
    h_eff: SparseTd,
    jumps: Vec<SparseTd>,
    scratch: Vec<C64>,
    x: Vec<C64>,
}

impl LindbladKernel {
    pub fn new(problem: &LindbladProblem) -> Self {
        let n = problem.space().dim();
        let half_i = C64::new(0.0, -0.5);
        let mut pieces = vec![(None, problem.hamiltonian.constant_part().matrix().clone())];
        for (c, o) in problem.hamiltonian.terms() {
            pieces.push((Some(c.clone()), o.matrix().clone()));
        }
        let mut jumps = Vec::new();
        for (k, c) in problem.collapse.iter().enumerate() {
            for (coeff, m) in quadratic_pieces(c) {
                pieces.push((coeff, m * half_i));
            }
            let u = problem.feedback.as_ref().filter(|f| f.channel == k).map(|f| f.unitary.matrix());
            let mut jp = vec![(None, apply_left(u, c.constant_part().matrix()))];
            for (coeff, o) in c.terms() {
                jp.push((Some(coeff.clone()), apply_left(u, o.matrix())));
            }
            jumps.push(SparseTd::from_pieces(n, jp));
        }
        Self {
            n,
            h_eff: SparseTd::from_pieces(n, pieces),
            jumps,
            scratch: vec![ZERO; n * n],
            x: vec![ZERO; n * n],
        }
    }

    pub fn rhs(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let n = self.n;
        if !self.h_eff.is_static() {
            self.h_eff.eval(t);
        }
        // X = −i H_eff ρ
        self.h_eff.left_mul(rho, &mut self.x);
        let mi = C64::new(0.0, -1.0);
        self.x.iter_mut().for_each(|v| *v *= mi);
        for j in &mut self.jumps {
            if !j.is_static() {
                j.eval(t);
            }
            j.left_mul(rho, &mut self.scratch);
            j.right_mul_adjoint_acc(&self.scratch, &mut self.x, C64::new(0.5, 0.0));
        }
        for c in 0..n {
            for r in 0..n {
                out[r + c * n] = self.x[r + c * n] + self.x[c + r * n].conj();
            }
        }
    }
}

fn apply_left(u: Option<&CMatrix>, m: &CMatrix) -> CMatrix {
    match u {
        Some(u) => u * m,
        None => m.clone(),
    }
}

/// `ψ̇ = −iH(t)ψ`.
pub(crate) struct SchrodingerKernel {
    h: SparseTd,
}

impl SchrodingerKernel {
    pub fn new(h: &TimeDependentOperator) -> Self {
        Self { h: SparseTd::from_td(h) }
    }

    pub fn rhs(&mut self, t: f64, psi: &[C64], out: &mut [C64]) {
        if !self.h.is_static() {
            self.h.eval(t);
        }
        out.iter_mut().for_each(|v| *v = ZERO);
        self.h.matvec_acc(psi, out, C64::new(0.0, -1.0));
    }
}
