//! Schrödinger and master-equation evolution, Liouvillian steady states and
//! run-to-run comparison.

mod integrator;
mod kernel;

use nalgebra::SymmetricEigen;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qspace::{frobenius, kron, CMatrix, CVector, CompositeSpace, Operator, QuantumState, StateData, TimeDependentOperator, C64};

pub use integrator::{integrate, IntegratorStats};

pub const DEFAULT_RTOL: f64 = 1e-8;
pub const DEFAULT_ATOL: f64 = 1e-10;
/// Singular values below this fraction of the largest span the Liouvillian kernel.
pub const KERNEL_THRESHOLD: f64 = 1e-10;
/// Largest Hilbert-space dimension accepted by the dense steady-state solver.
pub const STEADY_STATE_MAX_DIM: usize = 32;

/// Output sampling plus integrator tolerances.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub n_samples: usize,
    pub rtol: f64,
    pub atol: f64,
}

impl TimeGrid {
    pub fn new(t_start: f64, t_end: f64, n_samples: usize) -> Result<Self> {
        let g = Self {
            t_start,
            t_end,
            n_samples,
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Result<Self> {
        self.rtol = rtol;
        self.atol = atol;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start.is_finite() && self.t_end.is_finite() && self.t_end > self.t_start) {
            return Err(Error::InvalidParameter("time grid needs finite t_end > t_start".into()));
        }
        if self.n_samples < 2 {
            return Err(Error::InvalidParameter("time grid needs at least 2 samples".into()));
        }
        if !(self.rtol > 0.0 && self.atol > 0.0) {
            return Err(Error::InvalidParameter("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn times(&self) -> Vec<f64> {
        let n = self.n_samples - 1;
        (0..=n)
            .map(|k| {
                if k == n {
                    self.t_end
                } else {
                    self.t_start + (self.t_end - self.t_start) * k as f64 / n as f64
                }
            })
            .collect()
    }
}

/// A unitary applied to the output of one collapse channel.
#[derive(Clone, Debug)]
pub struct FeedbackLoop {
    /// Index into the problem's collapse operators.
    pub channel: usize,
    pub unitary: Operator,
}

#[derive(Clone, Debug)]
pub struct LindbladProblem {
    pub(crate) hamiltonian: TimeDependentOperator,
    pub(crate) collapse: Vec<TimeDependentOperator>,
    pub(crate) feedback: Option<FeedbackLoop>,
    pub(crate) initial: QuantumState,
}

impl LindbladProblem {
    pub fn new(hamiltonian: impl Into<TimeDependentOperator>, initial: QuantumState) -> Result<Self> {
        let hamiltonian = hamiltonian.into();
        hamiltonian.space().check_same(initial.space())?;
        Ok(Self {
            hamiltonian,
            collapse: Vec::new(),
            feedback: None,
            initial,
        })
    }

    pub fn with_collapse(mut self, op: impl Into<TimeDependentOperator>) -> Result<Self> {
        let op = op.into();
        self.space().check_same(op.space())?;
        self.collapse.push(op);
        Ok(self)
    }

    /// Fails unless the unitary is unitary to 1e-10 and the channel exists.
    pub fn with_feedback(mut self, fb: FeedbackLoop) -> Result<Self> {
        self.space().check_same(fb.unitary.space())?;
        if !fb.unitary.is_unitary(1e-10) {
            return Err(Error::Validation("feedback operator is not unitary".into()));
        }
        if fb.channel >= self.collapse.len() {
            return Err(Error::Validation(format!("feedback channel {} does not exist", fb.channel)));
        }
        self.feedback = Some(fb);
        Ok(self)
    }

    pub fn with_initial(mut self, initial: QuantumState) -> Result<Self> {
        self.space().check_same(initial.space())?;
        self.initial = initial;
        Ok(self)
    }

    pub fn space(&self) -> &CompositeSpace {
        self.hamiltonian.space()
    }

    pub fn hamiltonian(&self) -> &TimeDependentOperator {
        &self.hamiltonian
    }

    pub fn collapse(&self) -> &[TimeDependentOperator] {
        &self.collapse
    }

    pub fn feedback(&self) -> Option<&FeedbackLoop> {
        self.feedback.as_ref()
    }

    pub fn initial(&self) -> &QuantumState {
        &self.initial
    }

    pub fn is_static(&self) -> bool {
        self.hamiltonian.is_static() && self.collapse.iter().all(TimeDependentOperator::is_static)
    }

    /// `ρ̇` at time `t`, evaluated densely (for tests and diagnostics).
    pub fn liouvillian_apply(&self, t: f64, rho: &CMatrix) -> CMatrix {
        let h = self.hamiltonian.at(t).into_matrix();
        let i = C64::new(0.0, 1.0);
        let mut out = (&h * rho - rho * &h) * -i;
        for (k, c) in self.collapse.iter().enumerate() {
            let c = c.at(t).into_matrix();
            let j = match self.feedback.as_ref().filter(|f| f.channel == k) {
                Some(f) => f.unitary.matrix() * &c,
                None => c.clone(),
            };
            let cdc = c.adjoint() * &c;
            out += &j * rho * j.adjoint() - (&cdc * rho + rho * &cdc) * C64::new(0.5, 0.0);
        }
        out
    }
}

/// Which observables to record and whether to keep the state trajectory.
#[derive(Clone, Debug, Default)]
pub struct Record {
    pub observables: Vec<(String, Operator)>,
    pub keep_states: bool,
}

impl Record {
    pub fn observables(obs: Vec<(String, Operator)>) -> Self {
        Self {
            observables: obs,
            keep_states: false,
        }
    }

    /// Projector observables onto named pure states.
    pub fn populations(targets: &[(&str, &QuantumState)]) -> Result<Self> {
        let obs = targets
            .iter()
            .map(|(n, s)| Ok(((*n).to_owned(), Operator::projector(s)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::observables(obs))
    }

    pub fn with_states(mut self) -> Self {
        self.keep_states = true;
        self
    }
}

/// Worst per-sample deviations seen during a run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub max_trace_error: f64,
    pub max_hermiticity_error: f64,
    pub min_eigenvalue: f64,
    pub stats: IntegratorStats,
}

#[derive(Clone, Debug)]
pub struct EvolutionResult {
    pub times: Vec<f64>,
    /// Empty unless [`Record::keep_states`] was set.
    pub states: Vec<QuantumState>,
    pub observables: Vec<(String, Vec<f64>)>,
    pub final_state: QuantumState,
    pub diagnostics: Diagnostics,
}

impl EvolutionResult {
    pub fn observable(&self, name: &str) -> Result<&[f64]> {
        self.observables
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| v.as_slice())
            .ok_or_else(|| Error::Validation(format!("observable `{name}` was not recorded")))
    }
}

fn check_observables(space: &CompositeSpace, record: &Record) -> Result<()> {
    for (_, op) in &record.observables {
        space.check_same(op.space())?;
    }
    Ok(())
}

/// Real part of `Tr(ρA)` for column-major `ρ`.
fn trace_product(rho: &[C64], a: &CMatrix, n: usize) -> f64 {
    let mut acc = 0.0;
    for c in 0..n {
        for r in 0..n {
            let v = a[(c, r)];
            if v != C64::new(0.0, 0.0) {
                acc += (rho[r + c * n] * v).re;
            }
        }
    }
    acc
}

/// Pure-state evolution under a possibly time-dependent Hamiltonian.
pub fn evolve_schrodinger(h: &TimeDependentOperator, psi0: &QuantumState, grid: &TimeGrid, record: &Record) -> Result<EvolutionResult> {
    grid.validate()?;
    h.space().check_same(psi0.space())?;
    check_observables(h.space(), record)?;
    let v = psi0
        .vector()
        .ok_or_else(|| Error::InvalidState("Schrödinger evolution needs a pure initial state".into()))?;
    if (v.norm() - 1.0).abs() > crate::qspace::NORM_TOL {
        return Err(Error::InvalidState("initial state is not normalized".into()));
    }
    let space = h.space().clone();
    let times = grid.times();
    let mut kernel = kernel::SchrodingerKernel::new(h);
    let mut obs: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); record.observables.len()];
    let mut states = Vec::new();
    let mut last = v.clone();
    let mut diag = Diagnostics {
        min_eigenvalue: 0.0,
        ..Default::default()
    };
    let stats = integrate(
        v.as_slice().to_vec(),
        &times,
        grid.rtol,
        grid.atol,
        |t, y, dy| kernel.rhs(t, y, dy),
        |_, _, y| {
            let psi = CVector::from_column_slice(y);
            diag.max_trace_error = diag.max_trace_error.max((psi.norm_squared() - 1.0).abs());
            for ((_, op), series) in record.observables.iter().zip(obs.iter_mut()) {
                series.push(psi.dotc(&(op.matrix() * &psi)).re);
            }
            if record.keep_states {
                states.push(QuantumState::unnormalized(space.clone(), psi.clone()));
            }
            last = psi;
            Ok(())
        },
    )?;
    diag.stats = stats;
    Ok(EvolutionResult {
        times,
        states,
        observables: record.observables.iter().map(|(n, _)| n.clone()).zip(obs).collect(),
        final_state: QuantumState::unnormalized(space, last),
        diagnostics: diag,
    })
}

/// Master-equation evolution; the initial state is promoted to a density matrix.
pub fn evolve_lindblad(problem: &LindbladProblem, grid: &TimeGrid, record: &Record) -> Result<EvolutionResult> {
    grid.validate()?;
    check_observables(problem.space(), record)?;
    if let Some(fb) = &problem.feedback {
        if !fb.unitary.is_unitary(1e-10) {
            return Err(Error::Validation("feedback operator is not unitary".into()));
        }
    }
    let space = problem.space().clone();
    let n = space.dim();
    let times = grid.times();
    let rho0 = problem.initial.density_matrix();
    let mut kernel = kernel::LindbladKernel::new(problem);
    let mut obs: Vec<Vec<f64>> = vec![Vec::with_capacity(times.len()); record.observables.len()];
    let mut states = Vec::new();
    let mut last = rho0.clone();
    let mut diag = Diagnostics {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let stats = integrate(
        rho0.as_slice().to_vec(),
        &times,
        grid.rtol,
        grid.atol,
        |t, y, dy| kernel.rhs(t, y, dy),
        |_, _, y| {
            let rho = CMatrix::from_column_slice(n, n, y);
            let tr = rho.trace();
            diag.max_trace_error = diag.max_trace_error.max((tr - C64::new(1.0, 0.0)).norm());
            diag.max_hermiticity_error = diag.max_hermiticity_error.max(frobenius(&(&rho - rho.adjoint())));
            let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
            let min = SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
            diag.min_eigenvalue = diag.min_eigenvalue.min(min);
            for ((_, op), series) in record.observables.iter().zip(obs.iter_mut()) {
                series.push(trace_product(y, op.matrix(), n));
            }
            if record.keep_states {
                states.push(QuantumState::density_unchecked(space.clone(), rho.clone()));
            }
            last = rho;
            Ok(())
        },
    )?;
    diag.stats = stats;
    Ok(EvolutionResult {
        times,
        states,
        observables: record.observables.iter().map(|(n, _)| n.clone()).zip(obs).collect(),
        final_state: QuantumState::density_unchecked(space, last),
        diagnostics: diag,
    })
}

#[derive(Clone, Debug)]
pub struct SteadyState {
    pub state: QuantumState,
    /// `‖L vec(ρ)‖`
    pub residual: f64,
    pub kernel_dim: usize,
    pub unique: bool,
}

/// Column-stacked superoperator: `vec(AρB) = (Bᵀ ⊗ A) vec(ρ)`.
/// Jumps are given as `(J, c†c)` pairs.
fn liouvillian_matrix(h: &CMatrix, jumps: &[(CMatrix, CMatrix)]) -> CMatrix {
    let n = h.nrows();
    let id = CMatrix::identity(n, n);
    let i = C64::new(0.0, 1.0);
    let mut l = (kron(&id, h) - kron(&h.transpose(), &id)) * -i;
    for (j, cdc) in jumps {
        l += kron(&j.conjugate(), j) - (kron(&id, cdc) + kron(&cdc.transpose(), &id)) * C64::new(0.5, 0.0);
    }
    l
}

/// Null space of the Liouvillian of a time-independent problem. The returned
/// state is the kernel vector of largest trace, normalized to unit trace.
pub fn steady_state(problem: &LindbladProblem) -> Result<SteadyState> {
    let n = problem.space().dim();
    let basis: Vec<QuantumState> = (0..n)
        .map(|k| {
            let mut v = CVector::zeros(n);
            v[k] = C64::new(1.0, 0.0);
            QuantumState::unnormalized(problem.space().clone(), v)
        })
        .collect();
    steady_state_on(problem, &basis)
}

/// Steady state of the dynamics restricted to the span of `basis`, which must
/// be orthonormal and invariant under the dynamics. The state is returned on
/// the full space.
pub fn steady_state_on(problem: &LindbladProblem, basis: &[QuantumState]) -> Result<SteadyState> {
    if !problem.is_static() {
        return Err(Error::Unsupported("steady state of a time-dependent problem".into()));
    }
    let n = problem.space().dim();
    let m = basis.len();
    if m == 0 || m > STEADY_STATE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "steady-state subspace of dimension {m} (supported 1..={STEADY_STATE_MAX_DIM})"
        )));
    }
    let mut v = CMatrix::zeros(n, m);
    for (k, s) in basis.iter().enumerate() {
        problem.space().check_same(s.space())?;
        let col = s
            .vector()
            .ok_or_else(|| Error::InvalidState("subspace basis must be pure".into()))?;
        v.set_column(k, col);
    }
    let gram = v.adjoint() * &v;
    if frobenius(&(gram - CMatrix::identity(m, m))) > 1e-10 {
        return Err(Error::InvalidState("subspace basis is not orthonormal".into()));
    }
    let restrict = |a: &CMatrix| v.adjoint() * a * &v;
    let h = problem.hamiltonian.at(0.0).into_matrix();
    // c†c is restricted as a whole, not assembled from the restricted c.
    let mut ops = Vec::new();
    for (k, c) in problem.collapse.iter().enumerate() {
        let c = c.at(0.0).into_matrix();
        let j = match problem.feedback.as_ref().filter(|f| f.channel == k) {
            Some(f) => f.unitary.matrix() * &c,
            None => c.clone(),
        };
        ops.push((restrict(&j), restrict(&(c.adjoint() * &c))));
    }
    let l = liouvillian_matrix(&restrict(&h), &ops);
    let svd = l.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().ok_or_else(|| Error::Integration("SVD failed".into()))?;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let kernel: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| svd.singular_values[k] <= KERNEL_THRESHOLD * smax.max(f64::MIN_POSITIVE))
        .collect();
    if kernel.is_empty() {
        return Err(Error::Validation("Liouvillian has no kernel".into()));
    }
    let mut best: Option<(f64, CMatrix)> = None;
    for &k in &kernel {
        let vec: Vec<C64> = v_t.row(k).iter().map(|z| z.conj()).collect();
        let rho = CMatrix::from_column_slice(m, m, &vec);
        let tr = rho.trace();
        if best.as_ref().is_none_or(|(b, _)| tr.norm() > *b) {
            best = Some((tr.norm(), rho / tr));
        }
    }
    let (tr, rho_r) = best.expect("kernel is nonempty");
    if tr < 1e-12 {
        return Err(Error::Validation("kernel contains no trace-carrying state".into()));
    }
    let rho_r = (&rho_r + rho_r.adjoint()) * C64::new(0.5, 0.0);
    let residual = (&l * CVector::from_column_slice(rho_r.as_slice())).norm();
    let rho = &v * rho_r * v.adjoint();
    Ok(SteadyState {
        state: QuantumState::density_unchecked(problem.space().clone(), rho),
        residual,
        kernel_dim: kernel.len(),
        unique: kernel.len() == 1,
    })
}

/// Differences of one observable between a reference run and another run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Discrepancy {
    pub observable: String,
    pub max_abs: f64,
    /// Trapezoid integral of the absolute difference over time.
    pub integrated_abs: f64,
    pub per_sample: Vec<f64>,
}

/// Compares every run against the first on the named observable.
pub fn compare_models(runs: &[&EvolutionResult], observable: &str) -> Result<Vec<Discrepancy>> {
    let (first, rest) = runs
        .split_first()
        .ok_or_else(|| Error::Validation("no runs to compare".into()))?;
    let reference = first.observable(observable)?;
    rest.iter()
        .map(|r| {
            if r.times.len() != first.times.len()
                || r.times.iter().zip(&first.times).any(|(a, b)| (a - b).abs() > 1e-12 * b.abs().max(1.0))
            {
                return Err(Error::Validation("runs use different time grids".into()));
            }
            let other = r.observable(observable)?;
            let per_sample: Vec<f64> = reference.iter().zip(other).map(|(a, b)| (a - b).abs()).collect();
            let integrated_abs = per_sample
                .windows(2)
                .zip(first.times.windows(2))
                .map(|(d, t)| 0.5 * (d[0] + d[1]) * (t[1] - t[0]))
                .sum();
            Ok(Discrepancy {
                observable: observable.to_owned(),
                max_abs: per_sample.iter().copied().fold(0.0, f64::max),
                integrated_abs,
                per_sample,
            })
        })
        .collect()
}

/// Pure-state data as a density matrix, for runs that mix both.
pub fn as_density(state: &QuantumState) -> CMatrix {
    match state.data() {
        StateData::Pure(v) => v * v.adjoint(),
        StateData::Mixed(m) => m.clone(),
    }
}

#[cfg(test)]
mod tests;
