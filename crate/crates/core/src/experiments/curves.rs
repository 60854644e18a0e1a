use crate::analysis::{projector_on, ObservableSeries, Peak};
use crate::dynamics::{compare_models, evolve_lindblad, evolve_schrodinger, EvolutionResult, Record, TimeGrid};
use crate::error::{Error, Result};
use crate::models::{ModelBundle, ModelParams, CAVITY};
use crate::qspace::{CompositeSpace, QuantumState};

use super::{Table, Units};

/// Largest change of any recorded observable allowed when the Fock space
/// grows by two levels.
pub const FOCK_DRIFT_TOL: f64 = 1e-4;

/// Named population targets for a run.
pub type Targets = Vec<(String, QuantumState)>;

/// Extends an atomic state by the cavity vacuum when the model has a cavity.
fn lift(state: &QuantumState, space: &CompositeSpace) -> Result<QuantumState> {
    if state.space() == space {
        return Ok(state.clone());
    }
    let cavity = CompositeSpace::new(vec![space.subsystem(CAVITY)?.clone()])?;
    let vac = QuantumState::basis_ket(&cavity, &["0"])?;
    let lifted = state.tensor(&vac)?;
    if lifted.space() != space {
        return Err(Error::SpaceMismatch);
    }
    Ok(lifted)
}

/// Runs a model bundle from `initial`, recording the population of each
/// target. Closed models with a pure initial state use the Schrödinger
/// equation.
pub fn simulate(bundle: ModelBundle, initial: &QuantumState, grid: &TimeGrid, targets: &Targets) -> Result<EvolutionResult> {
    let space = bundle.space().clone();
    let initial = lift(initial, &space)?;
    let obs = targets
        .iter()
        .map(|(n, s)| Ok((n.clone(), projector_on(s, &space)?)))
        .collect::<Result<Vec<_>>>()?;
    let record = Record::observables(obs);
    if bundle.collapse.is_empty() && bundle.feedback.is_none() && initial.vector().is_some() {
        return evolve_schrodinger(&bundle.hamiltonian, &initial, grid, &record);
    }
    evolve_lindblad(&bundle.into_problem(initial)?, grid, &record)
}

/// Runs a cavity model at `n_fock` and again at `n_fock + 2`; fails when any
/// observable moves by more than [`FOCK_DRIFT_TOL`]. Returns the run and the
/// drift.
pub fn simulate_cavity(
    p: &ModelParams,
    build: impl Fn(&ModelParams) -> Result<ModelBundle> + Sync + Send,
    initial: &QuantumState,
    grid: &TimeGrid,
    targets: &Targets,
) -> Result<(EvolutionResult, f64)> {
    let mut bigger = p.clone();
    bigger.n_fock += 2;
    let params = [p.clone(), bigger];
    let mut runs = crate::parallel::par_map(&params, |q| simulate(build(q)?, initial, grid, targets));
    let big = runs.pop().expect("two runs")?;
    let base = runs.pop().expect("two runs")?;
    let mut drift = 0.0f64;
    for (name, _) in targets {
        for d in compare_models(&[&base, &big], name)? {
            drift = drift.max(d.max_abs);
        }
    }
    if !(drift < FOCK_DRIFT_TOL) {
        return Err(Error::Validation(format!(
            "Fock truncation n_fock = {} moves observables by {drift:.3e}",
            p.n_fock
        )));
    }
    Ok((base, drift))
}

pub fn series(result: &EvolutionResult, name: &str) -> Result<ObservableSeries> {
    ObservableSeries::from_result(result, name)
}

pub fn peak(result: &EvolutionResult, name: &str) -> Result<Peak> {
    series(result, name)?
        .max()
        .ok_or_else(|| Error::Validation(format!("empty series `{name}`")))
}

pub fn last(result: &EvolutionResult, name: &str) -> Result<f64> {
    series(result, name)?
        .last()
        .ok_or_else(|| Error::Validation(format!("empty series `{name}`")))
}

/// Sample value closest to time `t`.
pub fn at_time(result: &EvolutionResult, name: &str, t: f64) -> Result<f64> {
    let values = result.observable(name)?;
    let k = result
        .times
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
        .map(|(k, _)| k)
        .ok_or_else(|| Error::Validation("empty run".into()))?;
    Ok(values[k])
}

/// Time column plus one column per target population, and optionally the
/// fidelity `√P` of one of them.
pub fn time_table(name: &str, units: Units, result: &EvolutionResult, targets: &Targets, fidelity_of: Option<&str>) -> Result<Table> {
    let mut columns = vec![format!("t[{}]", units.time)];
    columns.extend(targets.iter().map(|(n, _)| n.clone()));
    let fid = fidelity_of.map(|f| result.observable(f)).transpose()?;
    if let Some(f) = fidelity_of {
        columns.push(f.replacen("P_", "F_", 1));
    }
    let cols = targets
        .iter()
        .map(|(n, _)| result.observable(n))
        .collect::<Result<Vec<_>>>()?;
    let mut table = Table::new(name, units, "population", columns);
    for (k, t) in result.times.iter().enumerate() {
        let mut row = vec![t * units.time_scale];
        row.extend(cols.iter().map(|c| c[k]));
        if let Some(f) = fid {
            row.push(f[k].max(0.0).sqrt());
        }
        table.rows.push(row);
    }
    Ok(table)
}
