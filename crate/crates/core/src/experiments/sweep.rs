use std::f64::consts::{PI, SQRT_2};

use serde::Serialize;
use serde_json::Value;

use super::curves::{peak, simulate};
use super::presets::table1_params;
use super::{field_names, Ctx, Experiment, ExperimentConfig, Outcome, Table, Units};
use crate::analysis::linspace;
use crate::dynamics::TimeGrid;
use crate::error::{Error, Result};
use crate::models::{atoms_space, blockade_spectrum, effective_two_atom_driven, ModelParams, StateLibrary, ATOM_LEVELS};
use crate::parallel::par_map;

/// Keys only meaningful in a sweep: `λ/Ω_eff` and `Δ/Ω_eff`, realised by
/// adjusting `Ω_c` and `U` at fixed `Ω_eff`.
pub const SWEEP_KEYS: [&str; 2] = ["lambda_ratio", "delta_ratio"];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridAxis {
    pub key: String,
    pub values: Vec<f64>,
}

/// Parses `key=start:stop:count`.
pub fn parse_axis(spec: &str) -> Result<GridAxis> {
    let bad = || Error::Usage(format!("grid axis `{spec}` is not of the form key=start:stop:count"));
    let (key, range) = spec.split_once('=').ok_or_else(bad)?;
    let parts: Vec<&str> = range.split(':').collect();
    let [start, stop, count] = parts[..] else {
        return Err(bad());
    };
    let start: f64 = start.trim().parse().map_err(|_| bad())?;
    let stop: f64 = stop.trim().parse().map_err(|_| bad())?;
    let count: usize = count.trim().parse().map_err(|_| bad())?;
    if !(start.is_finite() && stop.is_finite()) {
        return Err(bad());
    }
    if count == 0 {
        return Err(Error::Validation(format!("grid axis `{key}` is empty")));
    }
    Ok(GridAxis {
        key: key.trim().to_owned(),
        values: linspace(start, stop, count),
    })
}

fn header(key: &str) -> String {
    match key {
        "lambda_ratio" | "delta_ratio" => format!("{key}[dimensionless]"),
        "n_atoms" | "n_fock" => format!("{key}[count]"),
        "eta" => format!("{key}[rad]"),
        _ => format!("{key}[Omega_c]"),
    }
}

fn json_number(v: f64) -> Value {
    if v.fract() == 0.0 && v >= 0.0 && v < 2f64.powi(53) {
        Value::from(v as u64)
    } else {
        Value::from(v)
    }
}

/// One grid point: effective two-atom run from `|gg⟩` over one Rabi period,
/// plus the closed-form blockade ratios.
fn point(ctx: &Ctx, assignment: &[(String, f64)], samples: usize) -> Result<(ModelParams, [f64; 4])> {
    let mut overrides = ctx.overrides().clone();
    for (k, v) in assignment {
        overrides.insert(k.clone(), json_number(*v));
    }
    let local = Ctx {
        overrides: overrides.clone(),
        samples: ctx.samples,
    };
    let mut p = local.params(table1_params(20.0))?;
    let d = p.derived();
    let ratio = |k: &str| overrides.get(k).and_then(Value::as_f64);
    let (lr, dr) = (ratio("lambda_ratio"), ratio("delta_ratio"));
    if lr.is_some() || dr.is_some() {
        let lambda = lr.map_or(d.lambda, |r| r * d.omega_eff);
        let delta = dr.map_or(d.delta, |r| r * d.omega_eff);
        p = p.with_effective_couplings(d.omega_eff, lambda, delta)?;
    }
    let d = p.derived();
    let spec = blockade_spectrum(d.lambda, d.delta, d.omega_eff)?;
    let lib = StateLibrary::new(&atoms_space(2, &ATOM_LEVELS)?)?;
    let targets = vec![("P_T".to_owned(), lib.triplet()?), ("P_ee".to_owned(), lib.ee()?)];
    let window = PI / (SQRT_2 * d.omega_eff.abs());
    let res = simulate(
        effective_two_atom_driven(&p, None)?,
        &lib.gg()?,
        &TimeGrid::new(0.0, window, samples)?,
        &targets,
    )?;
    Ok((p, [spec.r1, spec.r2, peak(&res, "P_T")?.value, peak(&res, "P_ee")?.value]))
}

pub(crate) fn sweep(config: &ExperimentConfig) -> Result<Outcome> {
    let ctx = Ctx::new(config, &SWEEP_KEYS)?;
    if config.grid.is_empty() {
        return Err(Error::Validation("sweep needs at least one grid axis".into()));
    }
    if config.grid.len() > 2 {
        return Err(Error::Unsupported(format!("{} swept dimensions (at most 2)", config.grid.len())));
    }
    let axes = config.grid.iter().map(|g| parse_axis(g)).collect::<Result<Vec<_>>>()?;
    let mut known = field_names(&ModelParams::default());
    known.extend(SWEEP_KEYS.iter().map(|k| (*k).to_owned()));
    for a in &axes {
        if !known.contains(&a.key) {
            return Err(Error::Usage(format!("cannot sweep `{}`; valid keys: {}", a.key, known.join(", "))));
        }
    }
    if axes.len() == 2 && axes[0].key == axes[1].key {
        return Err(Error::Usage(format!("axis `{}` given twice", axes[0].key)));
    }
    let mut points: Vec<Vec<(String, f64)>> = axes[0].values.iter().map(|&v| vec![(axes[0].key.clone(), v)]).collect();
    if let Some(second) = axes.get(1) {
        points = points
            .into_iter()
            .flat_map(|p| {
                second.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push((second.key.clone(), v));
                    q
                })
            })
            .collect();
    }
    let samples = ctx.samples(2001);
    let results = par_map(&points, |pt| point(&ctx, pt, samples));

    let units = Units::OMEGA_C;
    let mut out = Outcome::new(Experiment::Sweep, units);
    let mut columns: Vec<String> = axes.iter().map(|a| header(&a.key)).collect();
    columns.extend(["R1", "R2", "maxP_T", "maxP_ee"].map(String::from));
    let mut table = Table::new("sweep", units, "max_population", columns);
    for (k, (pt, r)) in points.iter().zip(results).enumerate() {
        let (p, values) = r?;
        let mut row: Vec<f64> = pt.iter().map(|(_, v)| *v).collect();
        row.extend(values);
        table.rows.push(row);
        out.record_params(&format!("point{k}"), &p)?;
    }
    let col = |name: &str| table.column(name).unwrap_or_default();
    let fold = |v: Vec<f64>, f: fn(f64, f64) -> f64, init: f64| v.into_iter().fold(init, f);
    out.put("points", table.rows.len());
    out.put("max_maxP_ee", fold(col("maxP_ee"), f64::max, f64::NEG_INFINITY));
    out.put("min_maxP_T", fold(col("maxP_T"), f64::min, f64::INFINITY));
    out.record_params("grid", &axes)?;
    out.notes.push("effective two-atom model from |gg> over one Rabi period pi/(sqrt2 Omega_eff) at the table1 preset scale (R = 20 unless swept)".into());
    out.tables.push(table);
    Ok(out)
}
