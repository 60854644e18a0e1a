//! Named experiment presets, parameter sweeps and the model-equivalence
//! checks, with CSV/JSON artifact emission.
//!
//! Every run writes one CSV per curve or surface, `summary.json` with the
//! headline scalars and `manifest.json` listing each file with its SHA-256.

mod curves;
mod output;
mod presets;
mod sweep;
mod validate;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::dynamics::{DEFAULT_ATOL, DEFAULT_RTOL};
use crate::error::{Error, Result};
use crate::models::ModelParams;
use crate::pulses::StirapPlan;

pub use output::{sha256_hex, Artifact, Table, Units};
pub use sweep::{parse_axis, GridAxis, SWEEP_KEYS};
pub use validate::CheckResult;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Experiment {
    Table1,
    Fig2,
    Fig3,
    Fig4,
    Fig6,
    Fig7a,
    Fig7b,
    Expt2AtomSap,
    ExptFeedback,
    Sweep,
    Validate,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Self::Table1,
        Self::Fig2,
        Self::Fig3,
        Self::Fig4,
        Self::Fig6,
        Self::Fig7a,
        Self::Fig7b,
        Self::Expt2AtomSap,
        Self::ExptFeedback,
        Self::Sweep,
        Self::Validate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Table1 => "table1",
            Self::Fig2 => "fig2",
            Self::Fig3 => "fig3",
            Self::Fig4 => "fig4",
            Self::Fig6 => "fig6",
            Self::Fig7a => "fig7a",
            Self::Fig7b => "fig7b",
            Self::Expt2AtomSap => "expt-2atom-sap",
            Self::ExptFeedback => "expt-feedback",
            Self::Sweep => "sweep",
            Self::Validate => "validate",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|e| e.name()).collect()
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .copied()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Usage(format!("unknown experiment `{s}`; valid names: {}", Self::names().join(", "))))
    }
}

/// What to run and how. Overrides are keyed by [`ModelParams`] and
/// [`StirapPlan`] field names (plus the sweep-only ratio keys).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    pub overrides: BTreeMap<String, Value>,
    pub out_dir: Option<PathBuf>,
    /// Output samples per curve; each preset has its own default.
    pub samples: Option<usize>,
    /// Sweep axes, `key=start:stop:count`.
    pub grid: Vec<String>,
}

impl ExperimentConfig {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            ..Default::default()
        }
    }

    pub fn with_override(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.overrides.insert(key.to_owned(), value.into());
        self
    }

    pub fn with_grid(mut self, axis: &str) -> Self {
        self.grid.push(axis.to_owned());
        self
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    /// `self` with `other`'s fields laid on top; overrides merge key by key.
    pub fn merged(mut self, other: ExperimentConfig) -> Self {
        if !other.experiment.is_empty() {
            self.experiment = other.experiment;
        }
        self.overrides.extend(other.overrides);
        if other.out_dir.is_some() {
            self.out_dir = other.out_dir;
        }
        if other.samples.is_some() {
            self.samples = other.samples;
        }
        if !other.grid.is_empty() {
            self.grid = other.grid;
        }
        self
    }

    pub fn experiment(&self) -> Result<Experiment> {
        self.experiment.parse()
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from("runs").join(&self.experiment))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorTolerances {
    pub rtol: f64,
    pub atol: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub frequency_unit: String,
    pub time_unit: String,
    /// Resolved parameters of every curve, after overrides.
    pub parameters: Map<String, Value>,
    pub overrides: BTreeMap<String, Value>,
    pub samples: Option<usize>,
    pub tolerances: IntegratorTolerances,
    pub artifacts: Vec<Artifact>,
    pub duration_seconds: f64,
    pub notes: Vec<String>,
}

/// Everything a run computed, before anything is written.
#[derive(Clone, Debug)]
pub struct Outcome {
    pub experiment: Experiment,
    pub units: Units,
    pub tables: Vec<Table>,
    pub summary: Map<String, Value>,
    pub parameters: Map<String, Value>,
    pub notes: Vec<String>,
    /// Additional JSON files (name, content).
    pub documents: Vec<(String, Value)>,
    /// Set when a check failed; the run still emits its artifacts.
    pub failure: Option<String>,
}

impl Outcome {
    pub(crate) fn new(experiment: Experiment, units: Units) -> Self {
        Self {
            experiment,
            units,
            tables: Vec::new(),
            summary: Map::new(),
            parameters: Map::new(),
            notes: Vec::new(),
            documents: Vec::new(),
            failure: None,
        }
    }

    pub fn scalar(&self, key: &str) -> Option<f64> {
        self.summary.get(key).and_then(Value::as_f64)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub(crate) fn put(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.to_owned(), v.into());
    }

    pub(crate) fn record_params<T: Serialize>(&mut self, label: &str, value: &T) -> Result<()> {
        self.parameters.insert(label.to_owned(), serde_json::to_value(value)?);
        Ok(())
    }
}

/// Parameter overrides and sampling shared by every preset.
pub(crate) struct Ctx {
    overrides: BTreeMap<String, Value>,
    samples: Option<usize>,
}

fn field_names<T: Serialize>(v: &T) -> Vec<String> {
    match serde_json::to_value(v) {
        Ok(Value::Object(m)) => m.keys().cloned().collect(),
        _ => Vec::new(),
    }
}

/// Overwrites the fields of `base` named in `overrides`; other keys are left
/// for other records.
fn merge<T: Serialize + DeserializeOwned>(base: &T, overrides: &BTreeMap<String, Value>) -> Result<T> {
    let mut v = serde_json::to_value(base)?;
    if let Value::Object(m) = &mut v {
        for (k, x) in overrides {
            if m.contains_key(k) {
                m.insert(k.clone(), x.clone());
            }
        }
    }
    serde_json::from_value(v).map_err(|e| Error::Usage(format!("invalid override: {e}")))
}

impl Ctx {
    pub fn new(config: &ExperimentConfig, extra_keys: &[&str]) -> Result<Self> {
        let mut known = field_names(&ModelParams::default());
        known.extend(field_names(&StirapPlan::standard(2)));
        known.extend(extra_keys.iter().map(|k| (*k).to_owned()));
        for k in config.overrides.keys() {
            if !known.contains(k) {
                return Err(Error::Usage(format!(
                    "unknown parameter `{k}`; valid keys: {}",
                    known.join(", ")
                )));
            }
        }
        if config.samples.is_some_and(|n| n < 2) {
            return Err(Error::Usage("--samples must be at least 2".into()));
        }
        Ok(Self {
            overrides: config.overrides.clone(),
            samples: config.samples,
        })
    }

    pub fn params(&self, base: ModelParams) -> Result<ModelParams> {
        let p: ModelParams = merge(&base, &self.overrides)?;
        p.validate()?;
        Ok(p)
    }

    pub fn plan(&self, base: StirapPlan) -> Result<StirapPlan> {
        let p: StirapPlan = merge(&base, &self.overrides)?;
        p.validate()?;
        Ok(p)
    }

    pub fn samples(&self, default: usize) -> usize {
        self.samples.unwrap_or(default)
    }

    pub fn overrides(&self) -> &BTreeMap<String, Value> {
        &self.overrides
    }
}

/// Runs the configured experiment without touching the filesystem.
pub fn compute(config: &ExperimentConfig) -> Result<Outcome> {
    let exp = config.experiment()?;
    match exp {
        Experiment::Sweep => sweep::sweep(config),
        Experiment::Validate => validate::validate(&Ctx::new(config, &[])?),
        _ => presets::run_preset(exp, &Ctx::new(config, &[])?),
    }
}

/// Runs the experiment and writes its artifacts to the output directory.
/// A failed check is reported as an error after everything is written.
pub fn run(config: &ExperimentConfig) -> Result<RunManifest> {
    let start = Instant::now();
    let outcome = compute(config)?;
    let manifest = write_outcome(config, &outcome, start.elapsed().as_secs_f64())?;
    match outcome.failure {
        Some(f) => Err(Error::Validation(f)),
        None => Ok(manifest),
    }
}

fn write_outcome(config: &ExperimentConfig, outcome: &Outcome, duration: f64) -> Result<RunManifest> {
    let mut w = output::RunWriter::create(&config.output_dir())?;
    for t in &outcome.tables {
        w.write(&t.file_name(), t.to_csv().as_bytes())?;
    }
    for (name, doc) in &outcome.documents {
        w.write_json(name, doc)?;
    }
    let mut summary = outcome.summary.clone();
    summary.insert("experiment".into(), outcome.experiment.name().into());
    summary.insert("frequency_unit".into(), outcome.units.frequency.into());
    w.write_json("summary.json", &summary)?;
    let manifest = RunManifest {
        experiment: outcome.experiment.name().to_owned(),
        version: env!("CARGO_PKG_VERSION").to_owned(),
        frequency_unit: outcome.units.frequency.to_owned(),
        time_unit: outcome.units.time.to_owned(),
        parameters: outcome.parameters.clone(),
        overrides: config.overrides.clone(),
        samples: config.samples,
        tolerances: IntegratorTolerances {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
        },
        artifacts: w.artifacts.clone(),
        duration_seconds: duration,
        notes: outcome.notes.clone(),
    };
    w.finish(&manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        let err = "fig9".parse::<Experiment>().unwrap_err();
        assert!(matches!(&err, Error::Usage(m) if m.contains("table1") && m.contains("expt-feedback")));
    }

    #[test]
    fn overrides_are_checked_and_merged() {
        let cfg = ExperimentConfig::new("fig3").with_override("delta_p", 7.0).with_override("tau", 50.0);
        let ctx = Ctx::new(&cfg, &[]).unwrap();
        let p = ctx.params(ModelParams::default()).unwrap();
        assert_eq!(p.delta_p, 7.0);
        assert_eq!(ctx.plan(StirapPlan::standard(2)).unwrap().tau, 50.0);
        let bad = ExperimentConfig::new("fig3").with_override("delta_q", 1.0);
        assert!(matches!(Ctx::new(&bad, &[]), Err(Error::Usage(_))));
        let typed = ExperimentConfig::new("fig3").with_override("n_fock", "many");
        assert!(Ctx::new(&typed, &[]).unwrap().params(ModelParams::default()).is_err());
    }

    #[test]
    fn config_merge_prefers_later() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"experiment":"fig6","overrides":{"kappa":5.0,"eta":0.1},"samples":11}"#).unwrap();
        let cli = ExperimentConfig::new("").with_override("kappa", 7.0);
        let m = file.merged(cli);
        assert_eq!(m.experiment, "fig6");
        assert_eq!(m.overrides["kappa"], 7.0);
        assert_eq!(m.overrides["eta"], 0.1);
        assert_eq!(m.samples, Some(11));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"experimant":"x"}"#).is_err());
    }
}
