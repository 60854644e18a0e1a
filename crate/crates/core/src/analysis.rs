//! Observable extraction: populations, fidelities, maxima, convergence times
//! and blockade-ratio surfaces.

use serde::Serialize;

use crate::dynamics::EvolutionResult;
use crate::error::{Error, Result};
use crate::models::blockade_spectrum;
use crate::qspace::{Operator, QuantumState};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ObservableSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// Location and height of a series maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Peak {
    pub time: f64,
    pub value: f64,
}

impl ObservableSeries {
    pub fn new(name: impl Into<String>, times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension {
                expected: times.len(),
                found: values.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            times,
            values,
        })
    }

    /// A recorded observable of a run.
    pub fn from_result(result: &EvolutionResult, name: &str) -> Result<Self> {
        Self::new(name, result.times.clone(), result.observable(name)?.to_vec())
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }

    /// Largest sample, refined by a parabola through it and its two
    /// neighbours when the maximum is interior.
    pub fn max(&self) -> Option<Peak> {
        let (k, &v0) = self.values.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1))?;
        let sample = Peak {
            time: self.times[k],
            value: v0,
        };
        if k == 0 || k + 1 == self.values.len() {
            return Some(sample);
        }
        let (vm, vp) = (self.values[k - 1], self.values[k + 1]);
        let (tm, t0, tp) = (self.times[k - 1], self.times[k], self.times[k + 1]);
        // Parabola through three (possibly unevenly spaced) points.
        let d1 = (v0 - vm) / (t0 - tm);
        let d2 = (vp - v0) / (tp - t0);
        let a = (d2 - d1) / (tp - tm);
        if !(a < 0.0) {
            return Some(sample);
        }
        let b = d1 - a * (t0 + tm);
        let t_star = (-b / (2.0 * a)).clamp(tm, tp);
        let value = v0 + (t_star - t0) * (d1 + a * (t_star - tm));
        Some(Peak {
            time: t_star,
            value: value.max(v0),
        })
    }

    pub fn sqrt(&self, name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            times: self.times.clone(),
            values: self.values.iter().map(|v| v.max(0.0).sqrt()).collect(),
        }
    }
}

/// Operator measuring `target` on `space`: the projector, extended by identity
/// when `target` lives on leading subsystems only (e.g. atoms of an
/// atom–cavity run).
pub fn projector_on(target: &QuantumState, space: &crate::qspace::CompositeSpace) -> Result<Operator> {
    let p = Operator::projector(target)?;
    if p.space() == space {
        Ok(p)
    } else {
        p.extend_to(space)
    }
}

/// `⟨target|ρ(t)|target⟩` from a run that kept its states.
pub fn population_series(result: &EvolutionResult, target: &QuantumState) -> Result<ObservableSeries> {
    if result.states.len() != result.times.len() {
        return Err(Error::Validation("run did not keep its states".into()));
    }
    if target.vector().is_none() {
        return Err(Error::Unsupported("population against a mixed target".into()));
    }
    let space = result.final_state.space();
    let op = projector_on(target, space).map_err(|_| Error::Validation("target and run live on different spaces".into()))?;
    let values = result
        .states
        .iter()
        .map(|s| s.expectation(&op).map(|z| z.re))
        .collect::<Result<Vec<_>>>()?;
    ObservableSeries::new("population", result.times.clone(), values)
}

/// `F(t) = √⟨target|ρ(t)|target⟩` for a pure target.
pub fn fidelity_series(result: &EvolutionResult, target: &QuantumState) -> Result<ObservableSeries> {
    if target.vector().is_none() {
        return Err(Error::Unsupported("fidelity against a mixed target".into()));
    }
    Ok(population_series(result, target)?.sqrt("fidelity"))
}

/// First sample after which the series never drops below `threshold`.
pub fn convergence_time(series: &ObservableSeries, threshold: f64) -> Result<Option<f64>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidParameter("threshold must lie in (0, 1)".into()));
    }
    let mut first = None;
    for (k, &v) in series.values.iter().enumerate().rev() {
        if v >= threshold {
            first = Some(k);
        } else {
            break;
        }
    }
    Ok(first.map(|k| series.times[k]))
}

/// `R₁`, `R₂` on a grid of `Δ/Ω_eff` (rows) and `λ/Ω_eff` (columns).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioSurface {
    pub delta_axis: Vec<f64>,
    pub lambda_axis: Vec<f64>,
    pub r1: Vec<Vec<f64>>,
    pub r2: Vec<Vec<f64>>,
}

pub fn linspace(start: f64, stop: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..count)
            .map(|k| if k + 1 == count { stop } else { start + (stop - start) * k as f64 / (count - 1) as f64 })
            .collect(),
    }
}

pub fn ratio_surface(delta_axis: &[f64], lambda_axis: &[f64], omega_eff: f64) -> Result<RatioSurface> {
    if lambda_axis.iter().any(|&l| !(l > 0.0)) {
        return Err(Error::InvalidParameter("lambda axis must be positive".into()));
    }
    let mut r1 = Vec::with_capacity(delta_axis.len());
    let mut r2 = Vec::with_capacity(delta_axis.len());
    for &d in delta_axis {
        let row = lambda_axis
            .iter()
            .map(|&l| blockade_spectrum(l * omega_eff, d * omega_eff, omega_eff))
            .collect::<Result<Vec<_>>>()?;
        r1.push(row.iter().map(|s| s.r1).collect());
        r2.push(row.iter().map(|s| s.r2).collect());
    }
    Ok(RatioSurface {
        delta_axis: delta_axis.to_vec(),
        lambda_axis: lambda_axis.to_vec(),
        r1,
        r2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{evolve_lindblad, LindbladProblem, Record, TimeGrid};
    use crate::qspace::CompositeSpace;

    fn series(values: Vec<f64>) -> ObservableSeries {
        let times = (0..values.len()).map(|k| k as f64).collect();
        ObservableSeries::new("x", times, values).unwrap()
    }

    #[test]
    fn parabolic_peak_is_exact_for_parabola() {
        let times = linspace(0.0, 1.0, 11);
        let values: Vec<f64> = times.iter().map(|t| 0.9 - (t - 0.537f64).powi(2)).collect();
        let s = ObservableSeries::new("p", times, values).unwrap();
        let p = s.max().unwrap();
        assert!((p.time - 0.537).abs() < 1e-12);
        assert!((p.value - 0.9).abs() < 1e-12);
        let edge = series(vec![0.1, 0.2, 0.3]);
        assert_eq!(edge.max().unwrap().value, 0.3);
    }

    #[test]
    fn sustained_crossing() {
        let mut v: Vec<f64> = (0..20).map(|k| k as f64 / 19.0).collect();
        assert_eq!(convergence_time(&series(v.clone()), 0.9).unwrap(), Some(18.0));
        // a later dip moves the crossing
        v[19] = 0.5;
        assert_eq!(convergence_time(&series(v.clone()), 0.9).unwrap(), None);
        let osc = series(vec![0.0, 0.95, 0.85, 0.92, 0.97]);
        assert_eq!(convergence_time(&osc, 0.9).unwrap(), Some(3.0));
        assert!(convergence_time(&osc, 1.5).is_err());
        // crossing at the 10th sample of a monotone series
        let mono = series((0..20).map(|k| if k >= 9 { 0.95 } else { 0.1 * k as f64 / 9.0 }).collect());
        assert_eq!(convergence_time(&mono, 0.9).unwrap(), Some(9.0));
    }

    #[test]
    fn fidelity_squares_to_population() {
        let s = CompositeSpace::from_labels(&[("q", &["g", "e"])]).unwrap();
        let e = QuantumState::basis_ket(&s, &["e"]).unwrap();
        let g = QuantumState::basis_ket(&s, &["g"]).unwrap();
        let h = Operator::transition(&s, "q", "g", "e").unwrap().plus_hc() * 0.4;
        let c = Operator::transition(&s, "q", "g", "e").unwrap() * 0.3;
        let p = LindbladProblem::new(h, g.clone()).unwrap().with_collapse(c).unwrap();
        let r = evolve_lindblad(&p, &TimeGrid::new(0.0, 8.0, 33).unwrap(), &Record::default().with_states()).unwrap();
        let pop = population_series(&r, &e).unwrap();
        let fid = fidelity_series(&r, &e).unwrap();
        for (f, p) in fid.values.iter().zip(&pop.values) {
            assert!((f * f - p).abs() < 1e-12);
        }
        let pg = population_series(&r, &g).unwrap();
        assert!((pg.values[0] - 1.0).abs() < 1e-15);
        for (a, b) in pg.values.iter().zip(&pop.values) {
            assert!((a + b - 1.0).abs() < 1e-8);
        }
        assert!(matches!(fidelity_series(&r, &g.to_mixed()), Err(Error::Unsupported(_))));
        let quarter = series(vec![0.25]);
        assert_eq!(quarter.sqrt("f").values, vec![0.5]);
    }

    #[test]
    fn surface_properties() {
        let deltas = linspace(0.0, 20.0, 11);
        let lambdas = linspace(1.0, 50.0, 15);
        let s = ratio_surface(&deltas, &lambdas, 1.0).unwrap();
        for (j, l) in lambdas.iter().enumerate() {
            assert!((s.r1[0][j] - l).abs() < 1e-9 && (s.r2[0][j] - l).abs() < 1e-9);
        }
        for i in 0..deltas.len() {
            for j in 0..lambdas.len() {
                assert!(s.r1[i][j] >= s.r2[i][j] - 1e-12);
                assert!(s.r1[i][j].is_finite() && s.r2[i][j] > 0.0);
            }
        }
        let p = ratio_surface(&[5.0], &[20.0], 1.0).unwrap();
        assert!((p.r1[0][0] - 24.21).abs() < 0.01 && (p.r2[0][0] - 16.65).abs() < 0.01);
        assert!(ratio_surface(&[0.0], &[0.0], 1.0).is_err());
    }

    proptest::proptest! {
        #[test]
        fn convergence_monotone_in_threshold(v in proptest::collection::vec(0.0f64..1.0, 2..40), a in 0.01f64..0.99, b in 0.01f64..0.99) {
            let s = series(v);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            let t_lo = convergence_time(&s, lo).unwrap();
            let t_hi = convergence_time(&s, hi).unwrap();
            if let Some(th) = t_hi {
                proptest::prop_assert!(t_lo.is_some_and(|tl| tl <= th));
            }
        }
    }
}
