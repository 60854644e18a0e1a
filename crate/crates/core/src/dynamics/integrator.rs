//! Dormand–Prince 5(4) with step clipping onto output times.

use crate::error::{Error, Result};
use crate::qspace::C64;

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 50_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, serde::Serialize)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

/// Scaled max-norm of `v` against `atol + rtol·|y|`.
fn scaled_norm(v: &[C64], y: &[C64], rtol: f64, atol: f64) -> f64 {
    v.iter()
        .zip(y)
        .map(|(e, y)| e.norm() / (atol + rtol * y.norm()))
        .fold(0.0, f64::max)
}

/// Integrates `y' = f(t, y)` from `times[0]`, calling `sample(k, t_k, y)` at
/// every output time (including the first). Steps are shortened to land on
/// output times exactly; the proposed step size survives such clipping.
pub fn integrate<F, S>(mut y: Vec<C64>, times: &[f64], rtol: f64, atol: f64, mut f: F, mut sample: S) -> Result<IntegratorStats>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    S: FnMut(usize, f64, &[C64]) -> Result<()>,
{
    let n = y.len();
    let mut stats = IntegratorStats::default();
    let Some(&t0) = times.first() else {
        return Ok(stats);
    };
    sample(0, t0, &y)?;
    if times.len() == 1 {
        return Ok(stats);
    }
    let mut k: Vec<Vec<C64>> = (0..7).map(|_| vec![C64::new(0.0, 0.0); n]).collect();
    let mut tmp = vec![C64::new(0.0, 0.0); n];
    let mut y_new = vec![C64::new(0.0, 0.0); n];
    let mut err = vec![C64::new(0.0, 0.0); n];

    let mut t = t0;
    f(t, &y, &mut k[0]);
    stats.rhs_evals += 1;
    let span = times[times.len() - 1] - t0;
    let mut h = initial_step(&y, &k[0], t, span, rtol, atol, &mut f, &mut tmp, &mut y_new);
    stats.rhs_evals += 1;

    for (idx, &target) in times.iter().enumerate().skip(1) {
        while t < target {
            if stats.accepted + stats.rejected > MAX_STEPS {
                return Err(Error::StepSize { t, h, err: f64::NAN });
            }
            let remaining = target - t;
            let clipped = h >= remaining;
            let step = if clipped { remaining } else { h };
            if step <= 1e-14 * t.abs().max(span) {
                return Err(Error::StepSize { t, h: step, err: f64::NAN });
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = C64::new(0.0, 0.0);
                    for (j, kj) in k.iter().enumerate().take(s) {
                        let a = A[s][j];
                        if a != 0.0 {
                            acc += kj[i] * a;
                        }
                    }
                    tmp[i] = y[i] + acc * step;
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                f(t + C[s] * step, &tmp, &mut tail[0]);
            }
            stats.rhs_evals += 6;
            // Stage 7 was evaluated at y + h Σ a_7j k_j, which is the 5th-order solution.
            y_new.copy_from_slice(&tmp);
            for i in 0..n {
                let mut e = C64::new(0.0, 0.0);
                for (j, kj) in k.iter().enumerate() {
                    if E[j] != 0.0 {
                        e += kj[i] * E[j];
                    }
                }
                err[i] = e * step;
            }
            let scale: Vec<C64> = y.iter().zip(&y_new).map(|(a, b)| if a.norm() > b.norm() { *a } else { *b }).collect();
            let e = scaled_norm(&err, &scale, rtol, atol);
            if !e.is_finite() {
                return Err(Error::Integration(format!("non-finite error estimate at t = {t}")));
            }
            if e <= 1.0 {
                t = if clipped { target } else { t + step };
                std::mem::swap(&mut y, &mut y_new);
                // FSAL: k7 is f(t_new, y_new).
                k.swap(0, 6);
                stats.accepted += 1;
                let factor = if e == 0.0 { 5.0 } else { (0.9 * e.powf(-0.2)).clamp(0.2, 5.0) };
                if !clipped {
                    h = step * factor;
                } else {
                    h = h.max(step * factor);
                }
            } else {
                stats.rejected += 1;
                h = step * (0.9 * e.powf(-0.2)).clamp(0.1, 0.9);
            }
        }
        sample(idx, target, &y)?;
    }
    Ok(stats)
}

#[allow(clippy::too_many_arguments)]
fn initial_step<F>(y: &[C64], f0: &[C64], t: f64, span: f64, rtol: f64, atol: f64, f: &mut F, y1: &mut [C64], f1: &mut [C64]) -> f64
where
    F: FnMut(f64, &[C64], &mut [C64]),
{
    let d0 = scaled_norm(y, y, rtol, atol);
    let d1 = scaled_norm(f0, y, rtol, atol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    for i in 0..y.len() {
        y1[i] = y[i] + f0[i] * h0;
    }
    f(t + h0, y1, f1);
    let diff: Vec<C64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&diff, y, rtol, atol) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(span)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let times: Vec<f64> = (0..=10).map(|k| k as f64 * 0.5).collect();
        let mut got = Vec::new();
        integrate(
            vec![C64::new(1.0, 0.0)],
            &times,
            1e-10,
            1e-12,
            |_, y, dy| dy[0] = C64::new(-0.3, 2.0) * y[0],
            |_, t, y| {
                got.push((t, y[0]));
                Ok(())
            },
        )
        .unwrap();
        assert_eq!(got.len(), times.len());
        for (t, y) in got {
            let want = (C64::new(-0.3, 2.0) * t).exp();
            assert!((y - want).norm() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn lands_on_sample_times() {
        let times = [0.0, 0.1, 0.1 + 1e-9, 3.0];
        let mut seen = Vec::new();
        integrate(vec![C64::new(1.0, 0.0)], &times, 1e-8, 1e-10, |_, _, dy| dy[0] = C64::new(1.0, 0.0), |_, t, y| {
            seen.push(t);
            assert!((y[0].re - 1.0 - t).abs() < 1e-12);
            Ok(())
        })
        .unwrap();
        assert_eq!(seen, times);
    }
}
