//! Gaussian STIRAP pairs, the counterdiabatic ("shortcut") amplitude derived
//! from them, and the blockade-condition integral.
//!
//! With `Ω′_a(t) = Ω₀ exp[−(t − t_c/2 − τ)²/T²]` and
//! `Ω′_b(t) = Ω₀ exp[−(t − t_c/2 + τ)²/T²]`, the mixing angle is
//! `θ = arctan(√n Ω′_a/Ω′_b)` and the drive actually applied is
//! `Ω_a = iΩ_cap/√n`, `Ω_b = Ω_cap` with `Ω_cap² = Δ_p θ̇`.
//!
//! The ratio `Ω′_a/Ω′_b = exp(4τ(t − t_c/2)/T²)` does not depend on `Ω₀`, so
//! neither does `Ω_cap`; `Ω₀` is kept only for reporting.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::DrivePair;
use crate::qspace::{C64, I};

/// Amplitudes below this are treated as zero.
pub const UNDERFLOW: f64 = 1e-300;
/// Absolute tolerance on each of the real and imaginary parts of quadratures.
pub const QUADRATURE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapPlan {
    /// Peak amplitude `Ω₀`.
    pub omega0: f64,
    /// Total operation time.
    pub t_c: f64,
    /// Pulse offset.
    pub tau: f64,
    /// Pulse width `T`.
    pub width: f64,
    pub n_atoms: usize,
}

/// Every pulse quantity at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PulseSample {
    pub t: f64,
    pub omega_a_prime: f64,
    pub omega_b_prime: f64,
    /// `√(n Ω′_a² + Ω′_b²)`
    pub omega_prime: f64,
    pub theta: f64,
    pub theta_dot: f64,
    pub omega_cap: f64,
}

impl StirapPlan {
    /// Two-atom plan `t_c = 300`, `τ = 0.2 t_c`, `T = 0.3 t_c`.
    pub fn standard(n_atoms: usize) -> Self {
        Self {
            omega0: 1.0,
            t_c: 300.0,
            tau: 60.0,
            width: 90.0,
            n_atoms,
        }
    }

    /// Checks `t_c, T > 0`, `|τ| < t_c/2` and `n ∈ {2, 3}`. Non-positive `τ`
    /// is admitted so the degenerate and reversed orderings can be examined;
    /// [`cap_amplitude`] rejects the latter.
    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega0, self.t_c, self.tau, self.width].iter().all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParameter("pulse plan has non-finite fields".into()));
        }
        if self.t_c <= 0.0 || self.width <= 0.0 {
            return Err(Error::InvalidParameter("t_c and width must be positive".into()));
        }
        if self.tau.abs() >= self.t_c / 2.0 {
            return Err(Error::InvalidParameter("|tau| must be below t_c/2".into()));
        }
        if !(2..=3).contains(&self.n_atoms) {
            return Err(Error::InvalidParameter(format!("n_atoms = {} (expected 2 or 3)", self.n_atoms)));
        }
        Ok(())
    }

    fn sqrt_n(&self) -> f64 {
        (self.n_atoms as f64).sqrt()
    }

    fn check_time(&self, t: f64) -> Result<()> {
        let slack = 1e-12 * self.t_c;
        if !(t >= -slack && t <= self.t_c + slack) {
            return Err(Error::OutOfRange {
                t,
                start: 0.0,
                end: self.t_c,
            });
        }
        Ok(())
    }

    /// `ln(Ω′_a/Ω′_b)`
    fn log_ratio(&self, t: f64) -> f64 {
        4.0 * self.tau * (t - self.t_c / 2.0) / (self.width * self.width)
    }

    /// Closed-form `θ̇` without range checks.
    fn theta_dot_unchecked(&self, t: f64) -> f64 {
        let sn = self.sqrt_n();
        let r = self.log_ratio(t).exp();
        let k = 4.0 * self.tau / (self.width * self.width);
        // √n r/(n r² + 1) written to stay finite for r → 0 and r → ∞
        k * sn / (sn * sn * r + r.recip())
    }

    fn theta_unchecked(&self, t: f64) -> f64 {
        (self.sqrt_n() * self.log_ratio(t).exp()).atan()
    }

    pub fn gaussian_pair(&self, t: f64) -> Result<(f64, f64)> {
        self.check_time(t)?;
        let g = |c: f64| {
            let x = (t - c) / self.width;
            let v = self.omega0 * (-x * x).exp();
            if v.abs() < UNDERFLOW {
                0.0
            } else {
                v
            }
        };
        let mid = self.t_c / 2.0;
        Ok((g(mid + self.tau), g(mid - self.tau)))
    }

    /// `(θ, θ̇)` at `t`.
    pub fn mixing_angle(&self, t: f64) -> Result<(f64, f64)> {
        let (a, b) = self.gaussian_pair(t)?;
        if a == 0.0 && b == 0.0 {
            return Err(Error::DegenerateAngle(t));
        }
        Ok((self.theta_unchecked(t), self.theta_dot_unchecked(t)))
    }

    /// `Ω_cap = √(Δ_p θ̇)`.
    pub fn cap_amplitude(&self, delta_p: f64, t: f64) -> Result<f64> {
        if !(delta_p > 0.0) {
            return Err(Error::InvalidParameter("delta_p must be positive".into()));
        }
        let (_, theta_dot) = self.mixing_angle(t)?;
        if theta_dot < 0.0 {
            return Err(Error::Domain(format!("theta_dot = {theta_dot} < 0 at t = {t}")));
        }
        Ok((delta_p * theta_dot).sqrt())
    }

    pub fn sample(&self, delta_p: f64, t: f64) -> Result<PulseSample> {
        let (a, b) = self.gaussian_pair(t)?;
        let (theta, theta_dot) = self.mixing_angle(t)?;
        let n = self.n_atoms as f64;
        Ok(PulseSample {
            t,
            omega_a_prime: a,
            omega_b_prime: b,
            omega_prime: (n * a * a + b * b).sqrt(),
            theta,
            theta_dot,
            omega_cap: self.cap_amplitude(delta_p, t)?,
        })
    }

    /// `(Ω_a, Ω_b) = (iΩ_cap/√n, Ω_cap)` as model drives. Fails up front for
    /// reversed pulse ordering.
    pub fn drive_pair(&self, delta_p: f64) -> Result<DrivePair> {
        self.validate()?;
        if !(delta_p > 0.0) {
            return Err(Error::InvalidParameter("delta_p must be positive".into()));
        }
        if self.tau < 0.0 {
            return Err(Error::Domain("negative tau gives theta_dot < 0".into()));
        }
        let plan = *self;
        let cap = move |t: f64| (delta_p * plan.theta_dot_unchecked(t).max(0.0)).sqrt();
        let sn = self.sqrt_n();
        Ok(DrivePair {
            omega_a: Arc::new(move |t| I * (cap(t) / sn)),
            omega_b: Arc::new(move |t| C64::new(cap(t), 0.0)),
        })
    }

    /// `S(t_c) = i∫₀^{t_c} e^{−iλ(t_c−t)} w Ω_a Ω_b/Δ_p dt` with the shortcut
    /// drives, where `w = 1` for two atoms and `√2` for three.
    pub fn blockade_integral(&self, delta_p: f64, lambda: f64) -> Result<BlockadeIntegral> {
        let d = self.drive_pair(delta_p)?;
        let w = if self.n_atoms == 3 { 2f64.sqrt() } else { 1.0 };
        let coupling = move |t: f64| (d.omega_a)(t) * (d.omega_b)(t) * (w / delta_p);
        blockade_integral_with(coupling, self.t_c, lambda)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlockadeIntegral {
    pub s_re: f64,
    pub s_im: f64,
    /// `|S(t_c)/2|`
    pub diagnostic: f64,
}

impl BlockadeIntegral {
    pub fn s(&self) -> C64 {
        C64::new(self.s_re, self.s_im)
    }
}

/// `S = i∫₀^{t_c} e^{−iλ(t_c−t)} f(t) dt` for an arbitrary coupling `f`.
pub fn blockade_integral_with(f: impl Fn(f64) -> C64, t_c: f64, lambda: f64) -> Result<BlockadeIntegral> {
    if lambda == 0.0 || !lambda.is_finite() {
        return Err(Error::InvalidParameter("lambda must be finite and nonzero".into()));
    }
    let integrand = |t: f64| (-I * lambda * (t_c - t)).exp() * f(t);
    let s = I * adaptive_simpson(integrand, 0.0, t_c, QUADRATURE_TOL, (lambda.abs() * t_c / std::f64::consts::PI).ceil() as usize)?;
    Ok(BlockadeIntegral {
        s_re: s.re,
        s_im: s.im,
        diagnostic: s.norm() / 2.0,
    })
}

/// Adaptive Simpson quadrature of a complex integrand. The interval is first
/// split into at least `4·(panels + 4)` pieces so oscillations are resolved
/// before the error estimate is trusted; `tol` bounds the real and the
/// imaginary part separately.
pub fn adaptive_simpson(f: impl Fn(f64) -> C64, a: f64, b: f64, tol: f64, panels: usize) -> Result<C64> {
    let n = 4 * (panels.min(1 << 20) + 4);
    let h = (b - a) / n as f64;
    let mut total = C64::new(0.0, 0.0);
    let tol_each = tol / n as f64;
    for k in 0..n {
        let (x0, x1) = (a + k as f64 * h, if k + 1 == n { b } else { a + (k + 1) as f64 * h });
        let (f0, f1) = (eval(&f, x0)?, eval(&f, x1)?);
        let m = 0.5 * (x0 + x1);
        let fm = eval(&f, m)?;
        let whole = simpson(x0, x1, f0, fm, f1);
        total += refine(&f, x0, x1, f0, fm, f1, whole, tol_each, 48)?;
    }
    Ok(total)
}

fn eval(f: &impl Fn(f64) -> C64, x: f64) -> Result<C64> {
    let v = f(x);
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(Error::Integration(format!("non-finite integrand at t = {x}")))
    }
}

fn simpson(a: f64, b: f64, fa: C64, fm: C64, fb: C64) -> C64 {
    (fa + fm * 4.0 + fb) * ((b - a) / 6.0)
}

#[allow(clippy::too_many_arguments)]
fn refine(f: &impl Fn(f64) -> C64, a: f64, b: f64, fa: C64, fm: C64, fb: C64, whole: C64, tol: f64, depth: u32) -> Result<C64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (eval(f, lm)?, eval(f, rm)?);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || (delta.re.abs() <= 15.0 * tol && delta.im.abs() <= 15.0 * tol) {
        return Ok(left + right + delta / 15.0);
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn fig4() -> StirapPlan {
        StirapPlan::standard(2)
    }

    #[test]
    fn pair_symmetry_and_peak() {
        let p = StirapPlan { omega0: 2.0, ..fig4() };
        let (a, b) = p.gaussian_pair(150.0).unwrap();
        let want = 2.0 * (-(60.0f64 / 90.0).powi(2)).exp();
        assert!((a - want).abs() < 1e-15 && (b - want).abs() < 1e-15);
        assert!((p.gaussian_pair(210.0).unwrap().0 - 2.0).abs() < 1e-15);
        let a0 = p.gaussian_pair(0.0).unwrap().0 / 2.0;
        assert!((a0 - (-49.0f64 / 9.0).exp()).abs() < 1e-15);
        assert!(matches!(p.gaussian_pair(301.0), Err(Error::OutOfRange { .. })));
        assert!(p.gaussian_pair(-1.0).is_err());
    }

    #[test]
    fn angle_at_midpoint() {
        let (theta, _) = fig4().mixing_angle(150.0).unwrap();
        assert!((theta - 2f64.sqrt().atan()).abs() < 1e-15);
        let three = StirapPlan::standard(3);
        assert!((three.mixing_angle(150.0).unwrap().0 - 3f64.sqrt().atan()).abs() < 1e-15);
    }

    #[test]
    fn theta_dot_matches_finite_difference() {
        for plan in [fig4(), StirapPlan::standard(3)] {
            for k in 0..20 {
                let t = 5.0 + 290.0 * k as f64 / 19.0;
                let h = 1e-3;
                let fd = (plan.mixing_angle(t + h).unwrap().0 - plan.mixing_angle(t - h).unwrap().0) / (2.0 * h);
                let an = plan.mixing_angle(t).unwrap().1;
                assert!(an > 0.0);
                assert!(((fd - an) / an).abs() < 1e-6, "t={t} fd={fd} an={an}");
            }
        }
    }

    #[test]
    fn boundary_angles() {
        let p = fig4();
        let (t0, _) = p.mixing_angle(0.0).unwrap();
        let (t1, _) = p.mixing_angle(p.t_c).unwrap();
        // θ(0) = arctan(√2 e^{−40/9})
        assert!((t0 - (2f64.sqrt() * (-40.0f64 / 9.0).exp()).atan()).abs() < 1e-15);
        assert!(t1 > FRAC_PI_2 * 0.95);
    }

    #[test]
    fn degenerate_and_reversed() {
        let flat = StirapPlan { tau: 0.0, ..fig4() };
        for t in [0.0, 100.0, 300.0] {
            assert_eq!(flat.cap_amplitude(160.0, t).unwrap(), 0.0);
        }
        let reversed = StirapPlan { tau: -60.0, ..fig4() };
        assert!(matches!(reversed.cap_amplitude(160.0, 100.0), Err(Error::Domain(_))));
        assert!(matches!(reversed.drive_pair(160.0), Err(Error::Domain(_))));
        let narrow = StirapPlan { width: 1.0, ..fig4() };
        assert!(matches!(narrow.mixing_angle(0.0), Err(Error::DegenerateAngle(_))));
        assert!(StirapPlan { t_c: -1.0, ..fig4() }.validate().is_err());
        assert!(StirapPlan { tau: 200.0, ..fig4() }.validate().is_err());
    }

    #[test]
    fn cap_scales_as_sqrt_delta() {
        let p = fig4();
        let a = p.cap_amplitude(40.0, 120.0).unwrap();
        let b = p.cap_amplitude(160.0, 120.0).unwrap();
        assert!((b / a - 2.0).abs() < 1e-14);
    }

    #[test]
    fn pulse_area_equals_swept_angle() {
        let p = fig4();
        let dp = 160.0;
        let area = adaptive_simpson(|t| C64::new(p.cap_amplitude(dp, t).unwrap().powi(2) / dp, 0.0), 0.0, p.t_c, 1e-12, 4)
            .unwrap()
            .re;
        let swept = p.mixing_angle(p.t_c).unwrap().0 - p.mixing_angle(0.0).unwrap().0;
        assert!((area - swept).abs() < 1e-9, "{area} vs {swept}");
    }

    #[test]
    fn drive_pair_reproduces_effective_coupling() {
        let p = fig4();
        let d = p.drive_pair(160.0).unwrap();
        for t in [10.0, 150.0, 290.0] {
            let eff = d.raman(160.0)(t);
            let (_, td) = p.mixing_angle(t).unwrap();
            // Ω̄_a Ω_b/Δ_p = −i θ̇/√2
            assert!((eff - C64::new(0.0, -td / 2f64.sqrt())).norm() < 1e-14);
        }
        let s = p.sample(160.0, 100.0).unwrap();
        let n = 2.0;
        assert!((s.omega_prime.powi(2) - (n * s.omega_a_prime.powi(2) + s.omega_b_prime.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn constant_coupling_closed_form() {
        let (oe, lambda, tc) = (0.01, 0.37, 50.0);
        let b = blockade_integral_with(|_| C64::new(oe, 0.0), tc, lambda).unwrap();
        let want = oe / (2.0 * lambda) * ((-I * lambda * tc).exp() - 1.0).norm();
        assert!((b.diagnostic - want).abs() < 1e-10);
        assert!(b.diagnostic <= oe / lambda);
        let big = blockade_integral_with(|_| C64::new(oe, 0.0), tc, 1e4).unwrap();
        assert!(big.diagnostic < 1e-5);
        assert!(matches!(blockade_integral_with(|_| C64::new(1.0, 0.0), 1.0, 0.0), Err(Error::InvalidParameter(_))));
        assert!(matches!(
            blockade_integral_with(|_| C64::new(f64::NAN, 0.0), 1.0, 1.0),
            Err(Error::Integration(_))
        ));
    }

    #[test]
    fn standard_plan_diagnostic_small_and_converged() {
        let p = fig4();
        let b = p.blockade_integral(160.0, 0.1).unwrap();
        assert!(b.diagnostic < 0.1, "{}", b.diagnostic);
        let d = p.drive_pair(160.0).unwrap();
        let coupling = move |t: f64| (d.omega_a)(t) * (d.omega_b)(t) / 160.0;
        let integrand = |t: f64| (-I * 0.1 * (p.t_c - t)).exp() * coupling(t);
        let fine = adaptive_simpson(integrand, 0.0, p.t_c, QUADRATURE_TOL / 100.0, 20).unwrap();
        assert!(((fine * I).norm() - b.s().norm()).abs() < 1e-8);
    }
}
