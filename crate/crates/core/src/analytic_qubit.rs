//! Closed-form optimal dragging of one qubit in the xz plane.
//!
//! Angles are Bloch azimuths: σ(φ) = cos φ σ_x + sin φ σ_z. The measurement rate Γ relates to the
//! clause-measurement time by Γ = 1/(4τ); [`QubitDragSpec::from_tau`] converts. In the projector
//! convention of [`crate::operators`], the ground state of the single clause (¬b₁) at axis angle θ
//! has Bloch azimuth θ, so the two angle conventions coincide for that clause.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitDragSpec {
    pub phi_i: f64,
    pub phi_f: f64,
    pub gamma_rate: f64,
    pub t_f: f64,
}

impl QubitDragSpec {
    pub fn new(phi_i: f64, phi_f: f64, gamma_rate: f64, t_f: f64) -> Result<Self> {
        let s = Self { phi_i, phi_f, gamma_rate, t_f };
        s.validate()?;
        Ok(s)
    }

    pub fn from_tau(phi_i: f64, phi_f: f64, tau: f64, t_f: f64) -> Result<Self> {
        Self::new(phi_i, phi_f, 1.0 / (4.0 * tau), t_f)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma_rate > 0.0 && self.gamma_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("gamma_rate must be positive, got {}", self.gamma_rate)));
        }
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("T_f must be positive, got {}", self.t_f)));
        }
        if !(self.phi_i.is_finite() && self.phi_f.is_finite()) {
            return Err(Error::InvalidParameter("angles must be finite".into()));
        }
        Ok(())
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_f).contains(&t) {
            return Err(Error::InvalidParameter(format!("t = {t} outside [0, {}]", self.t_f)));
        }
        Ok(())
    }
}

/// Optimal readout-conditioned schedule: linear with offset arctan((φ_f−φ_i)/(4ΓT_f)).
pub fn mlp_schedule(spec: &QubitDragSpec, t: f64) -> Result<f64> {
    spec.validate()?;
    spec.check_time(t)?;
    let d = spec.phi_f - spec.phi_i;
    Ok(spec.phi_i + d * t / spec.t_f + (d / (4.0 * spec.gamma_rate * spec.t_f)).atan())
}

/// Residual sin(φ_f − x) − (x − φ_i)/(ΓT_f).
pub fn phi_tf_residual(spec: &QubitDragSpec, x: f64) -> f64 {
    (spec.phi_f - x).sin() - (x - spec.phi_i) / (spec.gamma_rate * spec.t_f)
}

/// Final Bloch azimuth under the optimal Lindblad schedule, by bisection on [φ_i, φ_f].
pub fn solve_phi_tf(spec: &QubitDragSpec) -> Result<f64> {
    spec.validate()?;
    let d = spec.phi_f - spec.phi_i;
    if d.abs() >= std::f64::consts::PI {
        return Err(Error::InvalidParameter(format!(
            "|phi_f - phi_i| = {} is outside the single-branch regime",
            d.abs()
        )));
    }
    if d == 0.0 {
        return Ok(spec.phi_i);
    }
    let (mut lo, mut hi) = (spec.phi_i, spec.phi_f);
    let mut f_lo = phi_tf_residual(spec, lo);
    let f_hi = phi_tf_residual(spec, hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::InvalidParameter("no sign change of the terminal-angle residual in [phi_i, phi_f]".into()));
    }
    // Bisect down to adjacent floats: the residual slope 1 + 1/(ΓT_f) grows for short horizons,
    // so any fixed x tolerance would leave a horizon-dependent residual.
    loop {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let f_mid = phi_tf_residual(spec, mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(if f_lo.abs() <= phi_tf_residual(spec, hi).abs() { lo } else { hi })
}

/// θ(t) = φ_i + (φ(T_f)−φ_i) t/T_f + ½(φ_f − φ(T_f)).
pub fn lindblad_schedule(spec: &QubitDragSpec, t: f64) -> Result<f64> {
    spec.check_time(t)?;
    let phi_t = solve_phi_tf(spec)?;
    Ok(lindblad_schedule_with(spec, phi_t, t))
}

fn lindblad_schedule_with(spec: &QubitDragSpec, phi_t: f64, t: f64) -> f64 {
    spec.phi_i + (phi_t - spec.phi_i) * t / spec.t_f + 0.5 * (spec.phi_f - phi_t)
}

/// J* = exp(−[1 − cos(φ_f − φ(T_f))] Γ T_f) cos(φ_f − φ(T_f)).
pub fn optimal_cost(spec: &QubitDragSpec) -> Result<f64> {
    let phi_t = solve_phi_tf(spec)?;
    let c = (spec.phi_f - phi_t).cos();
    Ok((-(1.0 - c) * spec.gamma_rate * spec.t_f).exp() * c)
}

/// Samples the Lindblad-optimal schedule on `points` equally spaced times, endpoints included.
pub fn sample_schedules(spec: &QubitDragSpec, points: usize) -> Result<Vec<(f64, f64, f64)>> {
    if points < 2 {
        return Err(Error::InvalidParameter("need at least two sample points".into()));
    }
    let phi_t = solve_phi_tf(spec)?;
    (0..points)
        .map(|k| {
            let t = spec.t_f * k as f64 / (points - 1) as f64;
            Ok((t, mlp_schedule(spec, t)?, lindblad_schedule_with(spec, phi_t, t)))
        })
        .collect()
}

/// Integrates dρ/dt = Γ(σ(θ)ρσ(θ) − ρ) from the pure state at φ_i with classical RK4 on the
/// Bloch vector (R_x, R_z) and returns Tr(ρ(T_f) σ(φ_f)). The control is sampled at stage times.
pub fn replay_lindblad(spec: &QubitDragSpec, schedule: impl Fn(f64) -> f64, steps: usize) -> Result<f64> {
    spec.validate()?;
    if steps == 0 {
        return Err(Error::InvalidParameter("steps must be positive".into()));
    }
    let g = spec.gamma_rate;
    // dR/dt = 2Γ[(n·R) n − R]
    let rhs = |t: f64, r: [f64; 2]| {
        let th = schedule(t);
        let (c, s) = (th.cos(), th.sin());
        let proj = c * r[0] + s * r[1];
        [2.0 * g * (proj * c - r[0]), 2.0 * g * (proj * s - r[1])]
    };
    let h = spec.t_f / steps as f64;
    let mut r = [spec.phi_i.cos(), spec.phi_i.sin()];
    for k in 0..steps {
        let t = k as f64 * h;
        let add = |a: [f64; 2], b: [f64; 2], w: f64| [a[0] + w * b[0], a[1] + w * b[1]];
        let k1 = rhs(t, r);
        let k2 = rhs(t + 0.5 * h, add(r, k1, 0.5 * h));
        let k3 = rhs(t + 0.5 * h, add(r, k2, 0.5 * h));
        let k4 = rhs(t + h, add(r, k3, h));
        for i in 0..2 {
            r[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    Ok(r[0] * spec.phi_f.cos() + r[1] * spec.phi_f.sin())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn mlp_offset_value() {
        let s = QubitDragSpec::new(0.0, FRAC_PI_2, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(mlp_schedule(&s, 0.0).unwrap(), 0.374_196_680_522_684_9, epsilon = 1e-15);
        assert_abs_diff_eq!(
            mlp_schedule(&s, 1.0).unwrap() - mlp_schedule(&s, 0.0).unwrap(),
            FRAC_PI_2,
            epsilon = 1e-15
        );
        assert!(mlp_schedule(&s, 1.5).is_err());
        let long = QubitDragSpec::new(0.0, FRAC_PI_2, 1.0, 1e12).unwrap();
        assert!(mlp_schedule(&long, 0.0).unwrap().abs() < 1e-11);
    }

    #[test]
    fn trivial_drag() {
        let s = QubitDragSpec::new(0.3, 0.3, 0.7, 2.0).unwrap();
        assert_eq!(solve_phi_tf(&s).unwrap(), 0.3);
        assert_eq!(optimal_cost(&s).unwrap(), 1.0);
        for t in [0.0, 0.5, 2.0] {
            assert_eq!(mlp_schedule(&s, t).unwrap(), 0.3);
            assert_eq!(lindblad_schedule(&s, t).unwrap(), 0.3);
        }
    }

    #[test]
    fn terminal_angle_residual() {
        let s = QubitDragSpec::new(0.0, FRAC_PI_2, 1.0, 2.0).unwrap();
        let x = solve_phi_tf(&s).unwrap();
        assert!(phi_tf_residual(&s, x).abs() < 1e-12);
        assert!(x > 0.0 && x < FRAC_PI_2);
        let long = QubitDragSpec::new(0.0, FRAC_PI_2, 1.0, 1e9).unwrap();
        assert!((solve_phi_tf(&long).unwrap() - FRAC_PI_2).abs() < 1e-8);
        assert!(solve_phi_tf(&QubitDragSpec::new(0.0, PI, 1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn schedule_is_affine() {
        let s = QubitDragSpec::new(0.1, 1.2, 0.4, 3.0).unwrap();
        let v: Vec<f64> = (0..5).map(|k| lindblad_schedule(&s, 0.75 * k as f64).unwrap()).collect();
        for w in v.windows(3) {
            assert!((w[2] - 2.0 * w[1] + w[0]).abs() < 1e-14);
        }
    }

    #[test]
    fn replay_matches_closed_form() {
        let s = QubitDragSpec::new(0.0, FRAC_PI_2, 0.25, 4.0).unwrap();
        let phi_t = solve_phi_tf(&s).unwrap();
        let j = replay_lindblad(&s, |t| lindblad_schedule_with(&s, phi_t, t), 4000).unwrap();
        assert_abs_diff_eq!(j, optimal_cost(&s).unwrap(), epsilon = 1e-6);
    }

    #[test]
    fn cost_increases_with_horizon() {
        let mut prev = f64::NEG_INFINITY;
        for k in 1..=50 {
            let s = QubitDragSpec::new(0.0, FRAC_PI_2, 1.0, 0.2 * k as f64).unwrap();
            let j = optimal_cost(&s).unwrap();
            assert!(j > prev);
            prev = j;
        }
    }
}
