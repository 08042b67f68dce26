//! Horizon search for the time-optimal problems, the T_f stationarity certificate and the
//! speedup and schedule-spread metrics.

use serde::Serialize;

use super::cdj::{adjoint_pass_cdj, CdjOptions};
use super::grape::{nesterov_grape_with, replay_fidelity, OptimizationResult};
use super::{ControlKind, ControlProblem, GrapeConfig};
use crate::dynamics::lindblad::{default_step, propagate, Generator};
use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::operators::projector_set;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// (T_f + τ_m) / F.
pub fn tts(t_f: f64, tau_m: f64, fidelity: f64) -> f64 {
    (t_f + tau_m) / fidelity
}

pub fn log_tts(t_f: f64, tau_m: f64, fidelity: f64) -> f64 {
    (t_f + tau_m).ln() - fidelity.ln()
}

/// dJ/dT_f for the time-optimal kinds when the schedule is extended at its final angle:
/// Lindblad: 1/(T_f+τ_m) − Tr(Π L[ρ(T_f)]) / Tr(Π ρ(T_f));
/// most likely path: adds the running cost at T_f and uses the path drift F in place of L[ρ].
pub fn tf_stationarity(problem: &ControlProblem, schedule: &Schedule, cdj: &CdjOptions) -> Result<f64> {
    let t_f = schedule.t_f();
    let last_axis = &schedule.axes()[schedule.intervals() - 1];
    match problem.kind {
        ControlKind::LindbladOt => {
            let h = default_step(&problem.instance, schedule, &problem.measurement);
            let states = propagate(&problem.rho0, &problem.instance, schedule, &problem.measurement, h)?;
            let rho = states.last().expect("non-empty");
            let gen = Generator::<f64>::new(&problem.instance, last_axis, &problem.measurement)?;
            Ok(1.0 / (t_f + problem.tau_m) - inner(&problem.target, &gen.apply(rho)) / inner(&problem.target, rho))
        }
        ControlKind::MlpOt => {
            let pass = adjoint_pass_cdj(problem, schedule, cdj, None)?;
            let rho = pass.states.last().expect("non-empty");
            let ps = projector_set(&problem.instance, last_axis)?.projectors;
            let share = problem.measurement.share(problem.instance.m());
            let last = schedule.len() - 1;
            let mut running = 0.0;
            let mut drift = rho * 0.0;
            for (k, p) in ps.iter().enumerate() {
                let r = pass.readouts[(k, last)];
                let mean = inner(p, rho);
                running += cdj.weight * (0.5 * (r - 2.0 * mean).powi(2) + 2.0 * (mean - mean * mean));
                drift += (p * rho + rho * p - rho * (2.0 * mean)) * (r - 1.0);
            }
            Ok(1.0 / (t_f + problem.tau_m) + running / share
                - inner(&problem.target, &drift) / share / inner(&problem.target, rho))
        }
        _ => Err(Error::InvalidParameter("T_f stationarity is defined for time-optimal kinds only".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonResult {
    pub t_f: f64,
    pub fidelity: f64,
    pub tts: f64,
    pub log_tts: f64,
    /// Inner optimization at the selected horizon (absent for fixed-schedule searches).
    pub result: Option<OptimizationResult>,
    pub schedule: Schedule,
    /// (T_f, log TTS) for every probe, in evaluation order.
    pub probes: Vec<(f64, f64)>,
    /// The minimum sits at a bracket end.
    pub at_boundary: bool,
}

fn check_bracket(bracket: (f64, f64)) -> Result<()> {
    if !(bracket.0 > 0.0 && bracket.1 > bracket.0 && bracket.1.is_finite()) {
        return Err(Error::InvalidParameter(format!("invalid T_f bracket {bracket:?}")));
    }
    Ok(())
}

/// Golden-section minimization of `f` on [lo, hi] until the bracket is narrower than `tol`.
/// Returns the best probe and whether it lies within `tol` of an end.
fn golden<T: Clone>(
    bracket: (f64, f64),
    tol: f64,
    mut f: impl FnMut(f64) -> Result<(f64, T)>,
    probes: &mut Vec<(f64, f64)>,
) -> Result<(f64, f64, T, bool)> {
    let (mut a, mut b) = bracket;
    let mut eval = |t: f64, probes: &mut Vec<(f64, f64)>| -> Result<(f64, T)> {
        let (v, x) = f(t)?;
        probes.push((t, v));
        Ok((v, x))
    };
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = eval(c, probes)?;
    let mut fd = eval(d, probes)?;
    while b - a > tol {
        if fc.0 <= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = eval(c, probes)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = eval(d, probes)?;
        }
    }
    let (t, (v, x)) = if fc.0 <= fd.0 { (c, fc) } else { (d, fd) };
    let boundary = t - bracket.0 < tol || bracket.1 - t < tol;
    Ok((t, v, x, boundary))
}

/// Golden-section search over T_f of the Lindblad-replayed log TTS, re-optimizing the
/// schedule at every probe. Probes warm-start from the last probe's normalized schedule.
pub fn optimize_tf(
    problem: &ControlProblem,
    bracket: (f64, f64),
    tol: f64,
    cfg: &GrapeConfig,
    cdj: &CdjOptions,
) -> Result<HorizonResult> {
    if !problem.kind.is_ot() {
        return Err(Error::InvalidParameter("optimize_tf needs a time-optimal kind".into()));
    }
    check_bracket(bracket)?;
    let mut warm = problem.initial_schedule.clone();
    let mut probes = Vec::new();
    let (t_f, v, res, at_boundary) = golden(
        bracket,
        tol,
        |t| {
            let p = problem.clone().with_schedule(warm.rescaled(t)?)?;
            let res = nesterov_grape_with(&p, cfg, cdj)?;
            warm = res.schedule.clone();
            Ok((log_tts(t, problem.tau_m, res.final_fidelity), res))
        },
        &mut probes,
    )?;
    if at_boundary {
        log::warn!("log TTS minimum at the bracket edge T_f = {t_f}");
    }
    Ok(HorizonResult {
        t_f,
        fidelity: res.final_fidelity,
        tts: v.exp(),
        log_tts: v,
        schedule: res.schedule.clone(),
        result: Some(res),
        probes,
        at_boundary,
    })
}

/// The linear-schedule baseline (midpoint-sampled ramp): only T_f is optimized.
pub fn optimize_tf_linear(problem: &ControlProblem, bracket: (f64, f64), tol: f64) -> Result<HorizonResult> {
    check_bracket(bracket)?;
    let n = problem.instance.n();
    let mut probes = Vec::new();
    let (t_f, v, (sched, f), at_boundary) = golden(
        bracket,
        tol,
        |t| {
            let s = Schedule::linear_midpoint(n, t, problem.grid_size, 0.0)?;
            let f = replay_fidelity(problem, &s)?;
            Ok((log_tts(t, problem.tau_m, f), (s, f)))
        },
        &mut probes,
    )?;
    if at_boundary {
        log::warn!("linear-schedule log TTS minimum at the bracket edge T_f = {t_f}");
    }
    Ok(HorizonResult { t_f, fidelity: f, tts: v.exp(), log_tts: v, result: None, schedule: sched, probes, at_boundary })
}

/// 𝒢 = TTS_opt / TTS_linear.
pub fn relative_speedup(tts_opt: f64, tts_linear: f64) -> Result<f64> {
    if !(tts_opt > 0.0 && tts_linear > 0.0) {
        return Err(Error::InvalidParameter(format!("TTS values must be positive ({tts_opt}, {tts_linear})")));
    }
    Ok(tts_opt / tts_linear)
}

/// d̄ = (1/(n(n−1))) Σ_{i≠j} ‖θ_i − θ_j‖, the L² norm in time by the trapezoid rule.
pub fn schedule_distance(times: &[f64], tracks: &[Vec<f64>]) -> Result<f64> {
    let n = tracks.len();
    if n < 2 {
        return Err(Error::InvalidParameter("schedule distance needs at least two tracks".into()));
    }
    if tracks.iter().any(|t| t.len() != times.len()) {
        return Err(Error::InvalidParameter("tracks do not share the time grid".into()));
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let d2: Vec<f64> = tracks[i].iter().zip(&tracks[j]).map(|(a, b)| (a - b).powi(2)).collect();
            let integral: f64 =
                times.windows(2).zip(d2.windows(2)).map(|(t, d)| 0.5 * (t[1] - t[0]) * (d[0] + d[1])).sum();
            total += 2.0 * integral.sqrt();
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}

/// d̄ over the per-qubit tracks of one schedule.
pub fn per_qubit_distance(schedule: &Schedule) -> Result<f64> {
    let tracks: Vec<Vec<f64>> = (0..schedule.n()).map(|q| schedule.track(q)).collect();
    schedule_distance(schedule.times(), &tracks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{generate_instance, InstanceKind};

    #[test]
    fn distance_closed_forms() {
        let times = vec![0.0, 1.0, 2.0, 4.0];
        assert_eq!(schedule_distance(&times, &[vec![0.3; 4], vec![0.3; 4]]).unwrap(), 0.0);
        let d = schedule_distance(&times, &[vec![0.1; 4], vec![0.6; 4]]).unwrap();
        assert!((d - 0.5 * 2.0).abs() < 1e-15);
        assert!(schedule_distance(&times, &[vec![0.1; 4]]).is_err());
    }

    #[test]
    fn speedup_inputs() {
        assert_eq!(relative_speedup(3.0, 3.0).unwrap(), 1.0);
        assert!(relative_speedup(0.0, 1.0).is_err());
    }

    #[test]
    fn residual_limits_and_kind_check() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let mut p = ControlProblem::new(ControlKind::LindbladOt, inst.clone(), 2.0, 20).unwrap();
        let s = p.initial_schedule.clone();
        let base = tf_stationarity(&p, &s, &CdjOptions::default()).unwrap();
        p.tau_m = 1e15;
        let lim = tf_stationarity(&p, &s, &CdjOptions::default()).unwrap();
        assert!((base - lim - 1.0 / 7.0).abs() < 1e-12);
        let ofs = ControlProblem::new(ControlKind::LindbladOfs, inst, 2.0, 20).unwrap();
        assert!(tf_stationarity(&ofs, &s, &CdjOptions::default()).is_err());
    }
}
