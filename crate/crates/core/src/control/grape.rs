//! Nesterov-accelerated gradient descent on the piecewise-constant schedule.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::cdj::{adjoint_pass_cdj, CdjOptions};
use super::lindblad::adjoint_pass_lindblad;
use super::{schedule_of, tracks_of, ControlProblem, GrapeConfig};
use crate::dynamics::lindblad::{default_step, propagate};
use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::linalg::inner;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradTol,
    MaxIters,
    /// Learning rate shrank below 1e-12 of its start without an accepted step.
    Stalled,
    NonFinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizationResult {
    pub schedule: Schedule,
    pub cost_history: Vec<f64>,
    pub gradient_norm_history: Vec<f64>,
    /// Tr(Π ρ(T_f)) with the schedule replayed through Lindblad dynamics.
    pub final_fidelity: f64,
    /// Tr(Π ρ(T_f)) on the most likely path (MLP kinds).
    pub path_fidelity: Option<f64>,
    /// r*_α on the grid, m × N_t (MLP kinds).
    #[serde(skip)]
    pub optimal_readouts: Option<DMatrix<f64>>,
    pub converged: bool,
    pub iterations_used: usize,
    pub tf_residual: Option<f64>,
    pub stop_reason: StopReason,
    pub final_learning_rate: f64,
}

struct Eval {
    cost: f64,
    grad: Vec<Vec<f64>>,
    path_fidelity: Option<f64>,
    readouts: Option<DMatrix<f64>>,
    warm: Option<Vec<f64>>,
}

fn evaluate(problem: &ControlProblem, sched: &Schedule, cdj: &CdjOptions, warm: Option<&[f64]>) -> Result<Eval> {
    let e = if problem.kind.is_mlp() {
        let pass = adjoint_pass_cdj(problem, sched, cdj, warm)?;
        Eval {
            cost: pass.cost,
            grad: pass.gradient,
            path_fidelity: Some(pass.path_fidelity),
            readouts: Some(pass.readouts),
            warm: Some(pass.substep_readouts),
        }
    } else {
        let pass = adjoint_pass_lindblad(problem, sched)?;
        Eval { cost: pass.cost, grad: pass.gradient, path_fidelity: None, readouts: None, warm: None }
    };
    if !e.cost.is_finite() || e.grad.iter().flatten().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("cost or gradient".into()));
    }
    Ok(e)
}

fn clamp_and_tie(tracks: &mut [Vec<f64>], clamp: Option<(f64, f64)>) {
    for t in tracks.iter_mut() {
        if let Some((lo, hi)) = clamp {
            t.iter_mut().for_each(|x| *x = x.clamp(lo, hi));
        }
        let n = t.len();
        t[n - 1] = t[n - 2];
    }
}

/// Gradient-density norm with components pinned at an active clamp removed.
fn projected_norm(grad: &[Vec<f64>], tracks: &[Vec<f64>], sched: &Schedule, clamp: Option<(f64, f64)>) -> f64 {
    let mut acc = 0.0;
    for (g, th) in grad.iter().zip(tracks) {
        for j in 0..sched.intervals() {
            let pinned = clamp.is_some_and(|(lo, hi)| (th[j] <= lo && g[j] > 0.0) || (th[j] >= hi && g[j] < 0.0));
            if !pinned {
                acc += g[j] * g[j] / sched.interval_width(j);
            }
        }
    }
    acc.sqrt()
}

/// Lindblad replay of a schedule: Tr(Π ρ(T_f)).
pub fn replay_fidelity(problem: &ControlProblem, sched: &Schedule) -> Result<f64> {
    let h = default_step(&problem.instance, sched, &problem.measurement);
    let states = propagate(&problem.rho0, &problem.instance, sched, &problem.measurement, h)?;
    Ok(inner(&problem.target, states.last().expect("non-empty")))
}

pub fn nesterov_grape(problem: &ControlProblem, cfg: &GrapeConfig) -> Result<OptimizationResult> {
    let cdj = CdjOptions { weight: cfg.cdj_running_cost_weight, ..Default::default() };
    nesterov_grape_with(problem, cfg, &cdj)
}

/// As [`nesterov_grape`] with explicit most-likely-path solver options (the weight is taken
/// from `cdj`).
pub fn nesterov_grape_with(
    problem: &ControlProblem,
    cfg: &GrapeConfig,
    cdj: &CdjOptions,
) -> Result<OptimizationResult> {
    nesterov_grape_observed(problem, cfg, cdj, |_| {})
}

/// As [`nesterov_grape_with`], calling `observe` with the current iterate after every iteration.
pub fn nesterov_grape_observed(
    problem: &ControlProblem,
    cfg: &GrapeConfig,
    cdj: &CdjOptions,
    mut observe: impl FnMut(&Schedule),
) -> Result<OptimizationResult> {
    problem.validate()?;
    cfg.validate()?;
    let n = problem.instance.n();
    let times = problem.initial_schedule.times().to_vec();
    let widths: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    let mut theta = tracks_of(&problem.initial_schedule, problem.per_qubit);
    clamp_and_tie(&mut theta, cfg.theta_clamp);
    let mut sched = schedule_of(&times, &theta, n)?;
    let mut cur = evaluate(problem, &sched, cdj, None)?;
    let mut velocity = vec![vec![0.0; times.len()]; theta.len()];
    let mut moving = false;
    let eta0 = cfg.learning_rate;
    let mut eta = eta0;
    let mut cost_history = Vec::new();
    let mut gradient_norm_history = Vec::new();
    let mut stop = StopReason::MaxIters;

    for _ in 0..cfg.max_iters {
        let gnorm = projected_norm(&cur.grad, &theta, &sched, cfg.theta_clamp);
        if gnorm < cfg.grad_tol {
            stop = StopReason::GradTol;
            break;
        }
        // Look-ahead point y = θ + μv and its gradient.
        let (y, gy) = if moving {
            let mut y: Vec<Vec<f64>> = theta
                .iter()
                .zip(&velocity)
                .map(|(t, v)| t.iter().zip(v).map(|(a, b)| a + cfg.momentum * b).collect())
                .collect();
            clamp_and_tie(&mut y, cfg.theta_clamp);
            let ys = schedule_of(&times, &y, n)?;
            match evaluate(problem, &ys, cdj, cur.warm.as_deref()) {
                Ok(e) => (y, e.grad),
                Err(Error::NonFinite(_)) => {
                    stop = StopReason::NonFinite;
                    break;
                }
                Err(Error::FixedPoint { .. }) => {
                    moving = false;
                    velocity.iter_mut().flatten().for_each(|v| *v = 0.0);
                    cost_history.push(cur.cost);
                    gradient_norm_history.push(gnorm);
                    observe(&sched);
                    continue;
                }
                Err(e) => return Err(e),
            }
        } else {
            (theta.clone(), cur.grad.clone())
        };
        let mut cand: Vec<Vec<f64>> = y
            .iter()
            .zip(&gy)
            .map(|(t, g)| {
                t.iter()
                    .enumerate()
                    .map(|(j, x)| if j < widths.len() { x - eta * g[j] / widths[j] } else { *x })
                    .collect()
            })
            .collect();
        clamp_and_tie(&mut cand, cfg.theta_clamp);
        let cs = schedule_of(&times, &cand, n)?;
        let outcome = evaluate(problem, &cs, cdj, cur.warm.as_deref());
        let accepted = match outcome {
            Ok(e) if e.cost <= cur.cost => {
                for ((v, c), t) in velocity.iter_mut().zip(&cand).zip(&theta) {
                    for ((vi, ci), ti) in v.iter_mut().zip(c).zip(t) {
                        *vi = ci - ti;
                    }
                }
                theta = cand;
                sched = cs;
                cur = e;
                moving = cfg.momentum > 0.0;
                true
            }
            Ok(_) | Err(Error::FixedPoint { .. }) => false,
            Err(Error::NonFinite(_)) => {
                stop = StopReason::NonFinite;
                cost_history.push(cur.cost);
                gradient_norm_history.push(gnorm);
                break;
            }
            Err(e) => return Err(e),
        };
        if !accepted {
            if moving {
                moving = false;
                velocity.iter_mut().flatten().for_each(|v| *v = 0.0);
            } else {
                eta *= 0.5;
            }
        }
        cost_history.push(cur.cost);
        gradient_norm_history.push(gnorm);
        observe(&sched);
        if eta < 1e-12 * eta0 {
            stop = StopReason::Stalled;
            break;
        }
    }
    let final_fidelity = replay_fidelity(problem, &sched)?;
    let tf_residual =
        if problem.kind.is_ot() { Some(super::horizon::tf_stationarity(problem, &sched, cdj)?) } else { None };
    Ok(OptimizationResult {
        iterations_used: cost_history.len(),
        schedule: sched,
        cost_history,
        gradient_norm_history,
        final_fidelity,
        path_fidelity: cur.path_fidelity,
        optimal_readouts: cur.readouts,
        converged: stop == StopReason::GradTol,
        tf_residual,
        stop_reason: stop,
        final_learning_rate: eta,
    })
}
