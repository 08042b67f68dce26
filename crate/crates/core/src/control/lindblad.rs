//! Exact discrete adjoint of the RK4-propagated Lindblad evolution.
//!
//! One RK4 step of the linear generator is T = Σ_{k≤4} (hL)^k/k!, and L is self-adjoint under
//! the trace inner product, so the costate is carried back with the same step. Differentiating T
//! gives dJ/dθ = −Σ_steps Σ_k h^k/k! Σ_{i+j=k−1} ⟨L^i Λ_{s+1}, L′ L^j ρ_s⟩.

use nalgebra::DMatrix;

use super::{ControlKind, ControlProblem};
use crate::dynamics::lindblad::{default_step, propagate, Generator};
use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::linalg::{hermitize, inner};
use crate::operators::projector_derivatives;

#[derive(Debug, Clone)]
pub struct LindbladPass {
    /// ρ at each grid point.
    pub states: Vec<DMatrix<f64>>,
    /// Λ at each grid point; the last entry is the terminal condition.
    pub costates: Vec<DMatrix<f64>>,
    /// dJ/dθ per parameter track and grid point; the endpoint entry is zero.
    pub gradient: Vec<Vec<f64>>,
    pub cost: f64,
    pub fidelity: f64,
    /// ℍ_c = Tr(Λ L[ρ]) at the left end of each interval.
    pub hamiltonian: Vec<f64>,
}

/// Cost and fidelity only.
pub fn lindblad_cost(problem: &ControlProblem, schedule: &Schedule) -> Result<(f64, f64)> {
    let h = default_step(&problem.instance, schedule, &problem.measurement);
    let states = propagate(&problem.rho0, &problem.instance, schedule, &problem.measurement, h)?;
    let f = inner(&problem.target, states.last().expect("non-empty"));
    Ok((terminal_cost(problem, schedule.t_f(), f)?, f))
}

fn terminal_cost(problem: &ControlProblem, t_f: f64, f: f64) -> Result<f64> {
    match problem.kind {
        ControlKind::LindbladOfs | ControlKind::MlpOfs => Ok(-f),
        ControlKind::LindbladOt | ControlKind::MlpOt => {
            if !(f > 0.0) {
                return Err(Error::NonFinite(format!("log-TTS cost with fidelity {f}")));
            }
            Ok((t_f + problem.tau_m).ln() - f.ln())
        }
    }
}

pub fn adjoint_pass_lindblad(problem: &ControlProblem, schedule: &Schedule) -> Result<LindbladPass> {
    adjoint_pass_lindblad_with_step(problem, schedule, default_step(&problem.instance, schedule, &problem.measurement))
}

pub fn adjoint_pass_lindblad_with_step(
    problem: &ControlProblem,
    schedule: &Schedule,
    h_max: f64,
) -> Result<LindbladPass> {
    if problem.kind.is_mlp() {
        return Err(Error::InvalidParameter("Lindblad pass called on a most-likely-path problem".into()));
    }
    let inst = &problem.instance;
    let cfg = &problem.measurement;
    let states = propagate(&problem.rho0, inst, schedule, cfg, h_max)?;
    let rho_t = states.last().expect("non-empty");
    let f = inner(&problem.target, rho_t);
    let cost = terminal_cost(problem, schedule.t_f(), f)?;
    let terminal = match problem.kind {
        ControlKind::LindbladOt => &problem.target / f,
        _ => problem.target.clone(),
    };

    let n_int = schedule.intervals();
    let n_params = problem.n_params();
    let mut gradient = vec![vec![0.0; schedule.len()]; n_params];
    let mut costates = vec![DMatrix::zeros(0, 0); schedule.len()];
    let mut hamiltonian = vec![0.0; n_int];
    costates[n_int] = terminal.clone();
    let mut lam = terminal;

    for j in (0..n_int).rev() {
        let axis = &schedule.axes()[j];
        let gen = Generator::<f64>::new(inst, axis, cfg)?;
        let derivs = projector_derivatives(inst, axis, problem.per_qubit)?;
        let (k, h) = schedule.substeps(j, h_max);
        let mut sub = Vec::with_capacity(k);
        let mut r = states[j].clone();
        for _ in 0..k {
            sub.push(r.clone());
            r = gen.rk4(&r, h);
            hermitize(&mut r);
        }
        let coef = [h, h * h / 2.0, h.powi(3) / 6.0, h.powi(4) / 24.0];
        let mut k_acc: Vec<DMatrix<f64>> = vec![DMatrix::zeros(lam.nrows(), lam.ncols()); gen.projectors.len()];
        for s in (0..k).rev() {
            let mut a = [lam.clone(), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)];
            let mut b = [sub[s].clone(), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0), DMatrix::zeros(0, 0)];
            for i in 1..4 {
                a[i] = gen.apply(&a[i - 1]);
                b[i] = gen.apply(&b[i - 1]);
            }
            // Ã_j = Σ_i c_{i+j+1} a_i pairs every a_i with b_j at total order i + j + 1.
            for (jj, bj) in b.iter().enumerate() {
                let mut at = DMatrix::<f64>::zeros(lam.nrows(), lam.ncols());
                for (i, ai) in a.iter().enumerate().take(4 - jj) {
                    at += ai * coef[i + jj];
                }
                let ab = &at * bj;
                let sym = (&ab + ab.transpose()) * 0.5;
                for (p, acc) in gen.projectors.iter().zip(k_acc.iter_mut()) {
                    let m = bj * p * &at;
                    *acc += &m + m.transpose() - &sym;
                }
            }
            lam = gen.rk4(&lam, h);
            hermitize(&mut lam);
        }
        for (g, list) in gradient.iter_mut().zip(&derivs) {
            g[j] = -gen.rate() * list.iter().map(|(a, dp)| inner(dp, &k_acc[*a])).sum::<f64>();
        }
        hamiltonian[j] = inner(&lam, &gen.apply(&states[j]));
        costates[j] = lam.clone();
    }
    Ok(LindbladPass { fidelity: f, states, costates, gradient, cost, hamiltonian })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::ControlProblem;
    use crate::operators::AxisVector;
    use crate::sat::{generate_instance, InstanceKind};

    fn perturbed(s: &Schedule, q: Option<usize>, j: usize, d: f64) -> Schedule {
        let axes = s
            .axes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                let mut th = a.thetas().to_vec();
                if i == j {
                    match q {
                        Some(q) => th[q] += d,
                        None => th.iter_mut().for_each(|x| *x += d),
                    }
                }
                AxisVector::unconstrained(th).unwrap()
            })
            .collect();
        Schedule::new(s.times().to_vec(), axes).unwrap()
    }

    fn check(kind: ControlKind, per_qubit: bool) {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let mut p = ControlProblem::new(kind, inst, 2.0, 16).unwrap();
        p.per_qubit = per_qubit;
        let sched = Schedule::from_fn(2.0, 16, |t| vec![0.2 + 0.6 * t, 0.1 + 0.5 * t]).unwrap();
        let pass = adjoint_pass_lindblad(&p, &sched).unwrap();
        assert_eq!(
            pass.costates.last().unwrap(),
            &if kind == ControlKind::LindbladOt { &p.target / pass.fidelity } else { p.target.clone() }
        );
        let eps = 1e-5;
        for (pi, g) in pass.gradient.iter().enumerate() {
            let q = per_qubit.then_some(pi);
            for (j, &gj) in g.iter().enumerate() {
                let plus = lindblad_cost(&p, &perturbed(&sched, q, j, eps)).unwrap().0;
                let minus = lindblad_cost(&p, &perturbed(&sched, q, j, -eps)).unwrap().0;
                let fd = (plus - minus) / (2.0 * eps);
                let scale = gj.abs().max(fd.abs());
                if scale < 1e-12 {
                    continue;
                }
                assert!((gj - fd).abs() / scale < 1e-4, "p {pi} j {j}: adjoint {gj} fd {fd}");
            }
            assert_eq!(g[15], 0.0);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        check(ControlKind::LindbladOfs, false);
        check(ControlKind::LindbladOt, false);
        check(ControlKind::LindbladOfs, true);
    }

    #[test]
    fn stationary_configuration_has_zero_gradient() {
        // Single clause (¬b1), starting in its groundstate at θ = 0.7, target the same groundstate.
        let inst = crate::sat::SatInstance::new(1, vec![crate::sat::Clause::new(&[0], &[-1]).unwrap()]).unwrap();
        let mut p = ControlProblem::new(ControlKind::LindbladOfs, inst.clone(), 1.0, 8).unwrap();
        let axis = AxisVector::uniform(1, 0.7).unwrap();
        let g = crate::operators::cost_operator(&inst, &axis).unwrap().ground_projector;
        p.rho0 = g.clone();
        p.target = g;
        let sched = Schedule::new(Schedule::uniform_grid(1.0, 8).unwrap(), vec![axis; 8]).unwrap();
        let pass = adjoint_pass_lindblad(&p, &sched).unwrap();
        assert!(pass.gradient[0].iter().all(|x| x.abs() < 1e-12));
        assert!((pass.fidelity - 1.0).abs() < 1e-12);
    }
}
