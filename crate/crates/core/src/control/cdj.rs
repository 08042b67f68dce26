//! Most-likely-path (CDJ) adjoint with optimal readouts, τ = 1.
//!
//! Each substep applies the normalized readout-conditioned update
//!   ρ_{s+1} = K ρ_s K / Tr(K ρ_s K),   K = exp(B),   B = (h/m′) Σ_α (r_α − 1) P_α,
//! which agrees with the drift (1/m′) Σ_α (r_α − 1)(Pρ + ρP − 2ρ⟨P⟩) to first order in h and keeps
//! ρ_s a density matrix for any readouts (an explicit Euler step does not, and at small running
//! cost weights the optimizer exploits the overshoot). The running cost is
//! h (w/m′) Σ_α [½(r_α − 2⟨P⟩)² + 2(⟨P⟩ − ⟨P⟩²)] on ρ_s. The costate recursion is the exact transpose
//! of this map, so stationarity in r gives
//!   r*_α = 2⟨P⟩_s + Tr(P_α Y_s) / w,   Y_s = Dexp_B[G K ρ_s + ρ_s K G],
//! with G the normalized costate at s + 1, and the gradient is exact for the discrete cost once the
//! readout fixed point is reached.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{ControlKind, ControlProblem};
use crate::dynamics::lindblad::default_step;
use crate::dynamics::trajectory::step_grid;
use crate::dynamics::Schedule;
use crate::error::{Error, Result};
use crate::linalg::inner;
use crate::operators::{projector_derivatives, projector_set};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdjOptions {
    /// Running-cost weight w (1 reproduces the plain log-likelihood).
    pub weight: f64,
    /// Substep bound; `None` uses the Lindblad default step.
    pub h_max: Option<f64>,
    pub tol: f64,
    pub max_sweeps: usize,
    /// L-BFGS history length.
    pub memory: usize,
}

impl Default for CdjOptions {
    fn default() -> Self {
        Self { weight: 1.0, h_max: None, tol: 1e-8, max_sweeps: 200, memory: 10 }
    }
}

#[derive(Debug, Clone)]
pub struct CdjPass {
    pub states: Vec<DMatrix<f64>>,
    pub costates: Vec<DMatrix<f64>>,
    /// r*_α at each grid point (m × N_t): the first substep of each interval, and the
    /// stationary readout of the terminal state at the endpoint.
    pub readouts: DMatrix<f64>,
    /// Readouts on every substep, substep-major; reusable as a warm start.
    pub substep_readouts: Vec<f64>,
    pub gradient: Vec<Vec<f64>>,
    pub cost: f64,
    pub running_cost: f64,
    /// Tr(Π ρ(T_f)) along the most likely path.
    pub path_fidelity: f64,
    pub sweeps: usize,
    pub residual: f64,
}

/// ℍ = (1/m′) Σ_α { Tr(Λ F_α) − w [½(r_α − 2⟨P_α⟩)² + g_α] }, F_α = (r_α − 1) G_α(ρ), g_α = 2 Var P_α.
pub fn cdj_hamiltonian(
    rho: &DMatrix<f64>,
    costate: &DMatrix<f64>,
    readouts: &[f64],
    projectors: &[DMatrix<f64>],
    weight: f64,
    share: f64,
) -> f64 {
    let z = rho * costate + costate * rho;
    let lam_mean = inner(costate, rho);
    let mut acc = 0.0;
    for (p, &r) in projectors.iter().zip(readouts) {
        let mean = inner(p, rho);
        let var = inner(&(p * p), rho) - mean * mean;
        let tr_lg = inner(p, &z) - 2.0 * mean * lam_mean;
        acc += (r - 1.0) * tr_lg - weight * (0.5 * (r - 2.0 * mean).powi(2) + 2.0 * var);
    }
    acc / share
}

/// r* = 2⟨P⟩ + Tr{Λ(ρP + Pρ − 2ρ⟨P⟩)} / w.
pub fn optimal_readout(rho: &DMatrix<f64>, costate: &DMatrix<f64>, p: &DMatrix<f64>, weight: f64) -> f64 {
    let mean = inner(p, rho);
    let z = rho * costate + costate * rho;
    2.0 * mean + (inner(p, &z) - 2.0 * mean * inner(costate, rho)) / weight
}

struct Layout {
    steps: Vec<(usize, f64)>,
    /// Projector set per interval.
    projectors: Vec<Vec<DMatrix<f64>>>,
    share: f64,
    m: usize,
}

impl Layout {
    fn new(problem: &ControlProblem, schedule: &Schedule, h_max: f64) -> Result<Self> {
        let projectors = schedule.axes()[..schedule.intervals()]
            .iter()
            .map(|a| Ok(projector_set(&problem.instance, a)?.projectors))
            .collect::<Result<_>>()?;
        Ok(Self {
            steps: step_grid(schedule, h_max),
            projectors,
            share: problem.measurement.share(problem.instance.m()),
            m: problem.instance.m(),
        })
    }
}

/// exp(B) for symmetric B, kept in eigen form for the Fréchet derivative.
struct Exp {
    vecs: DMatrix<f64>,
    vals: DVector<f64>,
    k: DMatrix<f64>,
}

impl Exp {
    fn new(b: DMatrix<f64>) -> Self {
        let eig = SymmetricEigen::new(b);
        let vals = eig.eigenvalues;
        let vecs = eig.eigenvectors;
        let k = &vecs * DMatrix::from_diagonal(&vals.map(f64::exp)) * vecs.transpose();
        Self { vecs, vals, k }
    }

    /// Dexp_B[W]; self-adjoint in the trace inner product since B is symmetric.
    fn frechet(&self, w: &DMatrix<f64>) -> DMatrix<f64> {
        let mut x = self.vecs.transpose() * w * &self.vecs;
        let d = &self.vals;
        for i in 0..d.len() {
            for j in 0..d.len() {
                let diff = d[i] - d[j];
                let dd =
                    if diff.abs() < 1e-8 { d[j].exp() * (1.0 + 0.5 * diff) } else { d[j].exp() * diff.exp_m1() / diff };
                x[(i, j)] *= dd;
            }
        }
        &self.vecs * x * self.vecs.transpose()
    }
}

/// One substep: B, exp(B) and the normalized next state.
fn step(rho: &DMatrix<f64>, ps: &[DMatrix<f64>], rs: &[f64], h: f64, share: f64) -> (DMatrix<f64>, Exp, DMatrix<f64>) {
    let mut b = DMatrix::<f64>::zeros(rho.nrows(), rho.ncols());
    for (p, &ra) in ps.iter().zip(rs) {
        b += p * (ra - 1.0);
    }
    b *= h / share;
    let e = Exp::new(b.clone());
    let sigma = &e.k * rho * &e.k;
    let tr = sigma.trace();
    (b, e, sigma / tr)
}

struct Sweep {
    states: Vec<DMatrix<f64>>,
    exps: Vec<(DMatrix<f64>, Exp)>,
    fidelity: f64,
    running: f64,
}

fn forward(problem: &ControlProblem, lay: &Layout, r: &[f64], w: f64) -> Result<Sweep> {
    let mut states = Vec::with_capacity(lay.steps.len() + 1);
    let mut exps = Vec::with_capacity(lay.steps.len());
    let mut rho = problem.rho0.clone();
    let mut running = 0.0;
    for (s, &(j, h)) in lay.steps.iter().enumerate() {
        let ps = &lay.projectors[j];
        let rs = &r[s * lay.m..(s + 1) * lay.m];
        for (p, &ra) in ps.iter().zip(rs) {
            let mean = inner(p, &rho);
            running += h * w / lay.share * (0.5 * (ra - 2.0 * mean).powi(2) + 2.0 * (mean - mean * mean));
        }
        let (b, e, next) = step(&rho, ps, rs, h, lay.share);
        exps.push((b, e));
        states.push(std::mem::replace(&mut rho, next));
        if !rho.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("most-likely-path state".into()));
        }
    }
    let fidelity = inner(&problem.target, &rho);
    states.push(rho);
    Ok(Sweep { states, exps, fidelity, running })
}

fn terminal(problem: &ControlProblem, t_f: f64, f: f64) -> Result<(DMatrix<f64>, f64)> {
    match problem.kind {
        ControlKind::MlpOfs => Ok((problem.target.clone(), -f)),
        ControlKind::MlpOt => {
            if !(f > 0.0) {
                return Err(Error::NonFinite(format!("log-TTS cost with path fidelity {f}")));
            }
            Ok((&problem.target / f, (t_f + problem.tau_m).ln() - f.ln()))
        }
        _ => Err(Error::InvalidParameter("most-likely-path pass called on a Lindblad problem".into())),
    }
}

struct Backward {
    new_r: Vec<f64>,
    /// Y_s + 2w ρ_s per substep, the θ-sensitivity kernel (only kept when requested).
    kernels: Vec<DMatrix<f64>>,
    /// Λ_s at every substep (only kept when requested).
    costates: Vec<DMatrix<f64>>,
}

/// Costates Λ = −∂J/∂ρ, swept back from the terminal projector.
fn backward(lay: &Layout, sweep: &Sweep, r: &[f64], w: f64, term: &DMatrix<f64>, keep: bool) -> Backward {
    let m = lay.m;
    let mut new_r = vec![0.0; r.len()];
    let mut kernels = Vec::new();
    let mut costates = Vec::new();
    let mut lam = term.clone();
    let dim = lam.nrows();
    let id = DMatrix::<f64>::identity(dim, dim);
    if keep {
        costates.push(lam.clone());
    }
    for (s, &(j, _)) in lay.steps.iter().enumerate().rev() {
        let rho = &sweep.states[s];
        let (b, e) = &sweep.exps[s];
        let k_rho = &e.k * rho;
        let tr = inner(&k_rho, &e.k);
        let g = (&lam - &id * inner(&lam, &sweep.states[s + 1])) / tr;
        let kg = &e.k * &g;
        let y = e.frechet(&(&g * &k_rho + k_rho.transpose() * &g));
        for (k, p) in lay.projectors[j].iter().enumerate() {
            new_r[s * m + k] = 2.0 * inner(p, rho) + inner(p, &y) / w;
        }
        if keep {
            kernels.push(&y + rho * (2.0 * w));
        }
        lam = &kg * &e.k + b * (2.0 * w);
        if keep {
            costates.push(lam.clone());
        }
    }
    kernels.reverse();
    costates.reverse();
    Backward { new_r, kernels, costates }
}

/// Solves r = Φ(r) for the stationary readouts. Since ∂J/∂r_{s,α} = (h_s w/m′)(r − Φ(r))_{s,α},
/// the fixed point minimizes the discrete path cost over r; plain Picard is the unit step of
/// gradient descent in the h_s w/m′ metric. L-BFGS in that metric with a backtracking line
/// search keeps every accepted iterate descending, which plain Picard does not for small w.
fn solve_readouts(
    problem: &ControlProblem,
    lay: &Layout,
    t_f: f64,
    opts: &CdjOptions,
    x0: Vec<f64>,
) -> Result<(Vec<f64>, usize, f64)> {
    let w = opts.weight;
    let m = lay.m;
    let metric: Vec<f64> = lay.steps.iter().flat_map(|&(_, h)| std::iter::repeat_n(h * w / lay.share, m)).collect();
    let cost_at = |x: &[f64]| -> Result<(f64, Sweep)> {
        let sw = forward(problem, lay, x, w)?;
        let (_, jt) = terminal(problem, t_f, sw.fidelity)?;
        Ok((sw.running + jt, sw))
    };
    // Gradient and sup-norm fixed-point residual at x.
    let grad_at = |x: &[f64], sw: &Sweep| -> Result<(Vec<f64>, f64)> {
        let (term, _) = terminal(problem, t_f, sw.fidelity)?;
        let phi = backward(lay, sw, x, w, &term, false).new_r;
        let mut res = 0.0f64;
        let g = x
            .iter()
            .zip(&phi)
            .zip(&metric)
            .map(|((xi, pi), mi)| {
                res = res.max((xi - pi).abs());
                mi * (xi - pi)
            })
            .collect();
        Ok((g, res))
    };
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();

    let mut x = x0;
    let (mut f, sw) = cost_at(&x)?;
    let (mut g, mut residual) = grad_at(&x, &sw)?;
    let mut mem: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    let mut evals = 1;
    while evals < opts.max_sweeps {
        if !residual.is_finite() {
            return Err(Error::NonFinite("readout fixed point".into()));
        }
        if residual < opts.tol {
            return Ok((x, evals, residual));
        }
        // Two-loop recursion with H₀ = metric⁻¹.
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(mem.len());
        for (s, y, rho) in mem.iter().rev() {
            let a = rho * dot(s, &q);
            q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
            alphas.push(a);
        }
        q.iter_mut().zip(&metric).for_each(|(qi, mi)| *qi /= mi);
        for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(y, &q);
            q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
        }
        let mut d: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().zip(&metric).map(|(gi, mi)| -gi / mi).collect();
            slope = dot(&g, &d);
        }
        let mut step = 1.0;
        let accepted = loop {
            let xn: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            evals += 1;
            match cost_at(&xn) {
                Ok((fnew, sw)) if fnew <= f + 1e-4 * step * slope + 1e-12 * (1.0 + f.abs()) => {
                    break Some((xn, fnew, sw))
                }
                Ok(_) | Err(Error::NonFinite(_)) => {}
                Err(e) => return Err(e),
            }
            step *= 0.5;
            if step < 1e-12 || evals >= opts.max_sweeps {
                break None;
            }
        };
        let Some((xn, fnew, sw)) = accepted else {
            break;
        };
        let (gn, rn) = grad_at(&xn, &sw)?;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            mem.push((s, y, 1.0 / sy));
            if mem.len() > opts.memory {
                mem.remove(0);
            }
        }
        x = xn;
        f = fnew;
        g = gn;
        residual = rn;
    }
    if residual < opts.tol {
        return Ok((x, evals, residual));
    }
    Err(Error::FixedPoint { sweeps: evals, residual })
}

/// Forward-backward sweep at the readout fixed point, with gradient and cost.
pub fn adjoint_pass_cdj(
    problem: &ControlProblem,
    schedule: &Schedule,
    opts: &CdjOptions,
    warm_start: Option<&[f64]>,
) -> Result<CdjPass> {
    if !problem.kind.is_mlp() {
        return Err(Error::InvalidParameter("most-likely-path pass called on a Lindblad problem".into()));
    }
    if !(opts.weight > 0.0) {
        return Err(Error::InvalidParameter("running-cost weight must be positive".into()));
    }
    let h_max = opts.h_max.unwrap_or_else(|| default_step(&problem.instance, schedule, &problem.measurement));
    let lay = Layout::new(problem, schedule, h_max)?;
    let len = lay.steps.len() * lay.m;
    let init = match warm_start {
        Some(r) if r.len() == len => r.to_vec(),
        _ => mean_readouts(problem, &lay)?,
    };
    let t_f = schedule.t_f();
    let (r, sweeps, residual) = solve_readouts(problem, &lay, t_f, opts, init)?;
    let w = opts.weight;
    let sw = forward(problem, &lay, &r, w)?;
    let (term, terminal_cost) = terminal(problem, t_f, sw.fidelity)?;
    let bw = backward(&lay, &sw, &r, w, &term, true);

    let n_params = problem.n_params();
    let mut gradient = vec![vec![0.0; schedule.len()]; n_params];
    let dim = term.nrows();
    let m = lay.m;
    let mut q_acc = vec![DMatrix::<f64>::zeros(dim, dim); m];
    let mut readouts = DMatrix::<f64>::zeros(m, schedule.len());
    let mut costates = vec![DMatrix::zeros(0, 0); schedule.len()];
    let mut states = vec![DMatrix::zeros(0, 0); schedule.len()];
    let mut s = 0;
    for j in 0..schedule.intervals() {
        for a in q_acc.iter_mut() {
            a.fill(0.0);
        }
        states[j] = sw.states[s].clone();
        readouts.set_column(j, &DVector::from_row_slice(&r[s * m..(s + 1) * m]));
        costates[j] = bw.costates[s].clone();
        while s < lay.steps.len() && lay.steps[s].0 == j {
            let h = lay.steps[s].1;
            for (acc, &ra) in q_acc.iter_mut().zip(&r[s * m..(s + 1) * m]) {
                *acc += &bw.kernels[s] * (h * (ra - 1.0));
            }
            s += 1;
        }
        let derivs = projector_derivatives(&problem.instance, &schedule.axes()[j], problem.per_qubit)?;
        for (g, list) in gradient.iter_mut().zip(&derivs) {
            g[j] = -list.iter().map(|(a, dp)| inner(dp, &q_acc[*a])).sum::<f64>() / lay.share;
        }
    }
    let last = schedule.len() - 1;
    let rho_t = sw.states.last().expect("non-empty").clone();
    let last_ps = &lay.projectors[schedule.intervals() - 1];
    for (k, p) in last_ps.iter().enumerate() {
        readouts[(k, last)] = optimal_readout(&rho_t, &term, p, w);
    }
    states[last] = rho_t;
    costates[last] = term;
    Ok(CdjPass {
        states,
        costates,
        readouts,
        substep_readouts: r,
        gradient,
        cost: sw.running + terminal_cost,
        running_cost: sw.running,
        path_fidelity: sw.fidelity,
        sweeps,
        residual,
    })
}

/// Initial readout field: r = 2⟨P⟩ along the zero-costate path, i.e. the Λ = 0 readouts.
fn mean_readouts(problem: &ControlProblem, lay: &Layout) -> Result<Vec<f64>> {
    let mut rho = problem.rho0.clone();
    let mut out = Vec::with_capacity(lay.steps.len() * lay.m);
    for &(j, h) in &lay.steps {
        let ps = &lay.projectors[j];
        let rs: Vec<f64> = ps.iter().map(|p| 2.0 * inner(p, &rho)).collect();
        rho = step(&rho, ps, &rs, h, lay.share).2;
        out.extend(rs);
        if !rho.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite("readout initialization".into()));
        }
    }
    Ok(out)
}

/// Cost only, with the readout fixed point re-solved.
pub fn cdj_cost(problem: &ControlProblem, schedule: &Schedule, opts: &CdjOptions) -> Result<f64> {
    Ok(adjoint_pass_cdj(problem, schedule, opts, None)?.cost)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::AxisVector;
    use crate::rng::{stream, substream};
    use crate::sat::{generate_instance, InstanceKind};
    use rand::Rng;

    fn random_state(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, stream::TEST, 0);
        let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5);
        let r = &a * a.transpose();
        let tr = r.trace();
        r / tr
    }

    fn sym(dim: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = substream(seed, stream::TEST, 1);
        let a = DMatrix::<f64>::from_fn(dim, dim, |_, _| rng.random::<f64>() - 0.5);
        (&a + a.transpose()) * 0.5
    }

    #[test]
    fn readout_special_cases() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let ps = projector_set(&inst, &AxisVector::uniform(2, 0.4).unwrap()).unwrap().projectors;
        let rho = random_state(4, 1);
        let zero = DMatrix::zeros(4, 4);
        assert!((optimal_readout(&rho, &zero, &ps[0], 1.0) - 2.0 * inner(&ps[0], &rho)).abs() < 1e-15);
        let lam = sym(4, 2);
        // Eigenstate of P: back-action term vanishes.
        let (vals, vecs) = crate::linalg::hermitian_eigen(&ps[0]).unwrap();
        let v = vecs.column(vals.len() - 1);
        let eig = v * v.transpose();
        assert!((optimal_readout(&eig, &lam, &ps[0], 1.0) - 2.0).abs() < 1e-12);
        let h0 =
            cdj_hamiltonian(&rho, &zero, &ps.iter().map(|p| 2.0 * inner(p, &rho)).collect::<Vec<_>>(), &ps, 1.0, 2.0);
        assert!(h0 <= 0.0);
    }

    #[test]
    fn readout_maximizes_hamiltonian() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let ps = projector_set(&inst, &AxisVector::uniform(2, 0.9).unwrap()).unwrap().projectors;
        for seed in 0..5 {
            let rho = random_state(4, seed);
            let lam = sym(4, seed + 10);
            let star = optimal_readout(&rho, &lam, &ps[1], 1.0);
            let h = |r: f64| cdj_hamiltonian(&rho, &lam, &[0.3, r], &ps, 1.0, 2.0);
            let best = (-4000..=4000).map(|k| star + k as f64 * 1e-3).fold((f64::NEG_INFINITY, 0.0), |acc, r| {
                let v = h(r);
                if v > acc.0 {
                    (v, r)
                } else {
                    acc
                }
            });
            assert!((best.1 - star).abs() < 1e-3 + 1e-12);
        }
    }

    fn perturbed(s: &Schedule, j: usize, d: f64) -> Schedule {
        let axes = s
            .axes()
            .iter()
            .enumerate()
            .map(|(i, a)| {
                AxisVector::unconstrained(a.thetas().iter().map(|x| if i == j { x + d } else { *x }).collect()).unwrap()
            })
            .collect();
        Schedule::new(s.times().to_vec(), axes).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        for kind in [ControlKind::MlpOfs, ControlKind::MlpOt] {
            let p = ControlProblem::new(kind, inst.clone(), 1.0, 16).unwrap();
            let sched = Schedule::from_fn(1.0, 16, |t| vec![0.2 + 1.1 * t; 2]).unwrap();
            let opts = CdjOptions { tol: 1e-10, max_sweeps: 500, ..Default::default() };
            let pass = adjoint_pass_cdj(&p, &sched, &opts, None).unwrap();
            assert!(pass.states.iter().all(|r| (r.trace() - 1.0).abs() < 1e-12));
            let eps = 1e-5;
            for j in 0..15 {
                let fd = (cdj_cost(&p, &perturbed(&sched, j, eps), &opts).unwrap()
                    - cdj_cost(&p, &perturbed(&sched, j, -eps), &opts).unwrap())
                    / (2.0 * eps);
                let g = pass.gradient[0][j];
                assert!((g - fd).abs() / g.abs().max(fd.abs()).max(1e-12) < 1e-3, "{kind} j {j}: {g} vs {fd}");
            }
        }
    }

    #[test]
    fn identity_shift_of_the_costate_is_a_gauge() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 3, 0).unwrap();
        let p = ControlProblem::new(ControlKind::MlpOfs, inst, 1.0, 16).unwrap();
        let sched = Schedule::from_fn(1.0, 16, |t| vec![0.3 + t, 0.2 + 0.9 * t, 0.4 + 0.8 * t]).unwrap();
        let lay = Layout::new(&p, &sched, 0.01).unwrap();
        let r = mean_readouts(&p, &lay).unwrap();
        let sw = forward(&p, &lay, &r, 1.0).unwrap();
        let a = backward(&lay, &sw, &r, 1.0, &p.target, true);
        let shifted = &p.target + DMatrix::<f64>::identity(8, 8) * 3.7;
        let b = backward(&lay, &sw, &r, 1.0, &shifted, true);
        assert!(a.new_r.iter().zip(&b.new_r).all(|(x, y)| (x - y).abs() < 1e-8));
        for (x, y) in a.kernels.iter().zip(&b.kernels) {
            assert!((x - y).amax() < 1e-8);
        }
    }
}
