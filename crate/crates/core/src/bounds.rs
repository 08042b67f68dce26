//! Executable convergence theory: groundspace block decomposition, the one-step fidelity
//! bound, the linear dragging planner and the Υ time factor.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::kraus::{channel_step, sample_update};
use crate::dynamics::{DensityMatrix, MeasurementConfig, RateShare};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, inner, to_complex, C64};
use crate::operators::{cost_operator, projector_set, AxisVector};
use crate::rng::{stream, substream};
use crate::sat::SatInstance;

pub const DEFAULT_GAP_FLOOR: f64 = 1e-6;
const BLOCK_TOL: f64 = 1e-12;
const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub f: f64,
    /// Π ρ Π / f (zero when f = 0).
    pub rho0_block: DMatrix<C64>,
    /// Q ρ Q / (1 − f) (zero when f = 1).
    pub rho_perp_block: DMatrix<C64>,
    /// Frobenius norm of Π ρ Q.
    pub gamma: f64,
    /// Π ρ Q / γ (zero when γ = 0).
    pub c_block: DMatrix<C64>,
}

impl BlockDecomposition {
    pub fn reconstruct(&self) -> DMatrix<C64> {
        let c = &self.c_block;
        &self.rho0_block * C64::from(self.f)
            + &self.rho_perp_block * C64::from(1.0 - self.f)
            + (c + c.adjoint()) * C64::from(self.gamma)
    }

    /// γ² Tr[ĉ† ρ₀^{pi} ĉ], with eigenvalues of ρ₀ below 1e-10 dropped from the pseudo-inverse.
    pub fn coherence_weight(&self) -> Result<f64> {
        if self.gamma == 0.0 {
            return Ok(0.0);
        }
        let (vals, vecs) = hermitian_eigen(&self.rho0_block)?;
        let dim = vals.len();
        let mut pinv = DMatrix::<C64>::zeros(dim, dim);
        for (i, &l) in vals.iter().enumerate() {
            if l > PINV_CUTOFF {
                let v = vecs.column(i);
                pinv += (v * v.adjoint()) * C64::from(1.0 / l);
            }
        }
        let c = &self.c_block;
        Ok(self.gamma * self.gamma * (c.adjoint() * pinv * c).trace().re)
    }
}

pub fn block_decompose(rho: &DensityMatrix, pi0: &DMatrix<f64>) -> Result<BlockDecomposition> {
    let dim = rho.dim();
    if pi0.nrows() != dim || pi0.ncols() != dim {
        return Err(Error::InvalidParameter("projector size differs from state".into()));
    }
    let p = to_complex(pi0);
    if crate::linalg::max_abs(&(&p * &p - &p)) > 1e-10 || crate::linalg::hermiticity_error(&p) > 1e-10 {
        return Err(Error::InvalidParameter("Pi0 is not a Hermitian idempotent".into()));
    }
    let q = DMatrix::<C64>::identity(dim, dim) - &p;
    let r = rho.matrix();
    let inside = &p * r * &p;
    let outside = &q * r * &q;
    let off = &p * r * &q;
    let f = inside.trace().re;
    let gamma = off.norm();
    if (f.abs() < BLOCK_TOL || (1.0 - f).abs() < BLOCK_TOL) && gamma > 1e-10 {
        return Err(Error::CorruptState(format!("fidelity {f} with coherence {gamma:.3e} violates positivity")));
    }
    let zero = DMatrix::<C64>::zeros(dim, dim);
    let rho0_block = if f > BLOCK_TOL { inside / C64::from(f) } else { zero.clone() };
    let rho_perp_block = if 1.0 - f > BLOCK_TOL { outside / C64::from(1.0 - f) } else { zero.clone() };
    let c_block = if gamma > 0.0 { off / C64::from(gamma) } else { zero };
    Ok(BlockDecomposition { f, rho0_block, rho_perp_block, gamma, c_block })
}

/// a(δ) = δ − δ² on [½, 1], ¼ on [0, ½).
pub fn a_delta(delta: f64) -> f64 {
    if delta >= 0.5 {
        delta - delta * delta
    } else {
        0.25
    }
}

/// f δ − 2 (1 − βG)^M √(a(δ) f (1 − f)).
pub fn fidelity_bound(f: f64, delta: f64, beta_g: f64, m: u64) -> f64 {
    let decay = (1.0 - beta_g).powf(m as f64);
    f * delta - 2.0 * decay * (a_delta(delta) * f * (1.0 - f)).max(0.0).sqrt()
}

/// Υ = Δt / (1 − e^{−Δt/2τ}), with the limit 2τ below Δt = 1e-12.
pub fn upsilon(dt: f64, tau: f64) -> f64 {
    if dt < 1e-12 {
        2.0 * tau
    } else {
        dt / -(-dt / (2.0 * tau)).exp_m1()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanOptions {
    pub gap_floor: f64,
    /// Take one initial increment of 1/√n before the uniform steps.
    pub large_first_step: bool,
}

impl Default for PlanOptions {
    fn default() -> Self {
        Self { gap_floor: DEFAULT_GAP_FLOOR, large_first_step: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DragPlan {
    pub n: usize,
    pub theta_i: f64,
    pub theta_f: f64,
    /// Uniform increment (after the optional first step).
    pub delta_theta: f64,
    pub first_step: Option<f64>,
    /// Number of uniform increments.
    pub steps: usize,
    /// Axis angle held during step k (the angle reached by that step), k = 1..=N.
    pub thetas: Vec<f64>,
    pub gaps: Vec<f64>,
    pub m_per_step: Vec<u64>,
    pub epsilon1: f64,
    pub epsilon2: f64,
    pub dt: f64,
    pub tau: f64,
    pub beta: f64,
    pub g_min: f64,
    pub total_applications: u64,
    /// Σ_k M_k Δt.
    pub total_time: f64,
    pub upsilon: f64,
}

fn repetitions(numerator: f64, beta_g: f64) -> u64 {
    if numerator <= 0.0 {
        return 1;
    }
    let denom = -(-beta_g).ln_1p();
    ((numerator / denom) * (1.0 - 1e-14)).ceil().max(1.0) as u64
}

/// log(1/ε₂) + ½ log n + log(θ_f − θ_i).
pub fn plan_numerator(n: usize, span: f64, eps2: f64) -> f64 {
    (1.0 / eps2).ln() + 0.5 * (n as f64).ln() + span.ln()
}

pub fn plan_linear_drag(
    n: usize,
    theta_i: f64,
    theta_f: f64,
    eps1: f64,
    eps2: f64,
    cfg: &MeasurementConfig,
    gap_fn: impl Fn(f64) -> Result<f64>,
    opts: &PlanOptions,
) -> Result<DragPlan> {
    cfg.validate()?;
    if !(theta_f > theta_i && theta_i > 0.0) {
        return Err(Error::InvalidParameter(format!("need theta_f > theta_i > 0 (got {theta_i}, {theta_f})")));
    }
    for (name, e) in [("eps1", eps1), ("eps2", eps2)] {
        if !(e > 0.0 && e < 1.0) {
            return Err(Error::InvalidParameter(format!("{name} must lie in (0, 1), got {e}")));
        }
    }
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let span = theta_f - theta_i;
    let first_step = if opts.large_first_step { Some((1.0 / (n as f64).sqrt()).min(0.5 * span)) } else { None };
    let start = theta_i + first_step.unwrap_or(0.0);
    let uniform_span = theta_f - start;
    let steps = ((n as f64 * uniform_span * uniform_span / (4.0 * eps1)) * (1.0 - 1e-14)).ceil().max(1.0) as usize;
    let delta_theta = uniform_span / steps as f64;
    let mut thetas: Vec<f64> = first_step.iter().map(|_| start).collect();
    thetas.extend((1..=steps).map(|k| if k == steps { theta_f } else { start + k as f64 * delta_theta }));

    let beta = cfg.beta();
    let numerator = plan_numerator(n, span, eps2);
    let mut gaps = Vec::with_capacity(thetas.len());
    let mut m_per_step = Vec::with_capacity(thetas.len());
    for &th in &thetas {
        let g = gap_fn(th)?;
        if !(g > opts.gap_floor) {
            return Err(Error::GapTooSmall { theta: th, gap: g, floor: opts.gap_floor });
        }
        gaps.push(g);
        m_per_step.push(if beta > 0.0 { repetitions(numerator, beta * g) } else { u64::MAX });
    }
    let g_min = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    let total_applications = m_per_step.iter().fold(0u64, |a, &m| a.saturating_add(m));
    Ok(DragPlan {
        n,
        theta_i,
        theta_f,
        delta_theta,
        first_step,
        steps,
        thetas,
        gaps,
        m_per_step,
        epsilon1: eps1,
        epsilon2: eps2,
        dt: cfg.dt,
        tau: cfg.tau,
        beta,
        g_min,
        total_applications,
        total_time: total_applications as f64 * cfg.dt,
        upsilon: upsilon(cfg.dt, cfg.tau),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryTime {
    pub upsilon: f64,
    /// N · M(G_min) · Δt with the exact log ratio; the Δt → 0 limit is used below 1e-12.
    pub total_time: f64,
    /// Σ_k M(θ_k) Δt along the plan.
    pub per_step_total: f64,
    /// [log(1/ε₂) + ½ log n + log φ] / G_min · n φ² / (4 ε₁) · Υ.
    pub closed_form: f64,
}

pub fn corollary_time(plan: &DragPlan, cfg: &MeasurementConfig) -> CorollaryTime {
    let ups = upsilon(cfg.dt, cfg.tau);
    let span = plan.theta_f - plan.theta_i;
    let numerator = plan_numerator(plan.n, span, plan.epsilon2).max(0.0);
    let steps = plan.thetas.len() as f64;
    let total_time = if cfg.dt < 1e-12 {
        steps * numerator * ups / plan.g_min
    } else {
        steps * repetitions(numerator, cfg.beta() * plan.g_min) as f64 * cfg.dt
    };
    let per_step_total = if cfg.dt < 1e-12 {
        plan.gaps.iter().map(|g| numerator * ups / g).sum()
    } else {
        plan.gaps.iter().map(|&g| repetitions(numerator, cfg.beta() * g) as f64 * cfg.dt).sum()
    };
    let closed_form = numerator / plan.g_min * plan.n as f64 * span * span / (4.0 * plan.epsilon1) * ups;
    CorollaryTime { upsilon: ups, total_time, per_step_total, closed_form }
}

/// Π₀(θ)/Tr Π₀(θ): the maximally mixed groundspace state at a uniform axis angle.
pub fn groundspace_state(instance: &SatInstance, theta: f64) -> Result<DensityMatrix> {
    let c = cost_operator(instance, &AxisVector::uniform(instance.n(), theta)?)?;
    if c.ground_dim == 0 {
        return Err(Error::InvalidInstance("empty groundspace".into()));
    }
    DensityMatrix::from_real(&(c.ground_projector / c.ground_dim as f64))
}

fn plan_projectors(instance: &SatInstance, plan: &DragPlan) -> Result<Vec<Vec<DMatrix<f64>>>> {
    plan.thetas
        .iter()
        .map(|&th| Ok(projector_set(instance, &AxisVector::uniform(instance.n(), th)?)?.projectors))
        .collect()
}

/// Applies the averaged channel M_k times at each planned angle; returns the final fidelity
/// to Π₀(θ_f).
pub fn execute_plan_averaged(instance: &SatInstance, plan: &DragPlan, cfg: &MeasurementConfig) -> Result<f64> {
    let sets = plan_projectors(instance, plan)?;
    let mut rho: DMatrix<f64> = groundspace_state(instance, plan.theta_i)?.matrix().map(|z| z.re);
    let share = cfg.share(instance.m());
    for (ps, &m) in sets.iter().zip(&plan.m_per_step) {
        for _ in 0..m {
            rho = channel_step(&rho, ps, cfg.beta(), share);
        }
    }
    let target = cost_operator(instance, &AxisVector::uniform(instance.n(), plan.theta_f)?)?.ground_projector;
    Ok(inner(&target, &rho))
}

/// Runs the plan as random Kraus measurements (one uniformly chosen clause per application,
/// or all clauses for the parallel share); returns each shot's final fidelity.
pub fn execute_plan_kraus(
    instance: &SatInstance,
    plan: &DragPlan,
    cfg: &MeasurementConfig,
    shots: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    use rand::Rng;
    let sets = plan_projectors(instance, plan)?;
    let rho0: DMatrix<f64> = groundspace_state(instance, plan.theta_i)?.matrix().map(|z| z.re);
    let target = cost_operator(instance, &AxisVector::uniform(instance.n(), plan.theta_f)?)?.ground_projector;
    let m = instance.m();
    (0..shots)
        .into_par_iter()
        .map(|shot| {
            let mut rng = substream(seed, stream::KRAUS, shot as u64);
            let mut rho = rho0.clone();
            for (ps, &reps) in sets.iter().zip(&plan.m_per_step) {
                for _ in 0..reps {
                    match cfg.rate_share {
                        RateShare::PerClause1OverM => {
                            let a = rng.random_range(0..m);
                            rho = sample_update(&rho, &ps[a], cfg, &mut rng)?.0;
                        }
                        RateShare::Parallel => {
                            for p in ps {
                                rho = sample_update(&rho, p, cfg, &mut rng)?.0;
                            }
                        }
                    }
                }
            }
            Ok(inner(&target, &rho))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::{generate_instance, InstanceKind};
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn bound_special_cases() {
        assert_abs_diff_eq!(fidelity_bound(1.0, 0.9, 0.3, 1), 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_bound(0.7, 1.0, 0.3, 1), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(fidelity_bound(0.7, 0.2, 1.0, 3), 0.14, epsilon = 1e-15);
    }

    #[test]
    fn bound_hand_evaluation() {
        // 0.9·0.99 − 2·0.9^50·√(0.0099·0.09)
        let expected = 0.891 - 2.0 * 0.005_153_775_207_320_113 * (0.000_891_f64).sqrt();
        assert_abs_diff_eq!(fidelity_bound(0.9, 0.99, 0.1, 50), expected, epsilon = 1e-15);
    }

    #[test]
    fn step_count_for_quarter_turn() {
        let cfg = MeasurementConfig::new(0.1, 1.0, RateShare::PerClause1OverM).unwrap();
        let plan =
            plan_linear_drag(2, 0.2, 0.2 + FRAC_PI_2, 0.1, 0.1, &cfg, |_| Ok(0.5), &PlanOptions::default()).unwrap();
        assert_eq!(plan.steps, 13);
        assert_abs_diff_eq!(plan.steps as f64 * plan.delta_theta, FRAC_PI_2, epsilon = 1e-12);
        assert!(plan.m_per_step.iter().all(|&m| m >= 1));
    }

    #[test]
    fn zero_numerator_clamps_to_one() {
        let cfg = MeasurementConfig::new(0.1, 1.0, RateShare::PerClause1OverM).unwrap();
        let plan = plan_linear_drag(1, 0.1, 0.6, 0.5, 0.99, &cfg, |_| Ok(0.5), &PlanOptions::default()).unwrap();
        assert!(plan_numerator(1, 0.5, 0.99) <= 0.0);
        assert!(plan.m_per_step.iter().all(|&m| m == 1));
    }

    #[test]
    fn tiny_gap_is_rejected() {
        let cfg = MeasurementConfig::default();
        let err = plan_linear_drag(
            2,
            0.1,
            1.0,
            0.1,
            0.1,
            &cfg,
            |t| Ok(if t < 0.5 { 1e-7 } else { 0.3 }),
            &PlanOptions::default(),
        );
        assert!(matches!(err, Err(Error::GapTooSmall { .. })));
    }

    #[test]
    fn large_first_step_flag() {
        let cfg = MeasurementConfig::default();
        let plan = plan_linear_drag(
            4,
            0.1,
            1.5,
            0.1,
            0.1,
            &cfg,
            |_| Ok(0.5),
            &PlanOptions { large_first_step: true, ..Default::default() },
        )
        .unwrap();
        assert_eq!(plan.first_step, Some(0.5));
        assert_abs_diff_eq!(plan.thetas[0], 0.6, epsilon = 1e-15);
        assert_abs_diff_eq!(*plan.thetas.last().unwrap(), 1.5, epsilon = 1e-15);
    }

    #[test]
    fn upsilon_values() {
        assert_eq!(upsilon(0.0, 1.0), 2.0);
        assert_eq!(upsilon(1e-13, 0.5), 1.0);
        let ln2 = std::f64::consts::LN_2;
        assert_abs_diff_eq!(upsilon(2.0 * ln2, 1.0), 4.0 * ln2, epsilon = 1e-14);
        assert!((upsilon(200.0, 1.0) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn block_decomposition_of_pure_superposition() {
        let phi: f64 = 0.4;
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let c = cost_operator(&inst, &AxisVector::uniform(2, 0.8).unwrap()).unwrap();
        let g = c.eigenvectors.column(0).into_owned();
        let e = c.eigenvectors.column(3).into_owned();
        let psi = (g * phi.cos() + e * phi.sin()).map(|x| C64::new(x, 0.0));
        let rho = DensityMatrix::from_ket(&psi).unwrap();
        let bd = block_decompose(&rho, &c.ground_projector).unwrap();
        assert_abs_diff_eq!(bd.f, phi.cos().powi(2), epsilon = 1e-12);
        assert_abs_diff_eq!(bd.gamma, (phi.cos() * phi.sin()).abs(), epsilon = 1e-12);
        assert!(crate::linalg::max_abs(&(bd.reconstruct() - rho.matrix())) < 1e-12);
        let diag = DensityMatrix::from_real(
            &(c.ground_projector.clone() * 0.5 + (DMatrix::identity(4, 4) - &c.ground_projector) / 6.0),
        )
        .unwrap();
        assert!(block_decompose(&diag, &c.ground_projector).unwrap().gamma < 1e-14);
    }

    #[test]
    fn averaged_plan_execution_meets_budget_on_small_ring() {
        let inst = generate_instance(InstanceKind::SingleSolutionRing, 2, 0).unwrap();
        let cfg = MeasurementConfig::new(1.0, 1.0, RateShare::PerClause1OverM).unwrap();
        let gap = |t: f64| crate::operators::spectral_gap(&inst, &AxisVector::uniform(2, t)?);
        let plan = plan_linear_drag(2, 0.3, FRAC_PI_2, 0.05, 0.05, &cfg, gap, &PlanOptions::default()).unwrap();
        let f = execute_plan_averaged(&inst, &plan, &cfg).unwrap();
        assert!(f >= 0.9, "fidelity {f}");
    }
}
