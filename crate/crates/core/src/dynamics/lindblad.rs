//! Unconditional evolution dρ/dt = (1/m′τ) Σ_α (P ρ P − ½{P, ρ}) under a piecewise-constant schedule.

use nalgebra::DMatrix;
use serde::Serialize;

use super::config::MeasurementConfig;
use super::schedule::Schedule;
use super::state::{plus_state_real, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{cast, hermitize, inner, trace_re, Field, C64};
use crate::operators::{projector_set, target_projector, AxisVector};
use crate::sat::SatInstance;

pub const TRACE_DRIFT_TOL: f64 = 1e-8;

/// The Lindblad generator at one fixed axis.
#[derive(Debug, Clone)]
pub struct Generator<S: Field> {
    pub projectors: Vec<DMatrix<S>>,
    sum: DMatrix<S>,
    rate: f64,
}

impl<S: Field> Generator<S> {
    pub fn new(instance: &SatInstance, axis: &AxisVector, cfg: &MeasurementConfig) -> Result<Self> {
        let set = projector_set(instance, axis)?;
        let rate = 1.0 / (cfg.share(instance.m()) * cfg.tau);
        Ok(Self::from_projectors(set.projectors.iter().map(cast).collect(), rate))
    }

    pub fn from_projectors(projectors: Vec<DMatrix<S>>, rate: f64) -> Self {
        let dim = projectors[0].nrows();
        let mut sum = DMatrix::<S>::zeros(dim, dim);
        for p in &projectors {
            sum += p;
        }
        Self { projectors, sum, rate }
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn apply(&self, x: &DMatrix<S>) -> DMatrix<S> {
        let mut out = (&self.sum * x + x * &self.sum) * S::from_real(-0.5);
        for p in &self.projectors {
            out += p * x * p;
        }
        out * S::from_real(self.rate)
    }

    /// One classical RK4 step; for this linear generator it equals Σ_{k≤4} (hL)^k/k!.
    pub fn rk4(&self, x: &DMatrix<S>, h: f64) -> DMatrix<S> {
        let half = S::from_real(0.5 * h);
        let k1 = self.apply(x);
        let k2 = self.apply(&(x + &k1 * half));
        let k3 = self.apply(&(x + &k2 * half));
        let k4 = self.apply(&(x + &k3 * S::from_real(h)));
        x + (k1 + (k2 + k3) * S::from_real(2.0) + k4) * S::from_real(h / 6.0)
    }
}

/// Default Lindblad step: min(0.01τ, T_f/1000, 0.1τ/m).
pub fn default_step(instance: &SatInstance, schedule: &Schedule, cfg: &MeasurementConfig) -> f64 {
    (0.01 * cfg.tau).min(schedule.t_f() / 1000.0).min(0.1 * cfg.tau / instance.m() as f64)
}

#[derive(Debug, Clone, Serialize)]
pub struct LindbladTrace {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub fidelity: Vec<f64>,
    pub purity: Vec<f64>,
}

impl LindbladTrace {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("non-empty trace")
    }

    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("non-empty trace")
    }
}

/// States at every schedule grid point, plus the generic fixed-step core.
pub(crate) fn propagate<S: Field>(
    rho0: &DMatrix<S>,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    h_max: f64,
) -> Result<Vec<DMatrix<S>>> {
    if schedule.n() != instance.n() {
        return Err(Error::InvalidParameter("schedule qubit count differs from instance".into()));
    }
    if !(h_max > 0.0) {
        return Err(Error::InvalidParameter("integrator step must be positive".into()));
    }
    let mut out = Vec::with_capacity(schedule.len());
    let mut rho = rho0.clone();
    out.push(rho.clone());
    for j in 0..schedule.intervals() {
        let gen = Generator::<S>::new(instance, &schedule.axes()[j], cfg)?;
        let (k, h) = schedule.substeps(j, h_max);
        for s in 0..k {
            rho = gen.rk4(&rho, h);
            hermitize(&mut rho);
            let tr = trace_re(&rho);
            if (tr - 1.0).abs() > TRACE_DRIFT_TOL || !tr.is_finite() {
                return Err(Error::TraceDrift { t: schedule.times()[j] + (s + 1) as f64 * h, trace: tr });
            }
        }
        out.push(rho.clone());
    }
    Ok(out)
}

pub fn evolve_lindblad(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
) -> Result<LindbladTrace> {
    evolve_lindblad_with_step(rho0, instance, schedule, cfg, default_step(instance, schedule, cfg))
}

pub fn evolve_lindblad_with_step(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    h_max: f64,
) -> Result<LindbladTrace> {
    cfg.validate()?;
    if rho0.dim() != instance.dim() {
        return Err(Error::InvalidParameter("state dimension differs from instance".into()));
    }
    let target: DMatrix<C64> = cast(&target_projector(instance)?);
    let states = propagate(rho0.matrix(), instance, schedule, cfg, h_max)?;
    let fidelity = states.iter().map(|r| inner(&target, r)).collect();
    let purity = states.iter().map(|r| inner(r, r)).collect();
    Ok(LindbladTrace {
        times: schedule.times().to_vec(),
        states: states.into_iter().map(DensityMatrix::from_unchecked).collect(),
        fidelity,
        purity,
    })
}

/// Tr(Π₀(π/2) ρ(T_f)) from |+···+⟩, computed in real arithmetic.
pub fn lindblad_final_fidelity(instance: &SatInstance, schedule: &Schedule, cfg: &MeasurementConfig) -> Result<f64> {
    let h = default_step(instance, schedule, cfg);
    let states = propagate(&plus_state_real(instance.n()), instance, schedule, cfg, h)?;
    Ok(inner(&target_projector(instance)?, states.last().expect("non-empty")))
}
