//! Readout-conditioned trajectories: the continuous diffusive SME (Heun, Stratonovich) and
//! the discrete Kraus unravelling.
//!
//! Continuous readout convention: r_α dt = (2/√τ)⟨P_α⟩ dt + √m′ dW_α, dW ~ N(0, dt). The √m′
//! factor makes each clause an efficient channel of rate 1/(m′τ), so the ensemble average is
//! the Lindblad evolution with the same 1/m′ share.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use super::config::{MeasurementConfig, RateShare};
use super::kraus::sample_update;
use super::schedule::Schedule;
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cast, hermitize, inner, trace_re, Field, C64};
use crate::operators::{projector_set, target_projector};
use crate::sat::SatInstance;

pub const SME_TRACE_TOL: f64 = 1e-6;

/// Stop a trajectory once its fidelity stays below `cutoff` for `window` consecutive steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct Truncation {
    pub cutoff: f64,
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct TrajectoryOptions {
    /// Keep per-step readouts and traces; otherwise only the endpoints are stored.
    pub record: bool,
    pub truncation: Option<Truncation>,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { record: true, truncation: None }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// m × N_steps; NaN marks a channel not measured in that step (Kraus, one clause per step).
    pub readouts: DMatrix<f64>,
    pub fidelity_trace: Vec<f64>,
    pub purity_trace: Vec<f64>,
    pub final_state: DensityMatrix,
    pub truncated_at: Option<usize>,
}

impl TrajectoryRecord {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity_trace.last().expect("non-empty trace")
    }
}

/// (interval index, step width) for every integration step.
pub fn step_grid(schedule: &Schedule, h_max: f64) -> Vec<(usize, f64)> {
    let mut steps = Vec::new();
    for j in 0..schedule.intervals() {
        let (k, h) = schedule.substeps(j, h_max);
        steps.extend(std::iter::repeat_n((j, h), k));
    }
    steps
}

enum Source<'a, R: Rng + ?Sized> {
    Noise(&'a mut R),
    Prescribed(&'a DMatrix<f64>),
}

/// (1/(m′√τ)) Σ_α (r_α − 1/√τ)(P ρ + ρ P − 2ρ Tr(P ρ)).
pub(crate) fn sme_drift<S: Field>(
    rho: &DMatrix<S>,
    projectors: &[DMatrix<S>],
    r: &[f64],
    share: f64,
    tau: f64,
) -> DMatrix<S> {
    let c = 1.0 / tau.sqrt();
    let mut out = DMatrix::<S>::zeros(rho.nrows(), rho.ncols());
    for (p, &ra) in projectors.iter().zip(r) {
        let e = inner(p, rho);
        let pr = p * rho;
        let g = &pr + pr.adjoint() - rho * S::from_real(2.0 * e);
        out += g * S::from_real(ra - c);
    }
    out * S::from_real(c / share)
}

struct Recorder {
    record: bool,
    truncation: Option<Truncation>,
    times: Vec<f64>,
    fidelity: Vec<f64>,
    purity: Vec<f64>,
    below: usize,
    pushes: usize,
}

impl Recorder {
    fn new(opts: &TrajectoryOptions) -> Self {
        Self {
            record: opts.record,
            truncation: opts.truncation,
            times: Vec::new(),
            fidelity: Vec::new(),
            purity: Vec::new(),
            below: 0,
            pushes: 0,
        }
    }

    /// Returns true when the trajectory should stop.
    fn push(&mut self, t: f64, f: f64, p: f64, last: bool) -> bool {
        if self.record || self.times.is_empty() || last {
            self.times.push(t);
            self.fidelity.push(f);
            self.purity.push(p);
        } else {
            *self.times.last_mut().expect("seeded") = t;
            *self.fidelity.last_mut().expect("seeded") = f;
            *self.purity.last_mut().expect("seeded") = p;
        }
        self.pushes += 1;
        if let (Some(tr), true) = (self.truncation, self.pushes > 1) {
            self.below = if f < tr.cutoff { self.below + 1 } else { 0 };
            return self.below >= tr.window.max(1);
        }
        false
    }

    fn finish(mut self, readouts: DMatrix<f64>, rho: DMatrix<C64>, truncated_at: Option<usize>) -> TrajectoryRecord {
        if !self.record && self.times.len() > 2 {
            let keep = [0, self.times.len() - 1];
            self.times = keep.iter().map(|&i| self.times[i]).collect();
            self.fidelity = keep.iter().map(|&i| self.fidelity[i]).collect();
            self.purity = keep.iter().map(|&i| self.purity[i]).collect();
        }
        TrajectoryRecord {
            times: self.times,
            readouts,
            fidelity_trace: self.fidelity,
            purity_trace: self.purity,
            final_state: DensityMatrix::from_unchecked(rho),
            truncated_at,
        }
    }
}

fn check_inputs(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
) -> Result<()> {
    cfg.validate()?;
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter("trajectory step dt must be > 0".into()));
    }
    if rho0.dim() != instance.dim() || schedule.n() != instance.n() {
        return Err(Error::InvalidParameter("state/schedule size differs from instance".into()));
    }
    Ok(())
}

fn sme_core<R: Rng + ?Sized>(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    mut source: Source<'_, R>,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    check_inputs(rho0, instance, schedule, cfg)?;
    let m = instance.m();
    let share = cfg.share(m);
    let steps = step_grid(schedule, cfg.dt);
    if let Source::Prescribed(r) = &source {
        if r.nrows() != m || r.ncols() != steps.len() {
            return Err(Error::InvalidParameter(format!(
                "prescribed readouts are {}x{}, grid needs {m}x{}",
                r.nrows(),
                r.ncols(),
                steps.len()
            )));
        }
    }
    let target: DMatrix<C64> = cast(&target_projector(instance)?);
    let noise_scale = share.sqrt();
    let mean_scale = 2.0 / cfg.tau.sqrt();

    let mut readouts = DMatrix::<f64>::zeros(m, if opts.record { steps.len() } else { 0 });
    let mut rec = Recorder::new(opts);
    let mut rho = rho0.matrix().clone();
    rec.push(0.0, inner(&target, &rho), inner(&rho, &rho), false);

    let mut t = 0.0;
    let mut current: Option<(usize, Vec<DMatrix<C64>>)> = None;
    let mut r = vec![0.0; m];
    for (s, &(j, h)) in steps.iter().enumerate() {
        if current.as_ref().is_none_or(|(cj, _)| *cj != j) {
            let set = projector_set(instance, &schedule.axes()[j])?;
            current = Some((j, set.projectors.iter().map(cast).collect()));
        }
        let ps = &current.as_ref().expect("set above").1;
        match &mut source {
            Source::Noise(rng) => {
                for (a, p) in ps.iter().enumerate() {
                    let z: f64 = rng.sample(StandardNormal);
                    r[a] = mean_scale * inner(p, &rho) + noise_scale * z / h.sqrt();
                }
            }
            Source::Prescribed(given) => {
                for (a, ra) in r.iter_mut().enumerate() {
                    *ra = given[(a, s)];
                }
            }
        }
        if opts.record {
            readouts.column_mut(s).copy_from_slice(&r);
        }
        let k1 = sme_drift(&rho, ps, &r, share, cfg.tau);
        let pred = &rho + &k1 * C64::from(h);
        let k2 = sme_drift(&pred, ps, &r, share, cfg.tau);
        rho += (k1 + k2) * C64::from(0.5 * h);
        t += h;
        let tr = trace_re(&rho);
        if (tr - 1.0).abs() > SME_TRACE_TOL || !tr.is_finite() {
            return Err(Error::TraceDrift { t, trace: tr });
        }
        hermitize(&mut rho);
        rho /= C64::from(tr);
        let last = s + 1 == steps.len();
        if rec.push(t, inner(&target, &rho), inner(&rho, &rho), last) {
            let trimmed = if opts.record { readouts.columns(0, s + 1).into_owned() } else { readouts };
            return Ok(rec.finish(trimmed, rho, Some(s + 1)));
        }
    }
    Ok(rec.finish(readouts, rho, None))
}

/// One diffusive trajectory with readout noise drawn from `rng`.
pub fn evolve_trajectory<R: Rng + ?Sized>(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    rng: &mut R,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    sme_core(rho0, instance, schedule, cfg, Source::Noise(rng), opts)
}

/// Integrates the conditioned equation along a prescribed m × N_steps readout record.
pub fn replay_readouts(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    readouts: &DMatrix<f64>,
) -> Result<TrajectoryRecord> {
    sme_core::<rand_chacha::ChaCha8Rng>(
        rho0,
        instance,
        schedule,
        cfg,
        Source::Prescribed(readouts),
        &TrajectoryOptions::default(),
    )
}

/// Discrete Kraus unravelling: each slice measures one uniformly chosen clause
/// (per-clause share) or every clause in turn (parallel share).
pub fn evolve_kraus_trajectory<R: Rng + ?Sized>(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    rng: &mut R,
    opts: &TrajectoryOptions,
) -> Result<TrajectoryRecord> {
    check_inputs(rho0, instance, schedule, cfg)?;
    let m = instance.m();
    let steps = step_grid(schedule, cfg.dt);
    let target: DMatrix<C64> = cast(&target_projector(instance)?);
    let mut readouts = DMatrix::<f64>::from_element(m, if opts.record { steps.len() } else { 0 }, f64::NAN);
    let mut rec = Recorder::new(opts);
    let mut rho = rho0.matrix().clone();
    rec.push(0.0, inner(&target, &rho), inner(&rho, &rho), false);
    let mut t = 0.0;
    let mut current: Option<(usize, Vec<DMatrix<C64>>)> = None;
    for (s, &(j, h)) in steps.iter().enumerate() {
        if current.as_ref().is_none_or(|(cj, _)| *cj != j) {
            let set = projector_set(instance, &schedule.axes()[j])?;
            current = Some((j, set.projectors.iter().map(cast).collect()));
        }
        let ps = &current.as_ref().expect("set above").1;
        let slice = MeasurementConfig { dt: h, ..*cfg };
        let chosen: Vec<usize> = match cfg.rate_share {
            RateShare::PerClause1OverM => vec![rng.random_range(0..m)],
            RateShare::Parallel => (0..m).collect(),
        };
        for a in chosen {
            let (next, r) = sample_update(&rho, &ps[a], &slice, rng)?;
            rho = next;
            if opts.record {
                readouts[(a, s)] = r;
            }
        }
        t += h;
        let last = s + 1 == steps.len();
        if rec.push(t, inner(&target, &rho), inner(&rho, &rho), last) {
            let trimmed = if opts.record { readouts.columns(0, s + 1).into_owned() } else { readouts };
            return Ok(rec.finish(trimmed, rho, Some(s + 1)));
        }
    }
    Ok(rec.finish(readouts, rho, None))
}
