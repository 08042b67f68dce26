//! Schedule optimization: adjoint gradients for the Lindblad and most-likely-path problems,
//! Nesterov GRAPE, the horizon search and the speedup metrics.
//!
//! Controls are piecewise constant: grid value j holds on [t_j, t_{j+1}). The final grid value
//! only labels the endpoint; the optimizer keeps it equal to the last interval's value and its
//! gradient entry is zero.

pub mod cdj;
pub mod grape;
pub mod horizon;
pub mod lindblad;

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::dynamics::state::plus_state_real;
use crate::dynamics::{MeasurementConfig, Schedule};
use crate::error::{Error, Result};
use crate::operators::{target_projector, AxisVector};
use crate::sat::SatInstance;

pub use cdj::{adjoint_pass_cdj, cdj_cost, cdj_hamiltonian, optimal_readout, CdjOptions, CdjPass};
pub use grape::{
    nesterov_grape, nesterov_grape_observed, nesterov_grape_with, replay_fidelity, OptimizationResult, StopReason,
};
pub use horizon::{
    log_tts, optimize_tf, optimize_tf_linear, per_qubit_distance, relative_speedup, schedule_distance, tf_stationarity,
    tts, HorizonResult,
};
pub use lindblad::{adjoint_pass_lindblad, adjoint_pass_lindblad_with_step, lindblad_cost, LindbladPass};

pub const DEFAULT_GRID_SIZE: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ControlKind {
    LindbladOfs,
    LindbladOt,
    MlpOfs,
    MlpOt,
}

impl ControlKind {
    pub fn is_mlp(self) -> bool {
        matches!(self, Self::MlpOfs | Self::MlpOt)
    }

    pub fn is_ot(self) -> bool {
        matches!(self, Self::LindbladOt | Self::MlpOt)
    }

    /// The fixed-horizon kind with the same dynamics.
    pub fn ofs(self) -> Self {
        if self.is_mlp() {
            Self::MlpOfs
        } else {
            Self::LindbladOfs
        }
    }
}

impl std::str::FromStr for ControlKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lindblad_ofs" => Ok(Self::LindbladOfs),
            "lindblad_ot" => Ok(Self::LindbladOt),
            "mlp_ofs" => Ok(Self::MlpOfs),
            "mlp_ot" => Ok(Self::MlpOt),
            _ => Err(Error::InvalidParameter(format!("unknown control kind '{s}'"))),
        }
    }
}

impl std::fmt::Display for ControlKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::LindbladOfs => "lindblad_ofs",
            Self::LindbladOt => "lindblad_ot",
            Self::MlpOfs => "mlp_ofs",
            Self::MlpOt => "mlp_ot",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ControlProblem {
    pub kind: ControlKind,
    pub instance: SatInstance,
    /// Horizon; for OT kinds the starting guess.
    pub t_f: f64,
    pub grid_size: usize,
    pub tau_m: f64,
    pub per_qubit: bool,
    pub initial_schedule: Schedule,
    pub measurement: MeasurementConfig,
    /// Initial state, |+···+⟩ by default.
    pub rho0: DMatrix<f64>,
    /// Terminal projector, Π₀(π/2) by default.
    pub target: DMatrix<f64>,
}

impl ControlProblem {
    /// Problem with the linear θ_i = 0 starting schedule (midpoint-sampled), |+···+⟩ and the
    /// solution projector. Starting the first interval at exactly θ = 0 would sit on a saddle:
    /// 2-literal projector derivatives annihilate |+···+⟩ there, so its gradient vanishes.
    pub fn new(kind: ControlKind, instance: SatInstance, t_f: f64, grid_size: usize) -> Result<Self> {
        let n = instance.n();
        let target = target_projector(&instance)?;
        let p = Self {
            kind,
            t_f,
            grid_size,
            tau_m: if instance.k() <= 2 { 5.0 } else { 2.0 },
            per_qubit: false,
            initial_schedule: Schedule::linear_midpoint(n, t_f, grid_size, 0.0)?,
            measurement: MeasurementConfig::default(),
            rho0: plus_state_real(n),
            target,
            instance,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_schedule(mut self, schedule: Schedule) -> Result<Self> {
        self.t_f = schedule.t_f();
        self.grid_size = schedule.len();
        self.initial_schedule = schedule;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0 && self.t_f.is_finite()) {
            return Err(Error::InvalidParameter(format!("T_f must be positive, got {}", self.t_f)));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidParameter("grid_size must be at least 2".into()));
        }
        if self.kind.is_ot() && !(self.tau_m > 0.0) {
            return Err(Error::InvalidParameter("tau_m must be positive for time-optimal kinds".into()));
        }
        if self.initial_schedule.n() != self.instance.n() {
            return Err(Error::InvalidParameter("initial schedule qubit count differs from instance".into()));
        }
        if self.initial_schedule.len() != self.grid_size
            || (self.initial_schedule.t_f() - self.t_f).abs() > 1e-12 * self.t_f
        {
            return Err(Error::InvalidParameter("initial schedule is not on the problem grid".into()));
        }
        let dim = self.instance.dim();
        if self.rho0.shape() != (dim, dim) || self.target.shape() != (dim, dim) {
            return Err(Error::InvalidParameter("rho0/target dimension differs from instance".into()));
        }
        if self.kind.is_mlp() && (self.measurement.tau - 1.0).abs() > 1e-15 {
            return Err(Error::InvalidParameter("most-likely-path kinds use the tau = 1 convention".into()));
        }
        self.measurement.validate()
    }

    pub fn n_params(&self) -> usize {
        if self.per_qubit {
            self.instance.n()
        } else {
            1
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrapeConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// `None` leaves θ unconstrained.
    pub theta_clamp: Option<(f64, f64)>,
    pub cdj_running_cost_weight: f64,
}

impl Default for GrapeConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.05,
            momentum: 0.9,
            max_iters: 2000,
            grad_tol: 1e-6,
            theta_clamp: Some((0.0, FRAC_PI_2)),
            cdj_running_cost_weight: 1.0,
        }
    }
}

impl GrapeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidParameter(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::InvalidParameter(format!("momentum must lie in [0, 1), got {}", self.momentum)));
        }
        if let Some((lo, hi)) = self.theta_clamp {
            if !(lo < hi) {
                return Err(Error::InvalidParameter("theta_clamp needs lo < hi".into()));
            }
        }
        if !(self.cdj_running_cost_weight > 0.0) {
            return Err(Error::InvalidParameter("cdj_running_cost_weight must be positive".into()));
        }
        if !(self.grad_tol >= 0.0) {
            return Err(Error::InvalidParameter("grad_tol must be >= 0".into()));
        }
        Ok(())
    }
}

/// Parameter tracks `[p][j]`: one shared track or one per qubit.
pub(crate) fn tracks_of(schedule: &Schedule, per_qubit: bool) -> Vec<Vec<f64>> {
    if per_qubit {
        (0..schedule.n()).map(|q| schedule.track(q)).collect()
    } else {
        vec![schedule.track(0)]
    }
}

pub(crate) fn schedule_of(times: &[f64], tracks: &[Vec<f64>], n: usize) -> Result<Schedule> {
    let axes = (0..times.len())
        .map(|j| {
            let th: Vec<f64> =
                if tracks.len() == n { tracks.iter().map(|t| t[j]).collect() } else { vec![tracks[0][j]; n] };
            AxisVector::unconstrained(th)
        })
        .collect::<Result<_>>()?;
    Schedule::new(times.to_vec(), axes)
}
