//! Resolved parameter sets, one per subcommand. Field names double as config-file keys and,
//! in kebab case, as flag names.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use zeno_core::bounds::DEFAULT_GAP_FLOOR;
use zeno_core::control::ControlKind;
use zeno_core::dynamics::{RateShare, TrajectoryMode};
use zeno_core::sat::InstanceKind;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct InstanceParams {
    /// DIMACS file; overrides the generator fields.
    pub instance: Option<String>,
    pub family: InstanceKind,
    pub n: usize,
    pub seed: u64,
}

impl Default for InstanceParams {
    fn default() -> Self {
        Self { instance: None, family: InstanceKind::SingleSolutionRing, n: 2, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GenParams {
    pub kind: InstanceKind,
    pub n: usize,
    pub seed: u64,
    pub output: Option<String>,
}

impl Default for GenParams {
    fn default() -> Self {
        Self { kind: InstanceKind::Ring2sat, n: 4, seed: 0, output: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpectrumParams {
    #[serde(flatten)]
    pub inst: InstanceParams,
    pub points: usize,
    pub theta_min: f64,
    pub theta_max: f64,
}

impl Default for SpectrumParams {
    fn default() -> Self {
        Self { inst: InstanceParams::default(), points: 101, theta_min: 0.0, theta_max: FRAC_PI_2 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DragMode {
    Kraus,
    Lindblad,
    Sme,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct DragParams {
    #[serde(flatten)]
    pub inst: InstanceParams,
    /// "linear" or a schedule CSV path.
    pub schedule: String,
    pub mode: DragMode,
    pub dt: f64,
    pub tau: f64,
    pub t_f: f64,
    pub grid_size: usize,
    pub shots: usize,
    pub cutoff: f64,
    pub rate_share: RateShare,
}

impl Default for DragParams {
    fn default() -> Self {
        Self {
            inst: InstanceParams::default(),
            schedule: "linear".into(),
            mode: DragMode::Lindblad,
            dt: 0.01,
            tau: 1.0,
            t_f: 1.0,
            grid_size: 200,
            shots: 1000,
            cutoff: 0.05,
            rate_share: RateShare::PerClause1OverM,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct EnsembleParams {
    #[serde(flatten)]
    pub inst: InstanceParams,
    pub schedule: String,
    pub mode: TrajectoryMode,
    pub dt: f64,
    pub tau: f64,
    pub t_f: f64,
    pub grid_size: usize,
    pub shots: usize,
    pub cutoff: f64,
    pub bins: usize,
    pub rate_share: RateShare,
}

impl Default for EnsembleParams {
    fn default() -> Self {
        Self {
            inst: InstanceParams::default(),
            schedule: "linear".into(),
            mode: TrajectoryMode::Kraus,
            dt: 0.01,
            tau: 1.0,
            t_f: 1.0,
            grid_size: 200,
            shots: 10_000,
            cutoff: 0.05,
            bins: 20,
            rate_share: RateShare::PerClause1OverM,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PlanParams {
    #[serde(flatten)]
    pub inst: InstanceParams,
    pub theta_i: f64,
    pub theta_f: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub dt: f64,
    pub tau: f64,
    pub rate_share: RateShare,
    pub large_first_step: bool,
    pub gap_floor: f64,
}

impl Default for PlanParams {
    fn default() -> Self {
        Self {
            inst: InstanceParams::default(),
            theta_i: 0.1,
            theta_f: FRAC_PI_2,
            eps1: 0.05,
            eps2: 0.05,
            dt: 0.01,
            tau: 1.0,
            rate_share: RateShare::PerClause1OverM,
            large_first_step: false,
            gap_floor: DEFAULT_GAP_FLOOR,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizeParams {
    #[serde(flatten)]
    pub inst: InstanceParams,
    pub kind: ControlKind,
    /// Horizon for OFS kinds.
    pub t_f: f64,
    /// Horizon bracket for OT kinds.
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub horizon_tol: f64,
    pub grid_size: usize,
    /// Defaults to 5τ for 2-SAT and 2τ for 3-SAT.
    pub tau_m: Option<f64>,
    pub per_qubit: bool,
    /// Per-qubit starting offset amplitude in radians (0 starts from the shared ramp).
    pub perturbation: f64,
    pub learning_rate: f64,
    pub momentum: f64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Clamp θ to [clamp_lo, clamp_hi]; false leaves θ unconstrained.
    pub clamp: bool,
    pub clamp_lo: f64,
    pub clamp_hi: f64,
    /// Running-cost weight w of the most-likely-path kinds.
    pub weight: f64,
    pub tau: f64,
    pub rate_share: RateShare,
}

impl Default for OptimizeParams {
    fn default() -> Self {
        Self {
            inst: InstanceParams::default(),
            kind: ControlKind::LindbladOfs,
            t_f: 1.0,
            bracket_lo: 0.5,
            bracket_hi: 20.0,
            horizon_tol: 0.2,
            grid_size: 50,
            tau_m: None,
            per_qubit: false,
            perturbation: 0.0,
            learning_rate: 0.5,
            momentum: 0.9,
            max_iters: 300,
            grad_tol: 1e-6,
            clamp: true,
            clamp_lo: 0.0,
            clamp_hi: FRAC_PI_2,
            weight: 1.0,
            tau: 1.0,
            rate_share: RateShare::PerClause1OverM,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct QubitParams {
    pub phi_i: f64,
    pub phi_f: f64,
    pub tau: f64,
    pub t_f: f64,
    pub points: usize,
    pub seed: u64,
}

impl Default for QubitParams {
    fn default() -> Self {
        Self { phi_i: 0.0, phi_f: FRAC_PI_2, tau: 1.0, t_f: 2.0, points: 201, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SpeedupParams {
    pub family: InstanceKind,
    /// "2..5", "2,3,4" or a single n.
    pub n: String,
    pub tau_m: Option<f64>,
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    pub tol: f64,
    pub grid_size: usize,
    pub learning_rate: f64,
    pub max_iters: usize,
    pub weight: f64,
    pub seed: u64,
}

impl Default for SpeedupParams {
    fn default() -> Self {
        let s = zeno_core::experiments::SpeedupConfig::default();
        Self {
            family: s.family,
            n: "2..4".into(),
            tau_m: None,
            bracket_lo: s.bracket.0,
            bracket_hi: s.bracket.1,
            tol: s.tol,
            grid_size: s.grid_size,
            learning_rate: s.grape.learning_rate,
            max_iters: s.grape.max_iters,
            weight: s.grape.cdj_running_cost_weight,
            seed: 0,
        }
    }
}
