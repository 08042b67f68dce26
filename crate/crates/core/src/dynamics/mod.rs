//! State evolution: Kraus measurements, the averaged channel, Lindblad, and conditioned trajectories.

pub mod config;
pub mod ensemble;
pub mod kraus;
pub mod lindblad;
pub mod schedule;
pub mod state;
pub mod trajectory;

pub use config::{MeasurementConfig, RateShare};
pub use ensemble::{ensemble_statistics, fidelity_statistics, run_ensemble, EnsembleSummary, TrajectoryMode};
pub use kraus::{averaged_channel, kraus_operator, readout_density, sample_measurement};
pub use lindblad::{evolve_lindblad, evolve_lindblad_with_step, lindblad_final_fidelity, Generator, LindbladTrace};
pub use schedule::Schedule;
pub use state::DensityMatrix;
pub use trajectory::{
    evolve_kraus_trajectory, evolve_trajectory, replay_readouts, TrajectoryOptions, TrajectoryRecord, Truncation,
};
