use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::MeasurementConfig;
use super::schedule::Schedule;
use super::state::DensityMatrix;
use super::trajectory::{evolve_kraus_trajectory, evolve_trajectory, TrajectoryOptions, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::rng::{stream, substream};
use crate::sat::SatInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrajectoryMode {
    /// Continuous diffusive readout.
    Sme,
    /// Discrete finite-Δt clause measurements.
    Kraus,
}

impl std::str::FromStr for TrajectoryMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sme" => Ok(Self::Sme),
            "kraus" => Ok(Self::Kraus),
            _ => Err(Error::InvalidParameter(format!("unknown trajectory mode '{s}'"))),
        }
    }
}

/// Runs `shots` trajectories; shot i always draws from substream (seed, i).
pub fn run_ensemble(
    rho0: &DensityMatrix,
    instance: &SatInstance,
    schedule: &Schedule,
    cfg: &MeasurementConfig,
    mode: TrajectoryMode,
    shots: usize,
    seed: u64,
    opts: &TrajectoryOptions,
) -> Result<Vec<TrajectoryRecord>> {
    (0..shots)
        .into_par_iter()
        .map(|i| match mode {
            TrajectoryMode::Sme => {
                let mut rng = substream(seed, stream::TRAJECTORY, i as u64);
                evolve_trajectory(rho0, instance, schedule, cfg, &mut rng, opts)
            }
            TrajectoryMode::Kraus => {
                let mut rng = substream(seed, stream::KRAUS, i as u64);
                evolve_kraus_trajectory(rho0, instance, schedule, cfg, &mut rng, opts)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PostSelection {
    pub cutoff: f64,
    pub retained: usize,
    pub retained_fraction: f64,
    /// None when nothing survives the cutoff.
    pub mean: Option<f64>,
    pub std_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub count: usize,
    pub mean: f64,
    /// Unbiased sample variance (0 for a single record).
    pub variance: f64,
    pub std_error: f64,
    pub histogram: Vec<HistogramBin>,
    pub post_selection: Option<PostSelection>,
}

pub const DEFAULT_BINS: usize = 20;

/// Shifted by the first sample so identical inputs give exactly zero variance.
fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let x0 = xs[0];
    let s1: f64 = xs.iter().map(|x| x - x0).sum();
    let s2: f64 = xs.iter().map(|x| (x - x0).powi(2)).sum();
    let var = if xs.len() > 1 { ((s2 - s1 * s1 / n) / (n - 1.0)).max(0.0) } else { 0.0 };
    (x0 + s1 / n, var)
}

pub fn ensemble_statistics(records: &[TrajectoryRecord], fidelity_cutoff: Option<f64>) -> Result<EnsembleSummary> {
    let finals: Vec<f64> = records.iter().map(TrajectoryRecord::final_fidelity).collect();
    fidelity_statistics(&finals, fidelity_cutoff, DEFAULT_BINS)
}

/// Summary of final fidelities with a histogram of `bins` equal bins over [0, 1].
pub fn fidelity_statistics(finals: &[f64], fidelity_cutoff: Option<f64>, bins: usize) -> Result<EnsembleSummary> {
    if finals.is_empty() {
        return Err(Error::InvalidParameter("ensemble statistics need at least one record".into()));
    }
    if bins == 0 {
        return Err(Error::InvalidParameter("histogram needs at least one bin".into()));
    }
    let (mean, variance) = mean_var(finals);
    let count = finals.len();
    let mut histogram: Vec<HistogramBin> = (0..bins)
        .map(|b| HistogramBin { lo: b as f64 / bins as f64, hi: (b + 1) as f64 / bins as f64, count: 0 })
        .collect();
    for &f in finals {
        let b = ((f * bins as f64).floor().max(0.0) as usize).min(bins - 1);
        histogram[b].count += 1;
    }
    let post_selection = fidelity_cutoff.map(|cutoff| {
        let kept: Vec<f64> = finals.iter().copied().filter(|&f| f >= cutoff).collect();
        let (mean, std_error) = if kept.is_empty() {
            (None, None)
        } else {
            let (m, v) = mean_var(&kept);
            (Some(m), Some((v / kept.len() as f64).sqrt()))
        };
        PostSelection {
            cutoff,
            retained: kept.len(),
            retained_fraction: kept.len() as f64 / count as f64,
            mean,
            std_error,
        }
    });
    Ok(EnsembleSummary {
        count,
        mean,
        variance,
        std_error: (variance / count as f64).sqrt(),
        histogram,
        post_selection,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_records() {
        let s = fidelity_statistics(&[0.4; 10], Some(0.0), 10).unwrap();
        assert_eq!(s.variance, 0.0);
        assert!((s.mean - 0.4).abs() < 1e-15);
        assert_eq!(s.post_selection.unwrap().mean, Some(s.mean));
    }

    #[test]
    fn bimodal_post_selection() {
        let mut xs = vec![0.01; 50];
        xs.extend(vec![0.99; 50]);
        let s = fidelity_statistics(&xs, Some(0.05), 20).unwrap();
        let ps = s.post_selection.unwrap();
        assert!((ps.mean.unwrap() - 0.99).abs() < 1e-12);
        assert_eq!(ps.retained, 50);
        assert_eq!(s.histogram[0].count, 50);
        assert_eq!(s.histogram[19].count, 50);
    }

    #[test]
    fn empty_post_selection_reported() {
        let s = fidelity_statistics(&[0.01, 0.02], Some(0.5), 4).unwrap();
        let ps = s.post_selection.unwrap();
        assert_eq!(ps.retained, 0);
        assert!(ps.mean.is_none());
        assert!(fidelity_statistics(&[], None, 4).is_err());
    }
}
