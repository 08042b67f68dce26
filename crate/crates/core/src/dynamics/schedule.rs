use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::AxisVector;

/// Measurement-axis schedule: piecewise constant, each grid value holding until the next grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    times: Vec<f64>,
    axes: Vec<AxisVector>,
}

impl Schedule {
    pub fn new(times: Vec<f64>, axes: Vec<AxisVector>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter("schedule needs at least 2 grid points".into()));
        }
        if times.len() != axes.len() {
            return Err(Error::InvalidParameter(format!("{} grid times but {} axes", times.len(), axes.len())));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter("schedule must start at t = 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParameter("schedule times must be strictly increasing".into()));
        }
        let n = axes[0].n();
        if axes.iter().any(|a| a.n() != n) {
            return Err(Error::InvalidParameter("axes have inconsistent qubit counts".into()));
        }
        Ok(Self { times, axes })
    }

    /// Uniform grid of `grid_size` points on [0, t_f].
    pub fn uniform_grid(t_f: f64, grid_size: usize) -> Result<Vec<f64>> {
        if !(t_f > 0.0) || grid_size < 2 {
            return Err(Error::InvalidParameter(format!("need T_f > 0 and grid_size >= 2 (got {t_f}, {grid_size})")));
        }
        let last = (grid_size - 1) as f64;
        Ok((0..grid_size).map(|j| t_f * j as f64 / last).collect())
    }

    /// θ(t) = θ_i + (π/2 − θ_i) t / T_f on every qubit.
    pub fn linear(n: usize, t_f: f64, grid_size: usize, theta_i: f64) -> Result<Self> {
        let times = Self::uniform_grid(t_f, grid_size)?;
        let axes = times
            .iter()
            .map(|t| AxisVector::uniform(n, theta_i + (FRAC_PI_2 - theta_i) * t / t_f))
            .collect::<Result<_>>()?;
        Self::new(times, axes)
    }

    /// Piecewise-constant form of the same ramp: interval j holds θ at its midpoint and the final
    /// grid value repeats the last interval.
    pub fn linear_midpoint(n: usize, t_f: f64, grid_size: usize, theta_i: f64) -> Result<Self> {
        let times = Self::uniform_grid(t_f, grid_size)?;
        let ramp = |t: f64| theta_i + (FRAC_PI_2 - theta_i) * t / t_f;
        let mut axes: Vec<AxisVector> =
            times.windows(2).map(|w| AxisVector::uniform(n, ramp(0.5 * (w[0] + w[1])))).collect::<Result<_>>()?;
        axes.push(axes[axes.len() - 1].clone());
        Self::new(times, axes)
    }

    /// Per-qubit angle tracks sampled from `f(t)`; angles are only required to be finite.
    pub fn from_fn(t_f: f64, grid_size: usize, mut f: impl FnMut(f64) -> Vec<f64>) -> Result<Self> {
        let times = Self::uniform_grid(t_f, grid_size)?;
        let axes = times.iter().map(|&t| AxisVector::unconstrained(f(t))).collect::<Result<_>>()?;
        Self::new(times, axes)
    }

    /// Builds from per-qubit tracks `tracks[q][j]`.
    pub fn from_tracks(times: Vec<f64>, tracks: &[Vec<f64>]) -> Result<Self> {
        let axes = (0..times.len())
            .map(|j| AxisVector::unconstrained(tracks.iter().map(|tr| tr[j]).collect()))
            .collect::<Result<_>>()?;
        Self::new(times, axes)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn axes(&self) -> &[AxisVector] {
        &self.axes
    }

    pub fn t_f(&self) -> f64 {
        *self.times.last().expect("non-empty")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn n(&self) -> usize {
        self.axes[0].n()
    }

    pub fn intervals(&self) -> usize {
        self.times.len() - 1
    }

    pub fn interval_width(&self, j: usize) -> f64 {
        self.times[j + 1] - self.times[j]
    }

    /// Substep count and width for interval `j` with step at most `h_max`.
    pub fn substeps(&self, j: usize, h_max: f64) -> (usize, f64) {
        let w = self.interval_width(j);
        let k = ((w / h_max) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
        (k, w / k as f64)
    }

    /// Axis in force at time t (left-continuous piecewise constant).
    pub fn axis_at(&self, t: f64) -> &AxisVector {
        let j = self.times.partition_point(|&x| x <= t).saturating_sub(1);
        &self.axes[j.min(self.axes.len() - 1)]
    }

    /// Angle track of qubit q over the grid.
    pub fn track(&self, q: usize) -> Vec<f64> {
        self.axes.iter().map(|a| a.thetas()[q]).collect()
    }

    /// Same shape rescaled to a new horizon.
    pub fn rescaled(&self, t_f: f64) -> Result<Self> {
        let s = t_f / self.t_f();
        Self::new(self.times.iter().map(|t| t * s).collect(), self.axes.clone())
    }

    /// Same normalized-time shape resampled onto a uniform grid (piecewise-constant lookup).
    pub fn resampled(&self, t_f: f64, grid_size: usize) -> Result<Self> {
        let times = Self::uniform_grid(t_f, grid_size)?;
        let src = self.t_f();
        let axes = times.iter().map(|t| self.axis_at(t / t_f * src).clone()).collect();
        Self::new(times, axes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_schedule_endpoints() {
        let s = Schedule::linear(2, 4.0, 5, 0.0).unwrap();
        assert_eq!(s.times(), &[0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.axes()[0].thetas(), &[0.0, 0.0]);
        assert!((s.axes()[4].thetas()[0] - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn midpoint_ramp() {
        let s = Schedule::linear_midpoint(1, 4.0, 5, 0.0).unwrap();
        assert!((s.axes()[0].thetas()[0] - FRAC_PI_2 / 8.0).abs() < 1e-15);
        assert_eq!(s.axes()[3], s.axes()[4]);
    }

    #[test]
    fn piecewise_constant_left_lookup() {
        let s = Schedule::linear(1, 4.0, 5, 0.0).unwrap();
        assert_eq!(s.axis_at(0.0), &s.axes()[0]);
        assert_eq!(s.axis_at(0.99), &s.axes()[0]);
        assert_eq!(s.axis_at(1.0), &s.axes()[1]);
        assert_eq!(s.axis_at(4.0), &s.axes()[4]);
    }

    #[test]
    fn rejects_bad_grids() {
        let a = AxisVector::uniform(1, 0.1).unwrap();
        assert!(Schedule::new(vec![0.0], vec![a.clone()]).is_err());
        assert!(Schedule::new(vec![0.0, 0.0], vec![a.clone(), a.clone()]).is_err());
        assert!(Schedule::new(vec![0.1, 1.0], vec![a.clone(), a.clone()]).is_err());
        assert!(Schedule::new(vec![0.0, 1.0], vec![a]).is_err());
    }

    #[test]
    fn substeps_respect_max_step() {
        let s = Schedule::linear(1, 1.0, 3, 0.0).unwrap();
        let (k, h) = s.substeps(0, 0.1);
        assert_eq!(k, 5);
        assert!((h - 0.1).abs() < 1e-15);
        let (k, _) = s.substeps(0, 0.07);
        assert_eq!(k, 8);
    }
}
