//! Finite-strength clause measurement and its readout-averaged channel.
//!
//! Readout convention: the P branch is centred at −1/√τ, the (1−P) branch at +1/√τ.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::config::MeasurementConfig;
use super::state::DensityMatrix;
use crate::error::{Error, Result};
use crate::linalg::{cast, hermitize, inner, trace_re, Field, C64};
use crate::operators::ProjectorSet;

const BRANCH_TOL: f64 = 1e-8;

/// M_r = (Δt/2π)^{1/4} [e^{−Δt(r+1/√τ)²/4} P + e^{−Δt(r−1/√τ)²/4} (1−P)].
pub fn kraus_operator(p: &DMatrix<C64>, r: f64, cfg: &MeasurementConfig) -> DMatrix<C64> {
    let c = 1.0 / cfg.tau.sqrt();
    let norm = (cfg.dt / (2.0 * std::f64::consts::PI)).powf(0.25);
    let a = norm * (-0.25 * cfg.dt * (r + c).powi(2)).exp();
    let b = norm * (-0.25 * cfg.dt * (r - c).powi(2)).exp();
    let id = DMatrix::<C64>::identity(p.nrows(), p.ncols());
    p * C64::from(a - b) + id * C64::from(b)
}

/// Normalized M_r ρ M_r† for readout r; branch amplitudes are rescaled in log space so
/// strong measurements do not underflow.
pub(crate) fn conditioned_update<S: Field>(
    rho: &DMatrix<S>,
    p: &DMatrix<S>,
    r: f64,
    cfg: &MeasurementConfig,
) -> DMatrix<S> {
    let c = 1.0 / cfg.tau.sqrt();
    let la = -0.25 * cfg.dt * (r + c).powi(2);
    let lb = -0.25 * cfg.dt * (r - c).powi(2);
    let top = la.max(lb);
    let (a, b) = ((la - top).exp(), (lb - top).exp());
    let dim = rho.nrows();
    let m = p * S::from_real(a - b) + DMatrix::<S>::identity(dim, dim) * S::from_real(b);
    let mut out = &m * rho * &m;
    let tr = trace_re(&out);
    out *= S::from_real(1.0 / tr);
    hermitize(&mut out);
    out
}

/// Draws r from the exact readout marginal and returns the conditioned state.
pub(crate) fn sample_update<S: Field, R: Rng + ?Sized>(
    rho: &DMatrix<S>,
    p: &DMatrix<S>,
    cfg: &MeasurementConfig,
    rng: &mut R,
) -> Result<(DMatrix<S>, f64)> {
    if !(cfg.dt > 0.0) {
        return Err(Error::InvalidParameter("sampling a measurement needs dt > 0".into()));
    }
    let weight = inner(p, rho);
    if !(-BRANCH_TOL..=1.0 + BRANCH_TOL).contains(&weight) {
        return Err(Error::CorruptState(format!("branch weight Tr(P rho) = {weight}")));
    }
    let c = 1.0 / cfg.tau.sqrt();
    let mean = if rng.random::<f64>() < weight { -c } else { c };
    let z: f64 = rng.sample(StandardNormal);
    let r = mean + z / cfg.dt.sqrt();
    Ok((conditioned_update(rho, p, r, cfg), r))
}

pub fn sample_measurement<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    p: &DMatrix<C64>,
    cfg: &MeasurementConfig,
    rng: &mut R,
) -> Result<(DensityMatrix, f64)> {
    let (out, r) = sample_update(rho.matrix(), p, cfg, rng)?;
    Ok((DensityMatrix::from_unchecked(out), r))
}

/// Density of the readout marginal: a two-Gaussian mixture with variance 1/Δt.
pub fn readout_density(weight: f64, r: f64, cfg: &MeasurementConfig) -> f64 {
    let c = 1.0 / cfg.tau.sqrt();
    let g = |mu: f64| (cfg.dt / (2.0 * std::f64::consts::PI)).sqrt() * (-0.5 * cfg.dt * (r - mu).powi(2)).exp();
    weight * g(-c) + (1.0 - weight) * g(c)
}

/// ρ + (2β/m′) Σ_α [P ρ P − ½(P ρ + ρ P)].
pub(crate) fn channel_step<S: Field>(rho: &DMatrix<S>, projectors: &[DMatrix<S>], beta: f64, share: f64) -> DMatrix<S> {
    let mut acc = DMatrix::<S>::zeros(rho.nrows(), rho.ncols());
    for p in projectors {
        let pr = p * rho;
        acc += &pr * p;
        acc -= (&pr + rho * p) * S::from_real(0.5);
    }
    rho + acc * S::from_real(2.0 * beta / share)
}

/// Readout-averaged step at the configured rate share. It equals
/// (1 − βm/m′) ρ + (β/m′) Σ_α (P ρ P + Q ρ Q), so it is completely positive while βm/m′ ≤ 1:
/// always for the per-clause share, and for the parallel share only while mβ ≤ 1.
pub fn averaged_channel(rho: &DensityMatrix, projectors: &ProjectorSet, cfg: &MeasurementConfig) -> DensityMatrix {
    let ps: Vec<DMatrix<C64>> = projectors.projectors.iter().map(cast).collect();
    let out = channel_step(rho.matrix(), &ps, cfg.beta(), cfg.share(ps.len()));
    DensityMatrix::from_unchecked(out)
}
