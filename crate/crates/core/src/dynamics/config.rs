use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateShare {
    /// One readout channel of rate 1/τ shared by all m clauses.
    #[default]
    PerClause1OverM,
    /// Every clause measured at the full rate 1/τ.
    Parallel,
}

impl std::str::FromStr for RateShare {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per_clause_1_over_m" => Ok(Self::PerClause1OverM),
            "parallel" => Ok(Self::Parallel),
            _ => Err(Error::InvalidParameter(format!("unknown rate_share '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementConfig {
    /// Step duration Δt in units of time.
    pub dt: f64,
    /// Characteristic measurement time τ.
    pub tau: f64,
    pub rate_share: RateShare,
}

impl Default for MeasurementConfig {
    fn default() -> Self {
        Self { dt: 0.01, tau: 1.0, rate_share: RateShare::PerClause1OverM }
    }
}

impl MeasurementConfig {
    pub fn new(dt: f64, tau: f64, rate_share: RateShare) -> Result<Self> {
        let cfg = Self { dt, tau, rate_share };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0) || !self.dt.is_finite() {
            return Err(Error::InvalidParameter(format!("dt must be >= 0, got {}", self.dt)));
        }
        if !(self.tau > 0.0) || !self.tau.is_finite() {
            return Err(Error::InvalidParameter(format!("tau must be > 0, got {}", self.tau)));
        }
        Ok(())
    }

    /// β = 1 − exp(−Δt / 2τ).
    pub fn beta(&self) -> f64 {
        -(-self.dt / (2.0 * self.tau)).exp_m1()
    }

    /// m′: the number of clauses sharing one channel's rate.
    pub fn share(&self, m: usize) -> f64 {
        match self.rate_share {
            RateShare::PerClause1OverM => m as f64,
            RateShare::Parallel => 1.0,
        }
    }
}
