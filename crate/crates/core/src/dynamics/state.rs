use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigen, hermiticity_error, inner, to_complex, trace_re, C64};

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
pub const PSD_TOL: f64 = 1e-8;

/// Hermitian, unit-trace, positive semidefinite 2^n × 2^n matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    entries: DMatrix<C64>,
}

impl DensityMatrix {
    pub fn new(entries: DMatrix<C64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim || !dim.is_power_of_two() {
            return Err(Error::CorruptState(format!(
                "density matrix must be square with power-of-two size, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let herm = hermiticity_error(&entries);
        if herm > HERMITIAN_TOL {
            return Err(Error::CorruptState(format!("not Hermitian (deviation {herm:.3e})")));
        }
        let tr = trace_re(&entries);
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::CorruptState(format!("trace {tr} != 1")));
        }
        let (vals, _) = hermitian_eigen(&entries)?;
        if vals[0] < -PSD_TOL {
            return Err(Error::CorruptState(format!("negative eigenvalue {:.3e}", vals[0])));
        }
        Ok(Self { entries })
    }

    pub fn from_real(entries: &DMatrix<f64>) -> Result<Self> {
        Self::new(to_complex(entries))
    }

    /// Skips validation; callers guarantee the invariants up to integrator tolerance.
    pub(crate) fn from_unchecked(entries: DMatrix<C64>) -> Self {
        Self { entries }
    }

    pub fn from_ket(ket: &DVector<C64>) -> Result<Self> {
        let norm = ket.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::CorruptState("zero or non-finite ket".into()));
        }
        let v = ket.unscale(norm);
        Self::new(&v * v.adjoint())
    }

    /// |+···+⟩⟨+···+| on n qubits.
    pub fn plus_state(n: usize) -> Self {
        let dim = 1usize << n;
        Self { entries: DMatrix::from_element(dim, dim, C64::new(1.0 / dim as f64, 0.0)) }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.entries
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn n(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    /// Tr(Π ρ) for a real symmetric projector Π.
    pub fn fidelity(&self, projector: &DMatrix<f64>) -> f64 {
        inner(&to_complex(projector), &self.entries)
    }

    pub fn purity(&self) -> f64 {
        inner(&self.entries, &self.entries)
    }
}

/// |+···+⟩⟨+···+| as a real matrix.
pub fn plus_state_real(n: usize) -> DMatrix<f64> {
    let dim = 1usize << n;
    DMatrix::from_element(dim, dim, 1.0 / dim as f64)
}
