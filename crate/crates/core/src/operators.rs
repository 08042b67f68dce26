//! Clause projectors, the cost operator and its spectral data.
//!
//! Basis index bit order: qubit 0 (variable 1) is the most significant bit, bit 1 = T.
//! The single-qubit measured state is |lθ⟩ = R_y(π + lθ)|+⟩ with R_y(φ) = exp(−iφσ_y/2);
//! all projectors are therefore real symmetric.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::hermitian_eigen;
use crate::sat::{Clause, SatInstance};

/// Eigenvalues below this count as zero.
pub const ZERO_TOL: f64 = 1e-9;

const RANGE_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisVector {
    thetas: Vec<f64>,
}

impl AxisVector {
    /// Per-qubit angles, each in [0, π/2].
    pub fn new(thetas: Vec<f64>) -> Result<Self> {
        if let Some(t) = thetas.iter().find(|t| !(-RANGE_SLACK..=FRAC_PI_2 + RANGE_SLACK).contains(*t)) {
            return Err(Error::InvalidParameter(format!("axis angle {t} outside [0, pi/2]")));
        }
        Self::unconstrained(thetas)
    }

    /// Any finite angles; used when the optimizer runs without clamping.
    pub fn unconstrained(thetas: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() {
            return Err(Error::InvalidParameter("axis vector must be non-empty".into()));
        }
        if thetas.iter().any(|t| !t.is_finite()) {
            return Err(Error::NonFinite("axis angle".into()));
        }
        Ok(Self { thetas })
    }

    pub fn uniform(n: usize, theta: f64) -> Result<Self> {
        Self::new(vec![theta; n])
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn n(&self) -> usize {
        self.thetas.len()
    }
}

/// Amplitudes of |lθ⟩ in the (|0⟩, |1⟩) basis.
pub fn qubit_state(sign: f64, theta: f64) -> [f64; 2] {
    let half = 0.5 * (std::f64::consts::PI + sign * theta);
    let (s, c) = half.sin_cos();
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [r * (c - s), r * (s + c)]
}

/// d|lθ⟩/dθ.
pub fn qubit_state_derivative(sign: f64, theta: f64) -> [f64; 2] {
    let half = 0.5 * (std::f64::consts::PI + sign * theta);
    let (s, c) = half.sin_cos();
    let r = 0.5 * sign * std::f64::consts::FRAC_1_SQRT_2;
    [r * (-s - c), r * (c - s)]
}

fn qubit_projector(sign: f64, theta: f64) -> [[f64; 2]; 2] {
    let v = qubit_state(sign, theta);
    [[v[0] * v[0], v[0] * v[1]], [v[1] * v[0], v[1] * v[1]]]
}

fn qubit_projector_derivative(sign: f64, theta: f64) -> [[f64; 2]; 2] {
    let v = qubit_state(sign, theta);
    let d = qubit_state_derivative(sign, theta);
    let mut out = [[0.0; 2]; 2];
    for (a, row) in out.iter_mut().enumerate() {
        for (b, x) in row.iter_mut().enumerate() {
            *x = d[a] * v[b] + v[a] * d[b];
        }
    }
    out
}

/// ⊗ of 2×2 factors on the listed qubits, identity elsewhere.
fn embed(n: usize, factors: &[(usize, [[f64; 2]; 2])]) -> DMatrix<f64> {
    let dim = 1usize << n;
    let mut other_mask = dim - 1;
    for &(q, _) in factors {
        other_mask &= !(1usize << (n - 1 - q));
    }
    DMatrix::from_fn(dim, dim, |i, j| {
        if (i ^ j) & other_mask != 0 {
            return 0.0;
        }
        factors.iter().fold(1.0, |acc, &(q, f)| {
            let shift = n - 1 - q;
            acc * f[(i >> shift) & 1][(j >> shift) & 1]
        })
    })
}

fn check_clause(clause: &Clause, axis: &AxisVector, n: usize) -> Result<()> {
    if axis.n() != n {
        return Err(Error::InvalidParameter(format!("axis length {} != n = {n}", axis.n())));
    }
    if let Some(l) = clause.literals().iter().find(|l| l.var >= n) {
        return Err(Error::InvalidInstance(format!("clause variable {} exceeds n = {n}", l.var + 1)));
    }
    Ok(())
}

pub fn clause_projector(clause: &Clause, axis: &AxisVector, n: usize) -> Result<DMatrix<f64>> {
    check_clause(clause, axis, n)?;
    let factors: Vec<_> =
        clause.literals().iter().map(|l| (l.var, qubit_projector(l.sign(), axis.thetas()[l.var]))).collect();
    Ok(embed(n, &factors))
}

/// ∂P/∂θ_q for one qubit angle; zero when the clause does not touch `qubit`.
pub fn clause_projector_derivative(clause: &Clause, axis: &AxisVector, n: usize, qubit: usize) -> Result<DMatrix<f64>> {
    check_clause(clause, axis, n)?;
    if !clause.contains_var(qubit) {
        return Ok(DMatrix::zeros(1 << n, 1 << n));
    }
    let factors: Vec<_> = clause
        .literals()
        .iter()
        .map(|l| {
            let th = axis.thetas()[l.var];
            let f =
                if l.var == qubit { qubit_projector_derivative(l.sign(), th) } else { qubit_projector(l.sign(), th) };
            (l.var, f)
        })
        .collect();
    Ok(embed(n, &factors))
}

/// dP/dθ when every qubit angle moves together.
pub fn clause_projector_global_derivative(clause: &Clause, axis: &AxisVector, n: usize) -> Result<DMatrix<f64>> {
    let dim = 1usize << n;
    let mut out = DMatrix::zeros(dim, dim);
    for l in clause.literals() {
        out += clause_projector_derivative(clause, axis, n, l.var)?;
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ProjectorSet {
    pub projectors: Vec<DMatrix<f64>>,
    pub axis: AxisVector,
}

pub fn projector_set(instance: &SatInstance, axis: &AxisVector) -> Result<ProjectorSet> {
    let projectors =
        instance.clauses().iter().map(|c| clause_projector(c, axis, instance.n())).collect::<Result<_>>()?;
    Ok(ProjectorSet { projectors, axis: axis.clone() })
}

#[derive(Debug, Clone)]
pub struct CostOperator {
    pub matrix: DMatrix<f64>,
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<f64>,
    pub ground_projector: DMatrix<f64>,
    pub ground_dim: usize,
    pub gap: f64,
}

impl CostOperator {
    /// Orthonormal basis of the groundspace as columns.
    pub fn ground_basis(&self) -> DMatrix<f64> {
        self.eigenvectors.columns(0, self.ground_dim).into_owned()
    }
}

pub fn cost_matrix(instance: &SatInstance, axis: &AxisVector) -> Result<DMatrix<f64>> {
    let set = projector_set(instance, axis)?;
    let dim = instance.dim();
    let mut o = DMatrix::zeros(dim, dim);
    for p in &set.projectors {
        o += p;
    }
    Ok(o / instance.m() as f64)
}

pub fn cost_operator(instance: &SatInstance, axis: &AxisVector) -> Result<CostOperator> {
    let matrix = cost_matrix(instance, axis)?;
    let (eigenvalues, eigenvectors) = hermitian_eigen(&matrix)?;
    let ground_dim = eigenvalues.iter().take_while(|&&l| l < ZERO_TOL).count();
    let basis = eigenvectors.columns(0, ground_dim);
    let ground_projector = basis * basis.transpose();
    let gap = eigenvalues.iter().copied().find(|&l| l > ZERO_TOL).unwrap_or(0.0);
    Ok(CostOperator { matrix, eigenvalues, eigenvectors, ground_projector, ground_dim, gap })
}

pub fn spectral_gap(instance: &SatInstance, axis: &AxisVector) -> Result<f64> {
    Ok(cost_operator(instance, axis)?.gap)
}

/// min over normalized |ψ₀⟩ in range Π₀(axis) of ⟨ψ₀|Π₀(axis2)|ψ₀⟩.
pub fn groundspace_overlap(instance: &SatInstance, axis: &AxisVector, axis2: &AxisVector) -> Result<f64> {
    let a = cost_operator(instance, axis)?;
    let b = cost_operator(instance, axis2)?;
    if a.ground_dim != b.ground_dim {
        return Err(Error::GroundspaceMismatch(a.ground_dim, b.ground_dim));
    }
    if a.ground_dim == 0 {
        return Err(Error::InvalidInstance("empty groundspace (unsatisfiable instance)".into()));
    }
    let v = a.ground_basis();
    let restricted = v.transpose() * &b.ground_projector * &v;
    let (vals, _) = hermitian_eigen(&restricted)?;
    Ok(vals[0].clamp(0.0, 1.0))
}

/// Π₀(π/2): the diagonal projector onto satisfying computational basis states.
pub fn target_projector(instance: &SatInstance) -> Result<DMatrix<f64>> {
    let axis = AxisVector::uniform(instance.n(), FRAC_PI_2)?;
    let o = cost_matrix(instance, &axis)?;
    let dim = instance.dim();
    Ok(DMatrix::from_fn(dim, dim, |i, j| if i == j && o[(i, i)] < ZERO_TOL { 1.0 } else { 0.0 }))
}

/// (clause index, ∂P_α/∂θ_p) for every clause that depends on one parameter.
pub type ClauseDerivatives = Vec<(usize, DMatrix<f64>)>;

/// Per-parameter lists of (clause index, ∂P_α/∂θ_p): one parameter when `per_qubit` is false,
/// otherwise one per qubit.
pub fn projector_derivatives(
    instance: &SatInstance,
    axis: &AxisVector,
    per_qubit: bool,
) -> Result<Vec<ClauseDerivatives>> {
    let n = instance.n();
    if !per_qubit {
        let list = instance
            .clauses()
            .iter()
            .enumerate()
            .map(|(a, c)| Ok((a, clause_projector_global_derivative(c, axis, n)?)))
            .collect::<Result<_>>()?;
        return Ok(vec![list]);
    }
    (0..n)
        .map(|q| {
            instance
                .clauses()
                .iter()
                .enumerate()
                .filter(|(_, c)| c.contains_var(q))
                .map(|(a, c)| Ok((a, clause_projector_derivative(c, axis, n, q)?)))
                .collect()
        })
        .collect()
}
