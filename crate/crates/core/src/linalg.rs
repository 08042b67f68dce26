//! Small dense helpers shared by the dynamics and control kernels.

use nalgebra::{ComplexField, DMatrix};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// Scalar for state/costate matrices: `f64` when everything stays real, `C64` otherwise.
pub trait Field: ComplexField<RealField = f64> + Copy {}
impl<T: ComplexField<RealField = f64> + Copy> Field for T {}

pub fn cast<S: Field>(m: &DMatrix<f64>) -> DMatrix<S> {
    m.map(S::from_real)
}

pub fn to_complex(m: &DMatrix<f64>) -> DMatrix<C64> {
    m.map(|x| C64::new(x, 0.0))
}

/// Re Tr(A† B).
pub fn inner<S: Field>(a: &DMatrix<S>, b: &DMatrix<S>) -> f64 {
    a.dotc(b).real()
}

pub fn trace_re<S: Field>(a: &DMatrix<S>) -> f64 {
    a.trace().real()
}

pub fn scale<S: Field>(a: &DMatrix<S>, s: f64) -> DMatrix<S> {
    a * S::from_real(s)
}

pub fn hermitize<S: Field>(a: &mut DMatrix<S>) {
    let adj = a.adjoint();
    *a += adj;
    *a *= S::from_real(0.5);
}

pub fn max_abs<S: Field>(a: &DMatrix<S>) -> f64 {
    a.iter().fold(0.0, |acc, x| acc.max(x.modulus()))
}

/// Max-entry distance from Hermiticity.
pub fn hermiticity_error<S: Field>(a: &DMatrix<S>) -> f64 {
    max_abs(&(a - a.adjoint()))
}

/// Ascending eigenvalues and matching eigenvector columns of a Hermitian matrix.
pub fn hermitian_eigen<S: Field>(a: &DMatrix<S>) -> Result<(Vec<f64>, DMatrix<S>)> {
    let dim = a.nrows();
    let eig =
        a.clone().try_symmetric_eigen(f64::EPSILON, 100_000).ok_or(Error::Spectral { dim, max_abs: max_abs(a) })?;
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(dim, dim, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok((values, vectors))
}

pub fn kron<S: Field>(a: &DMatrix<S>, b: &DMatrix<S>) -> DMatrix<S> {
    a.kronecker(b)
}
