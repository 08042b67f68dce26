//! Independent oracles shared by the integration tests. Nothing here calls into the
//! routines it is used to check.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use zeno_core::dynamics::DensityMatrix;
use zeno_core::linalg::C64;
use zeno_core::sat::{enumerate_solutions, Clause, SatInstance};

/// Gauss–Legendre nodes and weights on [−1, 1] from the Jacobi matrix eigenproblem.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut j = DMatrix::<f64>::zeros(order, order);
    for k in 1..order {
        let b = k as f64 / ((4 * k * k - 1) as f64).sqrt();
        j[(k - 1, k)] = b;
        j[(k, k - 1)] = b;
    }
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> =
        (0..order).map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

/// Composite Gauss–Legendre rule on [lo, hi]: `panels` equal panels of `order` nodes.
pub fn composite_rule(lo: f64, hi: f64, panels: usize, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = gauss_legendre(order);
    let width = (hi - lo) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let mid = lo + (p as f64 + 0.5) * width;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * width * xi, 0.5 * width * wi));
        }
    }
    out
}

/// Ginibre-distributed mixed state G G† / Tr(G G†).
pub fn random_state<R: Rng>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = DMatrix::<C64>::from_fn(dim, dim, |_, _| C64::new(gauss(rng), gauss(rng)));
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho /= C64::from(tr);
    DensityMatrix::new(rho).expect("Ginibre state is valid")
}

pub fn gauss<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(rand_distr::StandardNormal)
}

/// Satisfiable instance on n variables with 1..=max_clauses clauses of width 1..=min(n, 3).
pub fn random_instance<R: Rng>(n: usize, max_clauses: usize, rng: &mut R) -> SatInstance {
    loop {
        let m = rng.random_range(1..=max_clauses);
        let clauses: Vec<Clause> = (0..m)
            .map(|_| {
                let k = rng.random_range(1..=n.min(3));
                let mut vars: Vec<usize> = (0..n).collect();
                for i in 0..k {
                    let j = rng.random_range(i..n);
                    vars.swap(i, j);
                }
                let signs: Vec<i8> = (0..k).map(|_| if rng.random::<bool>() { 1 } else { -1 }).collect();
                Clause::new(&vars[..k], &signs).expect("valid clause")
            })
            .collect();
        let inst = SatInstance::new(n, clauses).expect("valid instance");
        if !enumerate_solutions(&inst).expect("small instance").is_empty() {
            return inst;
        }
    }
}

/// Kolmogorov–Smirnov statistic of `samples` against the CDF `cdf`.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    samples.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let c = cdf(x);
        d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs())
    })
}

/// exp(L h) applied through the vectorized generator, with L ρ = (γ/m′) Σ (PρP − ½{P, ρ}):
/// an integrator-free reference for the Lindblad propagation.
pub fn lindblad_superoperator_step(rho: &DMatrix<C64>, projectors: &[DMatrix<f64>], rate: f64, h: f64) -> DMatrix<C64> {
    let d = rho.nrows();
    let mut l = DMatrix::<C64>::zeros(d * d, d * d);
    let id = DMatrix::<C64>::identity(d, d);
    for p in projectors {
        let p = p.map(C64::from);
        // vec(A X B) = (Bᵀ ⊗ A) vec(X), column-major.
        l += p.transpose().kronecker(&p);
        l -= (id.kronecker(&p) + p.transpose().kronecker(&id)) * C64::from(0.5);
    }
    l *= C64::from(rate * h);
    let prop = expm(&l);
    let v = DMatrix::from_column_slice(d * d, 1, rho.as_slice());
    let out = prop * v;
    DMatrix::from_column_slice(d, d, out.as_slice())
}

/// Scaling-and-squaring Taylor exponential.
pub fn expm(a: &DMatrix<C64>) -> DMatrix<C64> {
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let s = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / C64::from(2f64.powi(s));
    let n = a.nrows();
    let mut term = DMatrix::<C64>::identity(n, n);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &x / C64::from(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Cyclic Jacobi eigenvalues of a real symmetric matrix, ascending.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut a = a.clone();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    vals.sort_by(f64::total_cmp);
    vals
}
