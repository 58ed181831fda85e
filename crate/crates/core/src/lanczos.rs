//! Restarted Lanczos for the lowest eigenpair of a real symmetric operator
//! given only as a matrix-vector product.
//!
//! Each cycle builds a Krylov basis of at most `krylov_dim` vectors with full
//! reorthogonalization, then restarts from the lowest Ritz vector.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug)]
pub struct LanczosOptions {
    pub tol: f64,
    pub krylov_dim: usize,
    /// Upper bound on operator applications.
    pub max_iterations: usize,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { tol: 1e-10, krylov_dim: 60, max_iterations: 5000 }
    }
}

#[derive(Clone, Debug)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Second-lowest Ritz value of the last cycle, when available.
    pub next_ritz: Option<f64>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

fn tridiagonal_eigen(alpha: &[f64], beta: &[f64]) -> SymmetricEigen<f64, nalgebra::Dyn> {
    let k = alpha.len();
    let t = DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    });
    SymmetricEigen::new(t)
}

fn lowest_two(values: &nalgebra::DVector<f64>) -> (usize, Option<f64>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    (idx[0], idx.get(1).map(|&i| values[i]))
}

/// Lowest eigenpair of the operator `apply` (`out = A v`) of dimension `dim`.
pub fn lowest_eigenpair<F>(dim: usize, apply: F, start: &[f64], opts: LanczosOptions) -> Result<Eigenpair>
where
    F: Fn(&[f64], &mut [f64]),
{
    if start.len() != dim {
        return Err(Error::DimensionMismatch { expected: dim, got: start.len() });
    }
    let krylov_dim = opts.krylov_dim.clamp(2, dim.max(2));
    let mut x = start.to_vec();
    let nx = norm(&x);
    if nx == 0.0 {
        return Err(Error::InvalidArgument("zero starting vector".into()));
    }
    x.iter_mut().for_each(|v| *v /= nx);

    let mut hx = vec![0.0; dim];
    let mut iterations = 0usize;
    let mut best_residual = f64::INFINITY;

    loop {
        let mut basis: Vec<Vec<f64>> = vec![x.clone()];
        let mut alpha: Vec<f64> = Vec::with_capacity(krylov_dim);
        let mut beta: Vec<f64> = Vec::with_capacity(krylov_dim);
        let mut w = vec![0.0; dim];
        let mut next_ritz = None;
        let mut coeffs = vec![1.0];

        for j in 0..krylov_dim {
            apply(&basis[j], &mut w);
            iterations += 1;
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            axpy(-a, &basis[j], &mut w);
            if j > 0 {
                axpy(-beta[j - 1], &basis[j - 1], &mut w);
            }
            // two Gram-Schmidt passes against the whole band
            for _ in 0..2 {
                for v in &basis {
                    let p = dot(&w, v);
                    axpy(-p, v, &mut w);
                }
            }
            let b = norm(&w);

            let eig = tridiagonal_eigen(&alpha, &beta);
            let (lo, second) = lowest_two(&eig.eigenvalues);
            next_ritz = second;
            coeffs = eig.eigenvectors.column(lo).iter().copied().collect();
            let estimate = b * coeffs[j].abs();

            if estimate <= 0.1 * opts.tol || b <= 1e-14 || j + 1 == krylov_dim || j + 1 >= dim {
                break;
            }
            beta.push(b);
            basis.push(w.iter().map(|v| v / b).collect());
        }

        x.iter_mut().for_each(|v| *v = 0.0);
        for (c, v) in coeffs.iter().zip(&basis) {
            axpy(*c, v, &mut x);
        }
        let nx = norm(&x);
        x.iter_mut().for_each(|v| *v /= nx);

        apply(&x, &mut hx);
        iterations += 1;
        let value = dot(&x, &hx);
        let residual = hx.iter().zip(&x).map(|(h, v)| (h - value * v).powi(2)).sum::<f64>().sqrt();
        best_residual = best_residual.min(residual);

        if residual <= opts.tol {
            return Ok(Eigenpair { value, vector: x, residual, iterations, next_ritz });
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NotConverged { iterations, residual: best_residual });
        }
    }
}
