use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::Serialize;

use super::generator::GeneratorOperator;
use crate::error::{Error, Result};
use crate::rng::stream_rng;

/// `S = D^{1/2}(−L)D^{−1/2}` with `D = diag(μ)`. Reversibility makes the
/// off-diagonal entries `−sqrt(L(i,j)L(j,i))`, symmetric by construction.
pub(crate) struct Symmetrized {
    diag: Vec<f64>,
    row_start: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Symmetrized {
    pub(crate) fn new(gen: &GeneratorOperator) -> Self {
        let mu = gen.mu();
        let mut row_start = vec![0];
        let mut cols = Vec::new();
        let mut weights = Vec::new();
        for i in 0..gen.dim() {
            for (j, r) in gen.row(i) {
                cols.push(j);
                weights.push(r * (mu[i] / mu[j]).sqrt());
            }
            row_start.push(cols.len());
        }
        Symmetrized {
            diag: (0..gen.dim()).map(|i| gen.out_rate(i)).collect(),
            row_start,
            cols,
            weights,
        }
    }

    pub(crate) fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `y = S x`, skipping rows and columns where `keep` is false.
    pub(crate) fn apply_masked(&self, x: &[f64], y: &mut [f64], keep: Option<&[bool]>) {
        for i in 0..self.dim() {
            if keep.is_some_and(|k| !k[i]) {
                y[i] = 0.0;
                continue;
            }
            let mut acc = self.diag[i] * x[i];
            for k in self.row_start[i]..self.row_start[i + 1] {
                let j = self.cols[k];
                if keep.is_none_or(|m| m[j]) {
                    acc -= self.weights[k] * x[j];
                }
            }
            y[i] = acc;
        }
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.apply_masked(x, y, None)
    }

    fn norm_bound(&self) -> f64 {
        (0..self.dim())
            .map(|i| {
                self.diag[i]
                    + self.weights[self.row_start[i]..self.row_start[i + 1]]
                        .iter()
                        .sum::<f64>()
            })
            .fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += alpha * x);
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = dot(v, v).sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
    n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GapReport {
    pub gap: f64,
    pub t_rel: f64,
    /// `‖S v − λ v‖` for the returned unit eigenvector of the symmetrized operator.
    pub residual: f64,
    /// Lanczos steps over all restarts.
    pub iterations: usize,
}

const MAX_KRYLOV: usize = 300;
const MAX_RESTARTS: usize = 40;

/// Smallest nonzero eigenvalue of `−L`, by Lanczos with full
/// reorthogonalization on the symmetrized operator with `sqrt(μ)` deflated.
/// Converged when the explicit residual is at most `tol`.
pub fn spectral_gap(gen: &GeneratorOperator, tol: f64) -> Result<GapReport> {
    let components = gen.component_count();
    if components != 1 || gen.dim() < 2 {
        return Err(Error::Reducible { components });
    }
    let s = Symmetrized::new(gen);
    let n = s.dim();
    let ground: Vec<f64> = gen.mu().iter().map(|m| m.sqrt()).collect();
    let scale = s.norm_bound().max(1.0);
    let mut rng = stream_rng(0x6a70, 0);
    let mut random_vector = |basis: &[Vec<f64>]| -> Option<Vec<f64>> {
        for _ in 0..8 {
            let mut v: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
            for _ in 0..2 {
                axpy(-dot(&ground, &v), &ground, &mut v);
                for b in basis {
                    axpy(-dot(b, &v), b, &mut v);
                }
            }
            if normalize(&mut v) > 1e-8 {
                return Some(v);
            }
        }
        None
    };

    let krylov = MAX_KRYLOV.min(n - 1);
    let mut start = random_vector(&[]).expect("deflated space is nonempty");
    let mut iterations = 0;
    let mut best = (f64::NAN, f64::INFINITY);
    let mut w = vec![0.0; n];
    for _ in 0..MAX_RESTARTS {
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha: Vec<f64> = Vec::new();
        let mut beta: Vec<f64> = Vec::new();
        loop {
            let k = basis.len() - 1;
            s.apply(&basis[k], &mut w);
            iterations += 1;
            let a = dot(&basis[k], &w);
            alpha.push(a);
            for _ in 0..2 {
                axpy(-dot(&ground, &w), &ground, &mut w);
                for b in &basis {
                    axpy(-dot(b, &w), b, &mut w);
                }
            }
            let b = dot(&w, &w).sqrt();
            let full = basis.len() == krylov;
            let check = full || basis.len() % 10 == 0 || b <= 1e-12 * scale;
            if check {
                let (theta, y) = smallest_ritz(&alpha, &beta);
                let mut v = vec![0.0; n];
                for (yi, bi) in y.iter().zip(&basis) {
                    axpy(*yi, bi, &mut v);
                }
                normalize(&mut v);
                let mut sv = vec![0.0; n];
                s.apply(&v, &mut sv);
                axpy(-theta, &v, &mut sv);
                let residual = dot(&sv, &sv).sqrt();
                if residual < best.1 {
                    best = (theta, residual);
                }
                if residual <= tol {
                    return finish(theta, residual, iterations);
                }
                if full {
                    start = v;
                    break;
                }
            }
            if b <= 1e-12 * scale {
                // invariant subspace: continue from a fresh orthogonal direction
                match random_vector(&basis) {
                    Some(v) => {
                        beta.push(0.0);
                        basis.push(v);
                    }
                    None => {
                        start = basis.pop().expect("basis is nonempty");
                        break;
                    }
                }
            } else {
                beta.push(b);
                basis.push(w.iter().map(|x| x / b).collect());
            }
        }
    }
    Err(Error::NoConvergence { residual: best.1 })
}

fn finish(theta: f64, residual: f64, iterations: usize) -> Result<GapReport> {
    if theta <= 0.0 {
        return Err(Error::NoConvergence { residual });
    }
    Ok(GapReport {
        gap: theta,
        t_rel: 1.0 / theta,
        residual,
        iterations,
    })
}

/// Smallest eigenpair of the tridiagonal matrix with diagonal `alpha` and
/// off-diagonal `beta`.
fn smallest_ritz(alpha: &[f64], beta: &[f64]) -> (f64, Vec<f64>) {
    let m = alpha.len();
    let t = DMatrix::from_fn(m, m, |i, j| {
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
    let eig = SymmetricEigen::new(t);
    let k = eig.eigenvalues.imin();
    (eig.eigenvalues[k], eig.eigenvectors.column(k).iter().copied().collect())
}
