use std::collections::VecDeque;

use serde::Serialize;

use super::generator::GeneratorOperator;
use super::spectral::{dot, Symmetrized};
use crate::error::{Error, Result};
use crate::lattice::Site;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HittingReport {
    /// `E_ω(τ₀)` per state, zero on the target.
    pub per_state: Vec<f64>,
    /// `E_μ(τ₀)`.
    pub e_mu: f64,
    /// `max |(−L_A u)(ω) − 1|` over non-target states.
    pub residual: f64,
}

/// Whether the origin is empty in state `i`.
pub fn in_target(gen: &GeneratorOperator, i: usize) -> Result<bool> {
    let o = gen.origin().ok_or(Error::SiteOutsideRegion(Site::ORIGIN))?;
    Ok(gen.space().state(i) >> o & 1 == 0)
}

/// Mean hitting time of `A = {ω₀ = 0}`: solves `−L_A u = 1` on `A^c` by
/// conjugate gradients on the symmetrized system, with iterative refinement
/// until the residual is at most `1e−10`.
pub fn mean_hitting(gen: &GeneratorOperator) -> Result<HittingReport> {
    let n = gen.dim();
    let target: Vec<bool> = (0..n).map(|i| in_target(gen, i)).collect::<Result<_>>()?;

    // every state must reach the target
    let mut reach = target.clone();
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| target[i]).collect();
    while let Some(i) = queue.pop_front() {
        for (j, _) in gen.row(i) {
            if !reach[j] {
                reach[j] = true;
                queue.push_back(j);
            }
        }
    }
    let unreachable: Vec<usize> = (0..n).filter(|&i| !reach[i]).collect();
    if let Some(&first) = unreachable.first() {
        return Err(Error::Unreachable {
            count: unreachable.len(),
            example: gen.space().state(first),
        });
    }

    let keep: Vec<bool> = target.iter().map(|t| !t).collect();
    let s = Symmetrized::new(gen);
    let sqrt_mu: Vec<f64> = gen.mu().iter().map(|m| m.sqrt()).collect();
    let mut u = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for _ in 0..20 {
        let r = hitting_residual(gen, &keep, &u);
        residual = r.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if residual <= 1e-10 {
            break;
        }
        // S_A δy = D^{1/2} r, then δu = D^{−1/2} δy
        let rhs: Vec<f64> = (0..n).map(|i| sqrt_mu[i] * r[i]).collect();
        let dy = conjugate_gradient(&s, &keep, &rhs, 1e-14);
        for i in 0..n {
            if keep[i] {
                u[i] += dy[i] / sqrt_mu[i];
            }
        }
    }
    if residual > 1e-10 {
        return Err(Error::NoConvergence { residual });
    }
    let e_mu = gen.mu().iter().zip(&u).map(|(m, x)| m * x).sum();
    Ok(HittingReport {
        per_state: u,
        e_mu,
        residual,
    })
}

/// `1 − (−L_A u)` on `A^c`, zero on `A`.
fn hitting_residual(gen: &GeneratorOperator, keep: &[bool], u: &[f64]) -> Vec<f64> {
    (0..gen.dim())
        .map(|i| {
            if !keep[i] {
                return 0.0;
            }
            // u vanishes on A, so (−L_A u)(i) = Σ_j L(i,j)(u_i − u_j)
            let lu: f64 = gen.row(i).map(|(j, r)| r * (u[i] - u[j])).sum();
            1.0 - lu
        })
        .collect()
}

fn conjugate_gradient(s: &Symmetrized, keep: &[bool], b: &[f64], rel_tol: f64) -> Vec<f64> {
    let n = b.len();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let b_norm = dot(b, b).sqrt();
    let mut rr = dot(&r, &r);
    for _ in 0..20 * n.max(50) {
        if rr.sqrt() <= rel_tol * b_norm {
            break;
        }
        s.apply_masked(&p, &mut ap, Some(keep));
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_new;
    }
    x
}
