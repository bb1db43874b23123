use serde::Serialize;

use super::generator::{GeneratorOperator, State};
use super::hitting::in_target;
use crate::error::{Error, Result};

/// A function on the states of a generator.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestFunctionTable {
    pub values: Vec<f64>,
    /// `μ(f²) = 1`.
    pub normalized: bool,
}

impl TestFunctionTable {
    pub fn from_fn(gen: &GeneratorOperator, f: impl Fn(State) -> f64) -> Self {
        TestFunctionTable {
            values: gen.space().states().iter().map(|&s| f(s)).collect(),
            normalized: false,
        }
    }

    /// Indicator that every site with index in `window` is occupied.
    pub fn no_empties(gen: &GeneratorOperator, window: &[usize]) -> Self {
        let mask = window.iter().fold(0u32, |m, &i| m | (1 << i));
        Self::from_fn(gen, |s| f64::from(u8::from(s & mask == mask)))
    }

    pub fn mean(&self, gen: &GeneratorOperator) -> f64 {
        gen.mu().iter().zip(&self.values).map(|(m, f)| m * f).sum()
    }

    pub fn second_moment(&self, gen: &GeneratorOperator) -> f64 {
        gen.mu().iter().zip(&self.values).map(|(m, f)| m * f * f).sum()
    }

    /// Rescaled so that `μ(f²) = 1`; `None` for the zero function.
    pub fn normalized(&self, gen: &GeneratorOperator) -> Option<Self> {
        let norm = self.second_moment(gen).sqrt();
        (norm > 0.0).then(|| TestFunctionTable {
            values: self.values.iter().map(|v| v / norm).collect(),
            normalized: true,
        })
    }

    /// Whether `f` vanishes on `{ω₀ = 0}`; returns the first offending state.
    pub fn check_vanishes_on_target(&self, gen: &GeneratorOperator) -> Result<()> {
        for (i, &v) in self.values.iter().enumerate() {
            if v != 0.0 && in_target(gen, i)? {
                return Err(Error::NotInHa(gen.space().state(i)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DirichletReport {
    pub dirichlet: f64,
    pub variance: f64,
    pub mean: f64,
    /// `Var_μ(f)/D(f)` when `D(f) > 0`.
    pub poincare_ratio: Option<f64>,
}

/// `D(f) = Σ_x μ(c_x Var_x(f))` with `Var_x(f) = pq (f(ω^{x,1}) − f(ω^{x,0}))²`.
pub fn dirichlet_form(gen: &GeneratorOperator, f: &TestFunctionTable) -> DirichletReport {
    let q = gen.q();
    let pq = q * (1.0 - q);
    let mu = gen.mu();
    let mut d = 0.0;
    for (i, &m) in mu.iter().enumerate() {
        // the edges out of a state are exactly the unconstrained flips
        for (j, _) in gen.row(i) {
            let diff = f.values[j] - f.values[i];
            d += m * pq * diff * diff;
        }
    }
    let mean = f.mean(gen);
    let variance = (f.second_moment(gen) - mean * mean).max(0.0);
    DirichletReport {
        dirichlet: d,
        variance,
        mean,
        poincare_ratio: (d > 0.0).then(|| variance / d),
    }
}

/// `⟨f, −Lf⟩_μ`, equal to `D(f)` for a reversible generator.
pub fn energy(gen: &GeneratorOperator, f: &TestFunctionTable) -> f64 {
    let lf = gen.apply(&f.values);
    -gen
        .mu()
        .iter()
        .zip(&f.values)
        .zip(&lf)
        .map(|((m, a), b)| m * a * b)
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProxyRow {
    pub t: f64,
    pub bound: f64,
    /// `E_μ(τ₀) − bound`.
    pub slack: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProxyReport {
    /// `μ(φ)` after normalization.
    pub mu_phi: f64,
    pub dirichlet: f64,
    pub e_mu: f64,
    /// `T* = μ(φ)²/(16 D(φ))`.
    pub t_star: f64,
    /// `μ(φ)⁴/D(φ)`.
    pub figure: f64,
    pub at_t_star: ProxyRow,
    pub grid: Vec<ProxyRow>,
    pub all_hold: bool,
}

/// `T|μ(φ)|(|μ(φ)|e^{−TD(φ)} − (TD(φ))^{1/2})`.
pub fn proxy_bound(t: f64, mu_phi: f64, dirichlet: f64) -> f64 {
    let m = mu_phi.abs();
    t * m * (m * (-t * dirichlet).exp() - (t * dirichlet).sqrt())
}

/// Twenty log-spaced times from `T*/100` to `100 T*`.
pub fn default_grid(t_star: f64) -> Vec<f64> {
    (0..20)
        .map(|k| t_star * 10f64.powf(-2.0 + 4.0 * k as f64 / 19.0))
        .collect()
}

/// Checks `E_μ(τ₀) ≥ bound(T)` at `T*` and every `T` of the grid
/// (default grid when `grid` is empty), with absolute tolerance `1e−9`.
pub fn check_proxy_bound(
    gen: &GeneratorOperator,
    phi: &TestFunctionTable,
    e_mu: f64,
    grid: &[f64],
) -> Result<ProxyReport> {
    phi.check_vanishes_on_target(gen)?;
    let phi = phi.normalized(gen).ok_or(Error::ZeroDirichlet)?;
    let d = dirichlet_form(gen, &phi).dirichlet;
    if d <= 0.0 {
        return Err(Error::ZeroDirichlet);
    }
    let mu_phi = phi.mean(gen);
    let t_star = mu_phi * mu_phi / (16.0 * d);
    let row = |t: f64| {
        let bound = proxy_bound(t, mu_phi, d);
        ProxyRow {
            t,
            bound,
            slack: e_mu - bound,
            holds: bound <= e_mu + 1e-9,
        }
    };
    let times = if grid.is_empty() {
        default_grid(t_star)
    } else {
        grid.to_vec()
    };
    let grid: Vec<ProxyRow> = times.into_iter().map(row).collect();
    let at_t_star = row(t_star);
    Ok(ProxyReport {
        mu_phi,
        dirichlet: d,
        e_mu,
        t_star,
        figure: mu_phi.powi(4) / d,
        all_hold: at_t_star.holds && grid.iter().all(|r| r.holds),
        at_t_star,
        grid,
    })
}
