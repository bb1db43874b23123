use rayon::prelude::*;
use serde::Serialize;

use crate::duarte::{run_on_bits, Arrow, ColumnGeometry};
use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::stats::wilson_interval;
use rand::Rng;

/// `z` for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub q: f64,
    pub n: usize,
    pub ell: usize,
    /// Inclusive column range that is searched for an up arrow.
    pub columns: (usize, usize),
    pub trials: usize,
    pub hits: usize,
    pub p_hat: f64,
    /// 95% Wilson interval.
    pub lower: f64,
    pub upper: f64,
}

/// Fraction of `ω ~ μ_q` on `V` whose profile has an up arrow in the given
/// columns. Trial `t` uses the stream `(seed, t)`.
pub fn estimate_uparrow_density(
    q: f64,
    n: usize,
    ell: usize,
    columns: (usize, usize),
    trials: usize,
    seed: u64,
) -> Result<DensityEstimate> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Probability(q));
    }
    let (lo, hi) = columns;
    if lo == 0 || lo > hi || hi > n {
        return Err(Error::InvalidParameter(format!("columns {lo}..={hi} outside 1..={n}")));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let geom = ColumnGeometry::new(n)?;
    let hits = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream_rng(seed, t);
            let omega: Vec<u8> = (0..geom.region().len())
                .map(|_| u8::from(rng.random::<f64>() >= q))
                .collect();
            let p = run_on_bits(&geom, &omega, ell)?;
            Ok(p.phi[lo - 1..hi].contains(&Arrow::Up))
        })
        .collect::<Result<Vec<bool>>>()?
        .into_iter()
        .filter(|&h| h)
        .count();
    let (lower, upper) = wilson_interval(hits, trials, Z95);
    Ok(DensityEstimate {
        q,
        n,
        ell,
        columns,
        trials,
        hits,
        p_hat: hits as f64 / trials as f64,
        lower,
        upper,
    })
}

/// Whether the estimates shrink as `1/q` grows, i.e. `p̂` is nondecreasing in `q`.
pub fn decreasing_in_inverse_q(estimates: &[DensityEstimate]) -> bool {
    let mut sorted: Vec<&DensityEstimate> = estimates.iter().collect();
    sorted.sort_by(|a, b| a.q.total_cmp(&b.q));
    sorted.windows(2).all(|w| w[0].p_hat <= w[1].p_hat)
}
