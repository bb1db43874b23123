//! Continuous-time KCM dynamics.
//!
//! Every site carries a rate-one Poisson clock. When the clock at `x`
//! rings and `c_x` holds, `ω_x` is resampled: empty with probability `q`,
//! occupied with probability `p = 1 − q`. Rings at constrained sites do
//! nothing. The clocks are realised through their superposition: a global
//! rate-`|Λ|` clock whose rings land on a uniform site.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::lattice::{
    sample_bernoulli_with, BoundaryCondition, Configuration, Exterior, Region, Site,
};
use crate::rng::{exponential, stream_rng, StreamRng};
use crate::stats::{censored_median, mean_and_standard_error};

#[derive(Debug, Clone)]
pub struct SimParams {
    pub family: UpdateFamily,
    /// Probability that a resampled site is empty.
    pub q: f64,
    pub region: Arc<Region>,
    pub exterior: Exterior,
    pub t_max: f64,
    pub seed: u64,
    pub trial: u64,
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::Probability(self.q));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_max = {}", self.t_max)));
        }
        self.exterior.check(&self.region)
    }

    pub fn with_trial(&self, trial: u64) -> Self {
        SimParams {
            trial,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HittingResult {
    /// `None` when the run was censored at `t_max`.
    pub tau0: Option<f64>,
    /// Clock rings.
    pub events: u64,
    /// Rings at unconstrained sites.
    pub legal_updates: u64,
}

/// Per-site constraint tables. A rule that touches a healthy exterior site
/// can never fire and is dropped; exterior zeros are absorbed, so a rule
/// with no remaining member sites always fires.
#[derive(Debug, Clone)]
pub struct Constraints {
    site_rules: Vec<u32>,
    rule_members: Vec<u32>,
    members: Vec<u32>,
}

impl Constraints {
    pub fn new(family: &UpdateFamily, region: &Region, exterior: &Exterior) -> Self {
        let mut site_rules = vec![0u32];
        let mut rule_members = vec![0u32];
        let mut members = Vec::new();
        for &x in region.sites() {
            'rule: for rule in family.rules() {
                let start = members.len();
                for &d in rule {
                    let s = x + d;
                    match region.index_of(s) {
                        Some(i) => members.push(i as u32),
                        None if exterior.value(s) == 0 => {}
                        None => {
                            members.truncate(start);
                            continue 'rule;
                        }
                    }
                }
                rule_members.push(members.len() as u32);
            }
            site_rules.push(rule_members.len() as u32 - 1);
        }
        Constraints {
            site_rules,
            rule_members,
            members,
        }
    }

    /// `c_x` for the region site with index `x`.
    #[inline]
    pub fn satisfied(&self, bits: &[u8], x: usize) -> bool {
        let (r0, r1) = (self.site_rules[x] as usize, self.site_rules[x + 1] as usize);
        (r0..r1).any(|r| {
            let (m0, m1) = (self.rule_members[r] as usize, self.rule_members[r + 1] as usize);
            self.members[m0..m1].iter().all(|&i| bits[i as usize] == 0)
        })
    }

    /// Rules of site `x` as lists of region indices.
    pub fn rules_of(&self, x: usize) -> impl Iterator<Item = &[u32]> + '_ {
        (self.site_rules[x] as usize..self.site_rules[x + 1] as usize).map(move |r| {
            &self.members[self.rule_members[r] as usize..self.rule_members[r + 1] as usize]
        })
    }

    pub fn len(&self) -> usize {
        self.site_rules.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Rate of the flip `ω → ω^x`.
pub fn flip_rate(constraints: &Constraints, bits: &[u8], x: usize, q: f64) -> f64 {
    if !constraints.satisfied(bits, x) {
        0.0
    } else if bits[x] == 1 {
        q
    } else {
        1.0 - q
    }
}

/// One clock ring.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ring {
    pub time: f64,
    pub site: usize,
    pub legal: bool,
    /// The value after the ring.
    pub value: u8,
}

/// A running trajectory.
pub struct Trajectory<'a> {
    constraints: &'a Constraints,
    q: f64,
    bits: Vec<u8>,
    time: f64,
    rng: StreamRng,
    events: u64,
    legal_updates: u64,
}

impl<'a> Trajectory<'a> {
    pub fn new(constraints: &'a Constraints, q: f64, bits: Vec<u8>, rng: StreamRng) -> Self {
        Trajectory {
            constraints,
            q,
            bits,
            time: 0.0,
            rng,
            events: 0,
            legal_updates: 0,
        }
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn legal_updates(&self) -> u64 {
        self.legal_updates
    }

    /// The next ring if it happens no later than `horizon`. Otherwise the
    /// clock is left at `horizon` and nothing changes.
    pub fn next_ring(&mut self, horizon: f64) -> Option<Ring> {
        let n = self.bits.len();
        let t = self.time + exponential(&mut self.rng, n as f64);
        if t > horizon {
            self.time = horizon;
            return None;
        }
        self.time = t;
        let site = self.rng.random_range(0..n);
        let u: f64 = self.rng.random();
        self.events += 1;
        let legal = self.constraints.satisfied(&self.bits, site);
        if legal {
            self.legal_updates += 1;
            self.bits[site] = u8::from(u >= self.q);
        }
        Some(Ring {
            time: t,
            site,
            legal,
            value: self.bits[site],
        })
    }

    /// Runs without stopping until `horizon`.
    pub fn advance_to(&mut self, horizon: f64) {
        while self.next_ring(horizon).is_some() {}
    }
}

/// Trajectory for trial `params.trial`, started from the stationary
/// Bernoulli measure. The initial state uses the same stream as the clocks.
pub fn start<'a>(params: &SimParams, constraints: &'a Constraints) -> Result<(Trajectory<'a>, usize)> {
    params.validate()?;
    let origin = params
        .region
        .index_of(Site::ORIGIN)
        .ok_or(Error::SiteOutsideRegion(Site::ORIGIN))?;
    let mut rng = stream_rng(params.seed, params.trial);
    let init = sample_bernoulli_with(
        params.region.clone(),
        params.q,
        &mut rng,
        params.exterior.clone(),
    )?;
    Ok((
        Trajectory::new(constraints, params.q, init.bits().to_vec(), rng),
        origin,
    ))
}

fn run(params: &SimParams, constraints: &Constraints, persistence: bool) -> Result<HittingResult> {
    let (mut traj, origin) = start(params, constraints)?;
    let finish = |traj: &Trajectory, tau0| HittingResult {
        tau0,
        events: traj.events,
        legal_updates: traj.legal_updates,
    };
    if !persistence && traj.bits[origin] == 0 {
        return Ok(finish(&traj, Some(0.0)));
    }
    while let Some(ring) = traj.next_ring(params.t_max) {
        if ring.site != origin {
            continue;
        }
        if (persistence && ring.legal) || (!persistence && ring.value == 0) {
            return Ok(finish(&traj, Some(ring.time)));
        }
    }
    Ok(finish(&traj, None))
}

/// First time the origin is empty.
pub fn simulate_tau0(params: &SimParams) -> Result<HittingResult> {
    let c = Constraints::new(&params.family, &params.region, &params.exterior);
    run(params, &c, false)
}

/// First legal ring at the origin.
pub fn simulate_persistence(params: &SimParams) -> Result<HittingResult> {
    let c = Constraints::new(&params.family, &params.region, &params.exterior);
    run(params, &c, true)
}

/// The configuration at time `t` started from `initial`, with no stopping.
pub fn evolve(params: &SimParams, initial: &Configuration, t: f64) -> Result<Configuration> {
    params.validate()?;
    if initial.region() != &params.region {
        return Err(Error::InvalidParameter("initial state lives on another region".into()));
    }
    let c = Constraints::new(&params.family, &params.region, &params.exterior);
    let mut traj = Trajectory::new(
        &c,
        params.q,
        initial.bits().to_vec(),
        stream_rng(params.seed, params.trial),
    );
    traj.advance_to(t);
    Configuration::new(params.region.clone(), traj.bits, params.exterior.clone())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub results: Vec<HittingResult>,
    /// Mean over uncensored trials.
    pub mean: f64,
    pub standard_error: f64,
    /// Lower median with censored trials sorted last.
    pub median: Option<f64>,
    pub censored_fraction: f64,
}

/// Runs trials `0..trials`; trial `t` uses the stream `(seed, t)`.
pub fn batch(params: &SimParams, trials: usize, persistence: bool) -> Result<BatchSummary> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    params.validate()?;
    let c = Constraints::new(&params.family, &params.region, &params.exterior);
    let results = (0..trials as u64)
        .into_par_iter()
        .map(|t| run(&params.with_trial(t), &c, persistence))
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(results))
}

pub fn batch_tau0(params: &SimParams, trials: usize) -> Result<BatchSummary> {
    batch(params, trials, false)
}

pub fn summarize(results: Vec<HittingResult>) -> BatchSummary {
    let times: Vec<Option<f64>> = results.iter().map(|r| r.tau0).collect();
    let finite: Vec<f64> = times.iter().flatten().copied().collect();
    let (mean, standard_error) = mean_and_standard_error(&finite);
    BatchSummary {
        mean,
        standard_error,
        median: censored_median(&times),
        censored_fraction: (results.len() - finite.len()) as f64 / results.len().max(1) as f64,
        results,
    }
}

pub const CSV_HEADER: &str = "trial,seed,q,tau0,censored,events,legal_updates";

/// One CSV row per trial. Censored trials print `t_max` with `censored = 1`.
pub fn results_csv(params: &SimParams, results: &[HittingResult]) -> String {
    let mut out = format!("# kcm-lab v{} seed={}\n{CSV_HEADER}\n", crate::VERSION, params.seed);
    for (trial, r) in results.iter().enumerate() {
        let _ = writeln!(
            out,
            "{trial},{},{},{:.16e},{},{},{}",
            params.seed,
            params.q,
            r.tau0.unwrap_or(params.t_max),
            u8::from(r.tau0.is_none()),
            r.events,
            r.legal_updates
        );
    }
    out
}

/// The box `[-(width-1), 0] × [-⌊(height-1)/2⌋, ⌈(height-1)/2⌉]`: the origin
/// sits at the middle of the rightmost column.
pub fn kcm_box(width: u32, height: u32) -> Result<Region> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyRegion);
    }
    let low = (height as i64 - 1) / 2;
    Region::rectangle(Site::new(-(width as i64 - 1), -low), width, height)
}

/// Frozen boundary that keeps the finite chain ergodic: empty left wall for
/// `east1d`, empty left and bottom walls for `east2d`, and an empty frame on
/// `∂Λ` for `duarte`. Other families get an all-infected outside.
pub fn default_exterior(family: &UpdateFamily, region: &Region) -> Exterior {
    let (lo, _) = region.bounding_box();
    match family.name() {
        "east1d" => Exterior::Boundary(BoundaryCondition::from_fn(region, |_, k| {
            u8::from(!k.parallel)
        })),
        "east2d" => Exterior::Boundary(BoundaryCondition::from_fn(region, |s, k| {
            u8::from(!(k.parallel || s.y < lo.y))
        })),
        "duarte" => Exterior::Boundary(BoundaryCondition::uniform(region, 0)),
        _ => Exterior::AllInfected,
    }
}
