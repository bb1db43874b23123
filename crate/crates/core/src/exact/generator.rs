use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::kcm::Constraints;
use crate::lattice::{Exterior, Region, Site};

/// Default cap on the number of states for generator work.
pub const GENERATOR_CAP: usize = 1 << 14;

/// A configuration of a region with at most 32 sites, as a bit mask with
/// bit `i` equal to the value of the `i`-th region site.
pub type State = u32;

/// Enumerated states with a two-way index.
#[derive(Debug, Clone)]
pub struct StateSpace {
    n_sites: usize,
    states: Vec<State>,
    /// `None` when `states` is the full cube listed in order.
    index: Option<HashMap<State, u32>>,
}

impl StateSpace {
    pub fn full(n_sites: usize, cap: usize) -> Result<Self> {
        if n_sites >= 32 || (1usize << n_sites) > cap {
            return Err(Error::StateSpaceOverflow(n_sites));
        }
        Ok(StateSpace {
            n_sites,
            states: (0..(1u32 << n_sites)).collect(),
            index: None,
        })
    }

    pub fn from_states(n_sites: usize, states: Vec<State>) -> Self {
        let index = states
            .iter()
            .enumerate()
            .map(|(i, &s)| (s, i as u32))
            .collect();
        StateSpace {
            n_sites,
            states,
            index: Some(index),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> State {
        self.states[i]
    }

    pub fn index_of(&self, s: State) -> Option<usize> {
        match &self.index {
            None => ((s as usize) < self.states.len()).then_some(s as usize),
            Some(map) => map.get(&s).map(|&i| i as usize),
        }
    }

    /// All sites occupied.
    pub fn all_occupied(&self) -> State {
        if self.n_sites == 32 {
            u32::MAX
        } else {
            (1u32 << self.n_sites) - 1
        }
    }
}

/// Sparse KCM generator on an enumerated state space.
///
/// The off-diagonal entry for `ω → ω^x` is `c_x(ω)` times `q` when `ω_x = 1`
/// and `p` when `ω_x = 0`; the diagonal makes rows sum to zero. `μ` is the
/// product measure restricted to the state space and renormalised.
#[derive(Debug, Clone)]
pub struct GeneratorOperator {
    space: StateSpace,
    q: f64,
    origin: Option<usize>,
    /// Per-site masks: `c_x(ω)` holds iff `ω & mask == 0` for some mask.
    masks: Vec<Vec<State>>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    out_rate: Vec<f64>,
    mu: Vec<f64>,
}

fn site_masks(family: &UpdateFamily, region: &Region, exterior: &Exterior) -> Vec<Vec<State>> {
    let c = Constraints::new(family, region, exterior);
    (0..region.len())
        .map(|x| {
            c.rules_of(x)
                .map(|members| members.iter().fold(0u32, |m, &i| m | (1 << i)))
                .collect()
        })
        .collect()
}

impl GeneratorOperator {
    /// Generator on the full cube `{0,1}^Λ`.
    pub fn build(
        family: &UpdateFamily,
        region: &Region,
        exterior: &Exterior,
        q: f64,
        cap: usize,
    ) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Probability(q));
        }
        exterior.check(region)?;
        let space = StateSpace::full(region.len(), cap)?;
        let masks = site_masks(family, region, exterior);
        let origin = region.index_of(Site::ORIGIN);
        Ok(Self::assemble(space, q, origin, masks))
    }

    fn assemble(space: StateSpace, q: f64, origin: Option<usize>, masks: Vec<Vec<State>>) -> Self {
        let p = 1.0 - q;
        let n = space.n_sites();
        let mut row_start = Vec::with_capacity(space.len() + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut out_rate = Vec::with_capacity(space.len());
        let mut mu = Vec::with_capacity(space.len());
        row_start.push(0);
        for &s in space.states() {
            let mut total = 0.0;
            for (x, site_masks) in masks.iter().enumerate() {
                if !site_masks.iter().any(|&m| s & m == 0) {
                    continue;
                }
                let t = s ^ (1 << x);
                if let Some(j) = space.index_of(t) {
                    let rate = if s >> x & 1 == 1 { q } else { p };
                    cols.push(j as u32);
                    rates.push(rate);
                    total += rate;
                }
            }
            row_start.push(cols.len());
            out_rate.push(total);
            let ones = s.count_ones() as i32;
            mu.push(p.powi(ones) * q.powi(n as i32 - ones));
        }
        let z: f64 = mu.iter().sum();
        mu.iter_mut().for_each(|m| *m /= z);
        GeneratorOperator {
            space,
            q,
            origin,
            masks,
            row_start,
            cols,
            rates,
            out_rate,
            mu,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.len()
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Index of the origin among the region sites, if present.
    pub fn origin(&self) -> Option<usize> {
        self.origin
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// `c_x(ω)`.
    pub fn constraint(&self, s: State, x: usize) -> bool {
        self.masks[x].iter().any(|&m| s & m == 0)
    }

    /// Off-diagonal entries `(j, L(i, j))` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_start[i]..self.row_start[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.rates[r])
            .map(|(&j, &rate)| (j as usize, rate))
    }

    /// `L(i, i)`.
    pub fn diagonal(&self, i: usize) -> f64 {
        -self.out_rate[i]
    }

    pub fn out_rate(&self, i: usize) -> f64 {
        self.out_rate[i]
    }

    /// `(Lf)(i)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| self.row(i).map(|(j, r)| r * (f[j] - f[i])).sum())
            .collect()
    }

    /// Dense copy of `L`, for small oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut m = vec![vec![0.0; n]; n];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = self.diagonal(i);
            for (j, r) in self.row(i) {
                row[j] += r;
            }
        }
        m
    }

    /// Connected components of the transition graph. Flips are reversible,
    /// so these are the communicating classes.
    pub fn components(&self) -> Vec<usize> {
        let mut label = vec![usize::MAX; self.dim()];
        let mut next = 0;
        for start in 0..self.dim() {
            if label[start] != usize::MAX {
                continue;
            }
            label[start] = next;
            let mut queue = VecDeque::from([start]);
            while let Some(i) = queue.pop_front() {
                for (j, _) in self.row(i) {
                    if label[j] == usize::MAX {
                        label[j] = next;
                        queue.push_back(j);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn component_count(&self) -> usize {
        self.components().into_iter().max().map_or(0, |m| m + 1)
    }

    /// The restriction to the communicating class of the all-occupied state.
    pub fn ergodic_component(&self) -> Self {
        let start = self
            .space
            .index_of(self.space.all_occupied())
            .expect("all-occupied state is enumerated");
        let label = self.components();
        let states: Vec<State> = (0..self.dim())
            .filter(|&i| label[i] == label[start])
            .map(|i| self.space.state(i))
            .collect();
        let space = StateSpace::from_states(self.space.n_sites(), states);
        Self::assemble(space, self.q, self.origin, self.masks.clone())
    }

    /// Largest violation of `μ(i)L(i,j) = μ(j)L(j,i)`, relative to the entries.
    pub fn detailed_balance_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, r) in self.row(i) {
                let back = self.row(j).find(|&(k, _)| k == i).map_or(0.0, |(_, r)| r);
                let (a, b) = (self.mu[i] * r, self.mu[j] * back);
                worst = worst.max((a - b).abs() / a.max(b));
            }
        }
        worst
    }
}
