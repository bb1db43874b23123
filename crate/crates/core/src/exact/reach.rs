//! Reachability under legal flips with a cap on the number of empty sites.

use std::collections::{HashSet, VecDeque};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::kcm::Constraints;
use crate::lattice::{BoundaryCondition, Exterior, Region, Site};

/// Default budget on visited states.
pub const REACH_BUDGET: usize = 1 << 20;

/// A state with few empties: sorted indices of the empty region sites.
type Zeros = Vec<u32>;

/// Breadth-first search over legal single-site flips, starting from the
/// all-occupied state and visiting only states with at most `cap` empties.
struct CappedSearch<'a> {
    constraints: &'a Constraints,
    /// Sites whose constraint involves site `i`.
    watchers: Vec<Vec<u32>>,
    /// Sites with an always-satisfied rule.
    free: Vec<u32>,
}

impl<'a> CappedSearch<'a> {
    fn new(constraints: &'a Constraints) -> Self {
        let n = constraints.len();
        let mut watchers = vec![Vec::new(); n];
        let mut free = Vec::new();
        for x in 0..n {
            for members in constraints.rules_of(x) {
                if members.is_empty() {
                    free.push(x as u32);
                }
                for &m in members {
                    watchers[m as usize].push(x as u32);
                }
            }
        }
        for w in &mut watchers {
            w.sort_unstable();
            w.dedup();
        }
        free.dedup();
        CappedSearch {
            constraints,
            watchers,
            free,
        }
    }

    fn satisfied(&self, zeros: &Zeros, x: u32, scratch: &mut [u8]) -> bool {
        for &z in zeros {
            scratch[z as usize] = 0;
        }
        let ok = self.constraints.satisfied(scratch, x as usize);
        for &z in zeros {
            scratch[z as usize] = 1;
        }
        ok
    }

    /// Legal neighbours of `zeros` within the cap.
    fn neighbours(&self, zeros: &Zeros, cap: usize, scratch: &mut [u8]) -> Vec<Zeros> {
        let mut out = Vec::new();
        for (k, &z) in zeros.iter().enumerate() {
            if self.satisfied(zeros, z, scratch) {
                let mut next = zeros.clone();
                next.remove(k);
                out.push(next);
            }
        }
        if zeros.len() < cap {
            let mut candidates: Vec<u32> = self.free.clone();
            for &z in zeros {
                candidates.extend(&self.watchers[z as usize]);
            }
            candidates.sort_unstable();
            candidates.dedup();
            for x in candidates {
                if zeros.binary_search(&x).is_err() && self.satisfied(zeros, x, scratch) {
                    let mut next = zeros.clone();
                    let pos = next.binary_search(&x).unwrap_err();
                    next.insert(pos, x);
                    out.push(next);
                }
            }
        }
        out
    }

    /// Explores the reachable states. Reports whether `target` is ever
    /// emptied, stopping there when `stop` is set.
    fn run(&self, cap: usize, target: Option<u32>, stop: bool, budget: usize) -> Result<(bool, usize)> {
        let mut scratch = vec![1u8; self.constraints.len()];
        let mut seen: HashSet<Zeros> = HashSet::from([Vec::new()]);
        let mut queue = VecDeque::from([Vec::new()]);
        let mut hit = false;
        while let Some(z) = queue.pop_front() {
            for next in self.neighbours(&z, cap, &mut scratch) {
                if seen.contains(&next) {
                    continue;
                }
                if target.is_some_and(|t| next.binary_search(&t).is_ok()) {
                    hit = true;
                    if stop {
                        return Ok((true, seen.len() + 1));
                    }
                }
                seen.insert(next.clone());
                if seen.len() > budget {
                    return Err(Error::BudgetExhausted(budget));
                }
                queue.push_back(next);
            }
        }
        Ok((hit, seen.len()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BarrierReport {
    pub ell: u32,
    /// Smallest cap on simultaneous empties that lets site `ℓ` be emptied.
    pub barrier: u32,
    pub states_explored: usize,
}

/// East chain `1..=ℓ` with site `0` frozen empty: the least `k` such that a
/// legal path from all-occupied empties site `ℓ` never having more than `k`
/// empties at once.
pub fn east_barrier(ell: u32, budget: usize) -> Result<BarrierReport> {
    if ell == 0 {
        return Err(Error::InvalidParameter("chain length must be at least 1".into()));
    }
    let family = UpdateFamily::builtin("east1d")?;
    let region = Region::rectangle(Site::new(1, 0), ell, 1)?;
    // site 0 is the only boundary zero
    let exterior = Exterior::Boundary(BoundaryCondition::from_fn(&region, |s, _| {
        u8::from(s != Site::new(0, 0))
    }));
    let constraints = Constraints::new(&family, &region, &exterior);
    let search = CappedSearch::new(&constraints);
    let target = (ell - 1) as u32;
    let mut explored = 0;
    for cap in 1..=ell {
        let (hit, n) = search.run(cap as usize, Some(target), true, budget)?;
        explored += n;
        if hit {
            return Ok(BarrierReport {
                ell,
                barrier: cap,
                states_explored: explored,
            });
        }
    }
    unreachable!("with cap ℓ every site can be emptied")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AnReport {
    pub n: u32,
    pub kappa: u32,
    /// Side `κn2ⁿ + 1` of the centred square.
    pub side: u64,
    pub origin_infectable: bool,
    pub reachable_states: usize,
}

/// The square of side `κn2ⁿ + 1` centred at the origin.
pub fn an_region(n: u32, kappa: u32) -> Result<Region> {
    if n == 0 || kappa == 0 || n > 20 {
        return Err(Error::InvalidParameter(format!("n = {n}, kappa = {kappa}")));
    }
    let half = kappa as u64 * n as u64 * (1u64 << (n - 1));
    if half > 1 << 12 {
        return Err(Error::InvalidParameter(format!("side {} too large", 2 * half + 1)));
    }
    Region::centered_square(half as u32)
}

/// Exhaustive search from the all-occupied state of `Λ_n` (infected
/// outside) over legal flips through states with at most `n − 1` empties.
pub fn an_reachability(family: &UpdateFamily, n: u32, kappa: u32, budget: usize) -> Result<AnReport> {
    let region = an_region(n, kappa)?;
    let constraints = Constraints::new(family, &region, &Exterior::AllInfected);
    let origin = region.index_of(Site::ORIGIN).expect("centred square") as u32;
    let search = CappedSearch::new(&constraints);
    let (hit, total) = search.run(n as usize - 1, Some(origin), false, budget)?;
    Ok(AnReport {
        n,
        kappa,
        side: (region.bounding_box().1.x - region.bounding_box().0.x + 1) as u64,
        origin_infectable: hit,
        reachable_states: total,
    })
}

/// Empty-set reachability in a generic region: every state reachable from
/// all-occupied with at most `cap` empties, as sorted lists of empty sites.
pub fn reachable_states(
    family: &UpdateFamily,
    region: &Region,
    exterior: &Exterior,
    cap: usize,
    budget: usize,
) -> Result<Vec<Vec<Site>>> {
    let constraints = Constraints::new(family, region, exterior);
    let search = CappedSearch::new(&constraints);
    let mut scratch = vec![1u8; constraints.len()];
    let mut seen: HashSet<Zeros> = HashSet::from([Vec::new()]);
    let mut queue = VecDeque::from([Vec::new()]);
    while let Some(z) = queue.pop_front() {
        for next in search.neighbours(&z, cap, &mut scratch) {
            if seen.insert(next.clone()) {
                if seen.len() > budget {
                    return Err(Error::BudgetExhausted(budget));
                }
                queue.push_back(next);
            }
        }
    }
    let mut out: Vec<Vec<Site>> = seen
        .into_iter()
        .map(|z| z.iter().map(|&i| region.sites()[i as usize]).collect())
        .collect();
    out.sort();
    Ok(out)
}
