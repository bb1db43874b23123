//! U-bootstrap percolation: synchronous steps, closures in finite volume
//! and on Z², infectability, Duarte paths and the median infection time.
//!
//! Infected means empty (`0`). In finite volume only sites of the region
//! update; every other site keeps the value given by the exterior policy,
//! so a boundary condition `τ` acts as a time-invariant set of infected
//! sites on `∂Λ`.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::lattice::{sample_bernoulli, Configuration, Exterior, Region, Site};
use crate::stats::{censored_median, censored_quantile};

/// A set of infected sites.
pub type InfectionSet = BTreeSet<Site>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ClosureResult {
    pub closed: InfectionSet,
    /// Synchronous steps until the fixed point.
    pub rounds: u32,
    /// Only set by [`closure_free`]: the window reached its cap while the
    /// infection could still grow, so `closed` is a lower bound.
    pub touched_cap: bool,
}

/// Dense padded grid holding the current infection, with rule offsets
/// resolved to linear indices.
struct Grid {
    min: Site,
    width: usize,
    height: usize,
    in_region: Vec<bool>,
    infected: Vec<bool>,
    rules: Vec<Vec<isize>>,
    /// Offsets `-d` for `d` in some rule: the sites whose constraint can
    /// change when a given site is infected.
    dependents: Vec<isize>,
    region_cells: Vec<usize>,
}

impl Grid {
    fn new(family: &UpdateFamily, region: &Region, exterior: &Exterior) -> Result<Self> {
        exterior.check(region)?;
        let pad = family.reach().max(1);
        let (lo, hi) = region.bounding_box();
        let min = lo.offset(-pad, -pad);
        let width = (hi.x - lo.x + 1 + 2 * pad) as usize;
        let height = (hi.y - lo.y + 1 + 2 * pad) as usize;
        let area = width
            .checked_mul(height)
            .filter(|&a| a <= 1 << 28)
            .ok_or_else(|| Error::InvalidParameter("closure window too large".into()))?;
        let mut in_region = vec![false; area];
        let mut infected = vec![false; area];
        for row in 0..height {
            for col in 0..width {
                let s = min.offset(col as i64, row as i64);
                infected[row * width + col] = !region.contains(s) && exterior.value(s) == 0;
            }
        }
        let mut region_cells = Vec::with_capacity(region.len());
        for &s in region.sites() {
            let c = ((s.y - min.y) as usize) * width + (s.x - min.x) as usize;
            in_region[c] = true;
            region_cells.push(c);
        }
        let w = width as isize;
        let rules: Vec<Vec<isize>> = family
            .rules()
            .iter()
            .map(|r| r.iter().map(|d| d.y as isize * w + d.x as isize).collect())
            .collect();
        let mut dependents: Vec<isize> = rules.iter().flatten().map(|&o| -o).collect();
        dependents.sort_unstable();
        dependents.dedup();
        Ok(Grid {
            min,
            width,
            height,
            in_region,
            infected,
            rules,
            dependents,
            region_cells,
        })
    }

    fn cell(&self, s: Site) -> Option<usize> {
        let (dx, dy) = (s.x - self.min.x, s.y - self.min.y);
        (dx >= 0 && dy >= 0 && (dx as usize) < self.width && (dy as usize) < self.height)
            .then(|| dy as usize * self.width + dx as usize)
    }

    fn site(&self, c: usize) -> Site {
        self.min
            .offset((c % self.width) as i64, (c / self.width) as i64)
    }

    fn infect(&mut self, s: Site) -> Result<()> {
        match self.cell(s) {
            Some(c) if self.in_region[c] => {
                self.infected[c] = true;
                Ok(())
            }
            _ => Err(Error::SiteOutsideRegion(s)),
        }
    }

    fn fires(&self, c: usize) -> bool {
        self.rules.iter().any(|rule| {
            rule.iter()
                .all(|&o| self.infected[(c as isize + o) as usize])
        })
    }

    /// Runs synchronous rounds to the fixed point, or until `target` is
    /// infected. Returns the number of rounds that infected something.
    fn run(&mut self, target: Option<usize>) -> u32 {
        if target.is_some_and(|t| self.infected[t]) {
            return 0;
        }
        let mut stamp = vec![0u32; self.infected.len()];
        let mut candidates = self.region_cells.clone();
        let mut rounds = 0u32;
        loop {
            let fresh: Vec<usize> = candidates
                .iter()
                .copied()
                .filter(|&c| !self.infected[c] && self.fires(c))
                .collect();
            if fresh.is_empty() {
                return rounds;
            }
            rounds += 1;
            for &c in &fresh {
                self.infected[c] = true;
            }
            if target.is_some_and(|t| self.infected[t]) {
                return rounds;
            }
            candidates.clear();
            for &c in &fresh {
                for &o in &self.dependents {
                    let x = (c as isize + o) as usize;
                    if self.in_region[x] && !self.infected[x] && stamp[x] != rounds {
                        stamp[x] = rounds;
                        candidates.push(x);
                    }
                }
            }
        }
    }

    fn infected_region_sites(&self) -> InfectionSet {
        self.region_cells
            .iter()
            .filter(|&&c| self.infected[c])
            .map(|&c| self.site(c))
            .collect()
    }
}

fn check_seed(region: &Region, y: &InfectionSet) -> Result<()> {
    match y.iter().find(|s| !region.contains(**s)) {
        Some(&s) => Err(Error::SiteOutsideRegion(s)),
        None => Ok(()),
    }
}

/// One synchronous step in `region`, by a full scan. This is the reference
/// semantics for the queue-based closure.
pub fn synchronous_step(
    family: &UpdateFamily,
    region: &Region,
    exterior: &Exterior,
    y: &InfectionSet,
) -> Result<InfectionSet> {
    exterior.check(region)?;
    check_seed(region, y)?;
    let infected = |s: Site| {
        if region.contains(s) {
            y.contains(&s)
        } else {
            exterior.value(s) == 0
        }
    };
    let mut next = y.clone();
    for &x in region.sites() {
        if !y.contains(&x)
            && family
                .rules()
                .iter()
                .any(|rule| rule.iter().all(|&d| infected(x + d)))
        {
            next.insert(x);
        }
    }
    Ok(next)
}

/// `[Y]_Λ^τ`: the least fixed point above `y` of the bootstrap dynamics in
/// `region`, where the exterior supplies `τ` (or an all-healthy or
/// all-infected outside).
pub fn closure_region(
    family: &UpdateFamily,
    region: &Region,
    exterior: &Exterior,
    y: &InfectionSet,
) -> Result<ClosureResult> {
    check_seed(region, y)?;
    let mut grid = Grid::new(family, region, exterior)?;
    for &s in y {
        grid.infect(s)?;
    }
    let rounds = grid.run(None);
    Ok(ClosureResult {
        closed: grid.infected_region_sites(),
        rounds,
        touched_cap: false,
    })
}

/// `[Y]` on Z² with a healthy outside, computed in the square window
/// `[-R, R]²` for growing `R ≤ cap`.
pub fn closure_free(family: &UpdateFamily, y: &InfectionSet, cap: u32) -> Result<ClosureResult> {
    if y.is_empty() {
        return Ok(ClosureResult {
            closed: InfectionSet::new(),
            rounds: 0,
            touched_cap: false,
        });
    }
    let radius = y.iter().map(|s| s.x.abs().max(s.y.abs())).max().unwrap_or(0);
    if radius > cap as i64 {
        return Err(Error::InvalidParameter(format!(
            "seed radius {radius} exceeds window cap {cap}"
        )));
    }
    let reach = family.reach().max(1);
    let mut r = (radius + 2 * reach).max(8).min(cap as i64);
    loop {
        let window = Region::centered_square(r as u32)?;
        let result = closure_region(family, &window, &Exterior::AllHealthy, y)?;
        let touches = result
            .closed
            .iter()
            .any(|s| r - s.x.abs().max(s.y.abs()) < reach);
        if !touches {
            return Ok(result);
        }
        if r >= cap as i64 {
            return Ok(ClosureResult {
                touched_cap: true,
                ..result
            });
        }
        r = (2 * r).min(cap as i64);
    }
}

/// Whether every site of `sites` lies in the closure of the empty sites of
/// `config` under its exterior. Sites of `sites` on `∂Λ` count as infected
/// iff the exterior sets them to `0`.
pub fn is_infectable(
    family: &UpdateFamily,
    sites: &[Site],
    config: &Configuration,
) -> Result<bool> {
    let region = config.region();
    let boundary = region.boundaries().union();
    if let Some(&s) = sites
        .iter()
        .find(|s| !region.contains(**s) && !boundary.contains(s))
    {
        return Err(Error::SiteOutsideRegion(s));
    }
    let closed = closure_region(family, region, config.exterior(), &config.empty_sites())?.closed;
    Ok(sites.iter().all(|&s| {
        if region.contains(s) {
            closed.contains(&s)
        } else {
            config.exterior().value(s) == 0
        }
    }))
}

/// Breadth-first search inside `closed` for a path with steps `+e₁, +e₂,
/// −e₂` from a site in column `from_x` to a site in column `to_x`, never
/// leaving the columns `≤ to_x`. Returns a shortest witness.
pub fn duarte_path_exists(closed: &InfectionSet, from_x: i64, to_x: i64) -> Option<Vec<Site>> {
    if from_x > to_x {
        return None;
    }
    const STEPS: [(i64, i64); 3] = [(1, 0), (0, 1), (0, -1)];
    let mut parent: HashMap<Site, Option<Site>> = HashMap::new();
    let mut queue = VecDeque::new();
    for &s in closed.range(Site::new(from_x, i64::MIN)..=Site::new(from_x, i64::MAX)) {
        parent.insert(s, None);
        queue.push_back(s);
    }
    while let Some(s) = queue.pop_front() {
        if s.x == to_x {
            let mut path = vec![s];
            let mut cur = s;
            while let Some(Some(prev)) = parent.get(&cur) {
                path.push(*prev);
                cur = *prev;
            }
            path.reverse();
            return Some(path);
        }
        for (dx, dy) in STEPS {
            let t = s.offset(dx, dy);
            if t.x <= to_x && closed.contains(&t) && !parent.contains_key(&t) {
                parent.insert(t, Some(s));
                queue.push_back(t);
            }
        }
    }
    None
}

/// Whether consecutive sites of `path` differ by `+e₁` or `±e₂`.
pub fn is_duarte_path(path: &[Site]) -> bool {
    path.windows(2).all(|w| {
        let d = w[1] - w[0];
        matches!((d.x, d.y), (1, 0) | (0, 1) | (0, -1))
    })
}

/// Sorted `x,y` lines.
pub fn dump_closure(set: &InfectionSet) -> String {
    set.iter().map(|s| format!("{},{}\n", s.x, s.y)).collect()
}

/// Reads `x,y` lines; blank lines, `#` comments and an `x,y` header are skipped.
pub fn parse_sites(text: &str) -> Result<InfectionSet> {
    let mut out = InfectionSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [x, y] => x.parse::<i64>().ok().zip(y.parse::<i64>().ok()),
            _ => None,
        };
        let (x, y) = parsed.ok_or_else(|| Error::Parse(format!("line {}: expected x,y", i + 1)))?;
        out.insert(Site::new(x, y));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BootstrapTimeSummary {
    /// Per-trial infection times of the origin, `None` when censored.
    pub times: Vec<Option<u64>>,
    pub median: Option<u64>,
    pub lower_quartile: Option<u64>,
    pub upper_quartile: Option<u64>,
    pub censored: usize,
}

/// Synchronous steps until the origin is infected, starting from a
/// Bernoulli(`q`) infection of `[-half, half]²` with a healthy outside.
/// Trial `t` uses the stream `(seed, t)`. A trial that reaches a fixed
/// point first is censored.
pub fn bootstrap_time_trial(
    family: &UpdateFamily,
    region: &Arc<Region>,
    q: f64,
    seed: u64,
    trial: u64,
) -> Result<Option<u64>> {
    let config = sample_bernoulli(region.clone(), q, seed, trial, Exterior::AllHealthy)?;
    let mut grid = Grid::new(family, region, &Exterior::AllHealthy)?;
    for (&s, &b) in region.sites().iter().zip(config.bits()) {
        if b == 0 {
            grid.infect(s)?;
        }
    }
    let origin = grid.cell(Site::ORIGIN).expect("window contains the origin");
    let rounds = grid.run(Some(origin));
    Ok(grid.infected[origin].then_some(rounds as u64))
}

pub fn median_bootstrap_time(
    family: &UpdateFamily,
    q: f64,
    half: u32,
    trials: usize,
    seed: u64,
) -> Result<BootstrapTimeSummary> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::Probability(q));
    }
    if trials == 0 || half == 0 {
        return Err(Error::InvalidParameter("trials and box must be at least 1".into()));
    }
    let region = Arc::new(Region::centered_square(half)?);
    let times = (0..trials as u64)
        .into_par_iter()
        .map(|t| bootstrap_time_trial(family, &region, q, seed, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapTimeSummary {
        median: censored_median(&times),
        lower_quartile: censored_quantile(&times, 0.25),
        upper_quartile: censored_quantile(&times, 0.75),
        censored: times.iter().filter(|t| t.is_none()).count(),
        times,
    })
}
