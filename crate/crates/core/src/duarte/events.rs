//! The events `B₁`, `B₂`, the block projection `η` and the coarse East path.

use std::collections::VecDeque;

use serde::Serialize;

use super::algorithm::{column_closure, AlgoState, Arrow, ArrowProfile};
use super::geometry::ColumnGeometry;
use super::scales::DuarteScales;
use crate::error::{Error, Result};
use crate::lattice::Site;

/// `B₁(n) = {N_↑ ≥ n}`.
pub fn event_b1(profile: &ArrowProfile, n: usize) -> bool {
    profile.n_up() >= n
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct B2Witness {
    pub i: usize,
    pub j: usize,
    /// A Duarte path from `C_i` to `C_j` inside `[Y(ω) ∩ V_{i,j}]^{1,0}`.
    pub path: Vec<Site>,
}

/// First `(i, j)` in lexicographic order with `i < j`, `j − i ≥ n − 1`,
/// `Φ_k = ↓` on `[i, j]` and a Duarte path from `C_i` to `C_j` in the
/// closure of the empties of `ω` in `V_{i,j}` under `τ_∥ ≡ 1, τ_⊥ ≡ 0`.
pub fn event_b2(omega: &[u8], profile: &ArrowProfile, geom: &ColumnGeometry, n: usize) -> Option<B2Witness> {
    let big_n = geom.n();
    let psi0 = AlgoState::initial(geom, omega.to_vec());
    let min_gap = n.saturating_sub(1).max(1);
    for i in 1..=big_n {
        if i + min_gap > big_n {
            break;
        }
        if profile.phi[i - 1] == Arrow::Up {
            continue;
        }
        // the last j with Φ ↓ on [i, j]
        let last = (i..=big_n).take_while(|&k| profile.phi[k - 1] == Arrow::Down).last().unwrap();
        if last < i + min_gap {
            continue;
        }
        // columns right of j do not influence V_{i,j}, so one closure serves every j
        let closed = column_closure(geom, &psi0, i, last);
        let search = PathSearch::run(geom, i, &closed);
        for j in i + min_gap..=last {
            if let Some(path) = search.path_to(j) {
                return Some(B2Witness { i, j, path });
            }
        }
    }
    None
}

/// Breadth-first search through infected sites with steps `+e₁, ±e₂`,
/// started from every infected site of the first column.
struct PathSearch<'a> {
    geom: &'a ColumnGeometry,
    first: usize,
    /// Predecessor of each reached cell, `Some(None)` for sources.
    parent: Vec<Vec<Option<Option<(usize, usize)>>>>,
}

impl<'a> PathSearch<'a> {
    fn run(geom: &'a ColumnGeometry, first: usize, closed: &[Vec<bool>]) -> Self {
        let mut parent: Vec<Vec<Option<Option<(usize, usize)>>>> =
            closed.iter().map(|c| vec![None; c.len()]).collect();
        let mut queue = VecDeque::new();
        for (t, &b) in closed[0].iter().enumerate() {
            if b {
                parent[0][t] = Some(None);
                queue.push_back((0, t));
            }
        }
        while let Some((c, t)) = queue.pop_front() {
            let mut next = Vec::with_capacity(3);
            if t > 0 {
                next.push((c, t - 1));
            }
            if t + 1 < closed[c].len() {
                next.push((c, t + 1));
            }
            if c + 1 < closed.len() {
                // the next column is shorter by N on each side
                let shift = geom.n();
                if t >= shift && t - shift < closed[c + 1].len() {
                    next.push((c + 1, t - shift));
                }
            }
            for (c2, t2) in next {
                if closed[c2][t2] && parent[c2][t2].is_none() {
                    parent[c2][t2] = Some(Some((c, t)));
                    queue.push_back((c2, t2));
                }
            }
        }
        PathSearch { geom, first, parent }
    }

    fn site(&self, c: usize, t: usize) -> Site {
        let col = self.first + c;
        Site::new(self.geom.column_x(col), t as i64 - (self.geom.height(col) - 1))
    }

    fn path_to(&self, j: usize) -> Option<Vec<Site>> {
        let c = j - self.first;
        let t = self.parent[c].iter().position(Option::is_some)?;
        let mut path = vec![self.site(c, t)];
        let mut at = (c, t);
        while let Some(Some(prev)) = self.parent[at.0][at.1] {
            path.push(self.site(prev.0, prev.1));
            at = prev;
        }
        path.reverse();
        Some(path)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoarseProfile {
    pub eta: Vec<u8>,
    /// The last block is shorter than `m`.
    pub padded: bool,
}

impl CoarseProfile {
    pub fn ones(&self) -> usize {
        self.eta.iter().filter(|&&v| v == 1).count()
    }
}

/// Block-wise OR of the arrows over consecutive blocks of `m` columns.
pub fn eta_blocks(phi: &[Arrow], m: usize) -> Result<CoarseProfile> {
    if m == 0 {
        return Err(Error::InvalidParameter("block size must be positive".into()));
    }
    Ok(CoarseProfile {
        eta: phi.chunks(m).map(|b| u8::from(b.contains(&Arrow::Up))).collect(),
        padded: phi.len() % m != 0,
    })
}

pub fn eta_project(profile: &ArrowProfile, scales: &DuarteScales) -> Result<CoarseProfile> {
    let m = usize::try_from(scales.m).map_err(|_| Error::InvalidParameter("block size too large".into()))?;
    eta_blocks(&profile.phi, m)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PathViolation {
    /// Index of the offending profile in the sequence.
    pub step: usize,
    /// Which of the three properties fails.
    pub property: u8,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoarsePathReport {
    /// Starts at `η ≡ 0` and ends with `η_M = 1`.
    pub endpoints: bool,
    /// At most `n₁` ones throughout.
    pub capped: bool,
    /// Single East-legal flips.
    pub east_legal: bool,
    pub violations: Vec<PathViolation>,
}

impl CoarsePathReport {
    pub fn passes(&self) -> bool {
        self.endpoints && self.capped && self.east_legal
    }
}

/// Checks the three properties of a coarse path in `{0,1}^M`.
pub fn validate_coarse_path(path: &[Vec<u8>], n1: usize) -> CoarsePathReport {
    let mut violations = Vec::new();
    let mut flag = |step: usize, property: u8, detail: String| {
        violations.push(PathViolation { step, property, detail });
    };
    match (path.first(), path.last()) {
        (Some(first), Some(last)) => {
            if first.iter().any(|&v| v != 0) {
                flag(0, 1, "initial profile is not identically 0".into());
            }
            if last.last() != Some(&1) {
                flag(path.len() - 1, 1, "final profile has η_M = 0".into());
            }
        }
        _ => flag(0, 1, "empty path".into()),
    }
    for (step, eta) in path.iter().enumerate() {
        let ones = eta.iter().filter(|&&v| v == 1).count();
        if ones > n1 {
            flag(step, 2, format!("{ones} ones exceed n₁ = {n1}"));
        }
    }
    for (step, w) in path.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if a.len() != b.len() {
            flag(step + 1, 3, "profiles of different length".into());
            continue;
        }
        let diff: Vec<usize> = (0..a.len()).filter(|&i| a[i] != b[i]).collect();
        match diff.as_slice() {
            [i] => {
                if *i > 0 && a[i - 1] != 1 {
                    flag(step + 1, 3, format!("flip at {} with η_{} = 0", i + 1, i));
                }
            }
            d => flag(step + 1, 3, format!("{} coordinates change", d.len())),
        }
    }
    let has = |p: u8| violations.iter().any(|v| v.property == p);
    CoarsePathReport {
        endpoints: !has(1),
        capped: !has(2),
        east_legal: !has(3),
        violations,
    }
}
