//! The column-by-column droplet algorithm and the arrow profile `Φ`.

use serde::Serialize;

use super::geometry::ColumnGeometry;
use crate::error::{Error, Result};
use crate::lattice::{Configuration, Site};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Arrow {
    #[serde(rename = "U")]
    Up,
    #[serde(rename = "D")]
    Down,
}

impl Arrow {
    pub fn symbol(self) -> char {
        match self {
            Arrow::Up => 'U',
            Arrow::Down => 'D',
        }
    }
}

/// `ψ = (ω, τ)` on `V̄`. `τ_∥ ≡ 1` is implicit; `τ_⊥` lives on the caps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AlgoState {
    /// `ω` indexed like the sites of `V`.
    pub omega: Vec<u8>,
    /// `τ` on `∂_⊥C_i` as `[bottom, top]`, one entry per column.
    pub caps: Vec<[u8; 2]>,
    /// Healed column ranges `(ξ_k, k)` in order.
    pub healed: Vec<(usize, usize)>,
}

impl AlgoState {
    /// `ψ^{(0)}`: `ω` with `τ_⊥ ≡ 0`.
    pub fn initial(geom: &ColumnGeometry, omega: Vec<u8>) -> Self {
        AlgoState {
            omega,
            caps: vec![[0, 0]; geom.n()],
            healed: Vec::new(),
        }
    }

    fn heal(&mut self, geom: &ColumnGeometry, from: usize, to: usize) {
        for c in from..=to {
            for v in &mut self.omega[geom.column_range(c)] {
                *v = 1;
            }
            self.caps[c - 1] = [1, 1];
        }
        self.healed.push((from, to));
    }

    /// Whether `ψ` and `other` agree on `C̄_c`.
    fn column_agrees(&self, other: &AlgoState, geom: &ColumnGeometry, c: usize) -> bool {
        let r = geom.column_range(c);
        self.omega[r.clone()] == other.omega[r] && self.caps[c - 1] == other.caps[c - 1]
    }
}

/// A droplet `D_k = C̄_{ξ_k} ∪ … ∪ C̄_k` with range `r_k = k − ξ_k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DropletRecord {
    pub k: usize,
    pub xi: usize,
    pub range: usize,
}

impl DropletRecord {
    pub fn contains_column(&self, c: usize) -> bool {
        (self.xi..=self.k).contains(&c)
    }

    pub fn contains_site(&self, geom: &ColumnGeometry, s: Site) -> bool {
        geom.column_of(s).is_some_and(|c| self.contains_column(c))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ArrowProfile {
    pub phi: Vec<Arrow>,
    pub droplets: Vec<DropletRecord>,
    /// Binary search for `ξ_k` agreed with the linear scan at every `↑`.
    pub xi_search_agrees: bool,
    /// `ψ^{(j)}` equalled `ψ^{(0)}` off the droplets at every step.
    pub restriction_identity: bool,
    /// `ψ^{(N)}`.
    #[serde(skip)]
    pub state: AlgoState,
}

impl ArrowProfile {
    /// `N_↑`.
    pub fn n_up(&self) -> usize {
        self.phi.iter().filter(|&&a| a == Arrow::Up).count()
    }

    /// `Φ` as a string of `U`/`D`.
    pub fn phi_string(&self) -> String {
        self.phi.iter().map(|a| a.symbol()).collect()
    }

    /// `D_k`, if `Φ_k = ↑`.
    pub fn droplet(&self, k: usize) -> Option<&DropletRecord> {
        self.droplets.iter().find(|d| d.k == k)
    }

    /// `r_k`, zero when `Φ_k = ↓`.
    pub fn range(&self, k: usize) -> usize {
        self.droplet(k).map_or(0, |d| d.range)
    }

    pub fn max_range(&self) -> usize {
        self.droplets.iter().map(|d| d.range).max().unwrap_or(0)
    }
}

/// Closure under the Duarte rule of the empties of `ψ` in `V_{from,to}`,
/// with the wall left of `C_from` healthy and the caps as in `ψ`.
/// Returns one infection mask per column, indexed by height from the bottom.
///
/// Each column only sees itself and its left neighbour, so the columns are
/// closed one at a time from left to right.
pub fn column_closure(geom: &ColumnGeometry, psi: &AlgoState, from: usize, to: usize) -> Vec<Vec<bool>> {
    let mut out: Vec<Vec<bool>> = Vec::with_capacity(to + 1 - from);
    for c in from..=to {
        let init: Vec<bool> = psi.omega[geom.column_range(c)].iter().map(|&v| v == 0).collect();
        let [bottom, top] = psi.caps[c - 1];
        let col = close_column(init, bottom == 0, top == 0, out.last().map(Vec::as_slice));
        out.push(col);
    }
    out
}

/// Fixed point of "two of N, S, W infected" within one column.
fn close_column(mut inf: Vec<bool>, bottom: bool, top: bool, left: Option<&[bool]>) -> Vec<bool> {
    let len = inf.len();
    let offset = left.map_or(0, |l| (l.len() - len) / 2);
    let west = |t: usize| left.is_some_and(|l| l[t + offset]);
    let fires = |inf: &[bool], t: usize| {
        let s = if t == 0 { bottom } else { inf[t - 1] };
        let n = if t + 1 == len { top } else { inf[t + 1] };
        (n && s) || (west(t) && (n || s))
    };
    loop {
        let mut changed = false;
        for t in (0..len).chain((0..len).rev()) {
            if !inf[t] && fires(&inf, t) {
                inf[t] = true;
                changed = true;
            }
        }
        if !changed {
            return inf;
        }
    }
}

/// Whether a mask has a run of at least `ell` consecutive infected sites.
fn has_run(col: &[bool], ell: usize) -> bool {
    let mut run = 0;
    for &b in col {
        run = if b { run + 1 } else { 0 };
        if run >= ell {
            return true;
        }
    }
    false
}

/// Maximal infected vertical runs of a column mask as `(first, last)` heights.
pub fn vertical_runs(geom: &ColumnGeometry, c: usize, col: &[bool]) -> Vec<(i64, i64)> {
    let base = -(geom.height(c) - 1);
    let mut runs = Vec::new();
    let mut start = None;
    for (t, &b) in col.iter().chain([&false]).enumerate() {
        match (b, start) {
            (true, None) => start = Some(t),
            (false, Some(s)) => {
                runs.push((base + s as i64, base + t as i64 - 1));
                start = None;
            }
            _ => {}
        }
    }
    runs
}

/// `C̄_k` holds an interval of length `≥ ℓ` infectable from the empties of
/// `ψ` after deleting those in `C̄_1 … C̄_{ξ−1}`.
fn infectable_after_removal(geom: &ColumnGeometry, psi: &AlgoState, xi: usize, k: usize, ell: usize) -> bool {
    // deleted columns are all healthy and stay so, like the wall
    let cl = column_closure(geom, psi, xi, k);
    has_run(cl.last().unwrap(), ell)
}

/// Runs the algorithm on `ω` given as values on the sites of `V`.
pub fn run_on_bits(geom: &ColumnGeometry, omega: &[u8], ell: usize) -> Result<ArrowProfile> {
    if ell == 0 {
        return Err(Error::InvalidParameter("droplet length ℓ must be at least 1".into()));
    }
    if omega.len() != geom.region().len() {
        return Err(Error::ConfigurationLength {
            expected: geom.region().len(),
            got: omega.len(),
        });
    }
    let n = geom.n();
    let psi0 = AlgoState::initial(geom, omega.to_vec());
    let mut psi = psi0.clone();
    let mut phi = Vec::with_capacity(n);
    let mut droplets: Vec<DropletRecord> = Vec::new();
    let mut xi_search_agrees = true;
    let mut restriction_identity = true;
    for k in 1..=n {
        if !infectable_after_removal(geom, &psi, 1, k, ell) {
            phi.push(Arrow::Down);
            continue;
        }
        let holds: Vec<bool> = (1..=k).map(|xi| infectable_after_removal(geom, &psi, xi, k, ell)).collect();
        let linear = holds.iter().rposition(|&h| h).unwrap() + 1;
        // largest ξ with the property, assuming it fails from some point on
        let (mut lo, mut hi) = (1, k + 1);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if infectable_after_removal(geom, &psi, mid, k, ell) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let monotone = holds.windows(2).all(|w| w[0] || !w[1]);
        xi_search_agrees &= monotone && lo == linear;
        let xi = linear;
        psi.heal(geom, xi, k);
        phi.push(Arrow::Up);
        droplets.push(DropletRecord { k, xi, range: k - xi });
        restriction_identity &= (1..=n)
            .filter(|&c| !droplets.iter().any(|d| d.contains_column(c)))
            .all(|c| psi.column_agrees(&psi0, geom, c));
    }
    debug_assert!(xi_search_agrees && restriction_identity);
    Ok(ArrowProfile {
        phi,
        droplets,
        xi_search_agrees,
        restriction_identity,
        state: psi,
    })
}

/// Runs the algorithm on a configuration of `V`. The exterior of `ω` is
/// ignored: the initial boundary is always `τ_⊥ ≡ 0`, `τ_∥ ≡ 1`.
pub fn run_droplet_algorithm(omega: &Configuration, geom: &ColumnGeometry, ell: usize) -> Result<ArrowProfile> {
    if omega.region().as_ref() != geom.region().as_ref() {
        return Err(Error::InvalidParameter(format!(
            "configuration is not defined on V for N = {}",
            geom.n()
        )));
    }
    run_on_bits(geom, omega.bits(), ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bootstrap::{closure_region, InfectionSet};
    use crate::family::UpdateFamily;
    use crate::lattice::{BoundaryCondition, Exterior, Region};
    use crate::rng::stream_rng;
    use rand::Rng;

    fn empty_on(geom: &ColumnGeometry, cols: &[usize]) -> Vec<u8> {
        let mut bits = vec![1u8; geom.region().len()];
        for &c in cols {
            for v in &mut bits[geom.column_range(c)] {
                *v = 0;
            }
        }
        bits
    }

    #[test]
    fn all_occupied_is_all_down() {
        let g = ColumnGeometry::new(4).unwrap();
        let p = run_on_bits(&g, &vec![1; g.region().len()], 1).unwrap();
        assert_eq!(p.phi_string(), "DDDD");
        assert!(p.droplets.is_empty());
        assert_eq!(p.max_range(), 0);
    }

    #[test]
    fn empty_first_column() {
        let g = ColumnGeometry::new(3).unwrap();
        let bits = empty_on(&g, &[1]);
        for ell in [1, 5, g.column_len(1)] {
            let p = run_on_bits(&g, &bits, ell).unwrap();
            assert_eq!(p.phi[0], Arrow::Up);
            assert_eq!(p.droplets[0], DropletRecord { k: 1, xi: 1, range: 0 });
            assert!(p.state.omega[g.column_range(1)].iter().all(|&v| v == 1));
            assert_eq!(p.state.caps[0], [1, 1]);
        }
        // a column run can never exceed the column
        let p = run_on_bits(&g, &bits, g.column_len(1) + 1).unwrap();
        assert_eq!(p.phi[0], Arrow::Down);
    }

    #[test]
    fn empty_second_column() {
        let g = ColumnGeometry::new(3).unwrap();
        let bits = empty_on(&g, &[2]);
        let p = run_on_bits(&g, &bits, 3).unwrap();
        assert_eq!(p.phi_string(), "DUD");
        assert_eq!(p.droplets, vec![DropletRecord { k: 2, xi: 2, range: 0 }]);
    }

    #[test]
    fn infection_carried_across_columns() {
        // a run of 6 in column 1 lifts two empties of column 2, together with
        // the infected bottom cap, to a run of 8
        let g = ColumnGeometry::new(3).unwrap();
        let mut bits = vec![1u8; g.region().len()];
        let v = g.region();
        for y in -3..=2 {
            bits[v.index_of(Site::new(-2, y)).unwrap()] = 0;
        }
        for y in [-4, -3] {
            bits[v.index_of(Site::new(-1, y)).unwrap()] = 0;
        }
        let p = run_on_bits(&g, &bits, 7).unwrap();
        assert_eq!(p.phi_string(), "DUD");
        assert_eq!(p.droplets, vec![DropletRecord { k: 2, xi: 1, range: 1 }]);
        assert!(p.state.omega.iter().all(|&b| b == 1));
        let p = run_on_bits(&g, &bits, 6).unwrap();
        assert_eq!(p.phi_string(), "UDD");
        let p = run_on_bits(&g, &bits, 8).unwrap();
        assert_eq!(p.phi_string(), "DUD");
        let p = run_on_bits(&g, &bits, 9).unwrap();
        assert_eq!(p.phi_string(), "DDD");
    }

    #[test]
    fn runs_report_heights() {
        let g = ColumnGeometry::new(2).unwrap();
        let col = vec![true, true, false, false, true, false, true];
        assert_eq!(vertical_runs(&g, 1, &col), vec![(-3, -2), (1, 1), (3, 3)]);
        assert!(has_run(&col, 2) && !has_run(&col, 3));
    }

    #[test]
    fn column_closure_matches_generic_engine() {
        let family = UpdateFamily::builtin("duarte").unwrap();
        let mut rng = stream_rng(11, 0);
        for trial in 0..40 {
            let n = 2 + trial % 4;
            let g = ColumnGeometry::new(n).unwrap();
            let q = rng.random_range(0.05..0.5);
            let omega: Vec<u8> = (0..g.region().len()).map(|_| u8::from(rng.random::<f64>() >= q)).collect();
            let mut psi = AlgoState::initial(&g, omega);
            for c in 1..=n {
                psi.caps[c - 1] = [rng.random_range(0..2), rng.random_range(0..2)];
            }
            let from = 1 + rng.random_range(0..n);
            let to = from + rng.random_range(0..=n - from);
            let fast = column_closure(&g, &psi, from, to);

            let sub = g.sub_region(from, to).unwrap();
            let tau = BoundaryCondition::from_fn(&sub, |s, kind| {
                if kind.perpendicular {
                    let c = g.column_of(s).unwrap();
                    psi.caps[c - 1][usize::from(s.y > 0)]
                } else {
                    1
                }
            });
            let y: InfectionSet = sub
                .sites()
                .iter()
                .copied()
                .filter(|&s| psi.omega[g.region().index_of(s).unwrap()] == 0)
                .collect();
            let sub_arc = std::sync::Arc::new(sub);
            let slow = closure_region(&family, &sub_arc, &Exterior::Boundary(tau), &y).unwrap().closed;
            let mut expected = InfectionSet::new();
            for (c, col) in (from..=to).zip(&fast) {
                for (site, &b) in g.column_sites(c).into_iter().zip(col) {
                    if b {
                        expected.insert(site);
                    }
                }
            }
            assert_eq!(slow, expected, "trial {trial}");
        }
    }

    #[test]
    fn rejects_foreign_configurations() {
        let g = ColumnGeometry::new(2).unwrap();
        let other = std::sync::Arc::new(Region::centered_square(1).unwrap());
        let c = Configuration::filled(other, 1, Exterior::AllHealthy).unwrap();
        assert!(run_droplet_algorithm(&c, &g, 1).is_err());
        assert!(run_on_bits(&g, &[1, 1], 1).is_err());
        assert!(run_on_bits(&g, &vec![1; 10], 0).is_err());
    }
}
