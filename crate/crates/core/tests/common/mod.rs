//! Randomized instance checks shared by the lemma tests and the acceptance runner.
//! Each check returns `Err` with a description of the first violation.
#![allow(dead_code)]

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::sync::Arc;

use kcm_lab::bootstrap::{closure_free, closure_region, duarte_path_exists, is_duarte_path, synchronous_step};
use kcm_lab::duarte::{event_b2, run_on_bits, Arrow, ArrowProfile, ColumnGeometry};
use kcm_lab::rng::{stream_rng, StreamRng};
use kcm_lab::testing::{random_boundary, random_family, random_region};
use kcm_lab::{BoundaryCondition, Configuration, Exterior, InfectionSet, Region, Site, UpdateFamily};
use rand::Rng;

pub type Check<T = ()> = Result<T, String>;

pub fn duarte() -> UpdateFamily {
    UpdateFamily::builtin("duarte").unwrap()
}

fn bernoulli_sites(rng: &mut StreamRng, sites: impl IntoIterator<Item = Site>, q: f64) -> InfectionSet {
    sites.into_iter().filter(|_| rng.random::<f64>() < q).collect()
}

fn rectangle_sites(x0: i64, x1: i64, y0: i64, y1: i64) -> impl Iterator<Item = Site> {
    (x0..=x1).flat_map(move |x| (y0..=y1).map(move |y| Site::new(x, y)))
}

fn free_closure(y: &InfectionSet) -> Check<InfectionSet> {
    let r = closure_free(&duarte(), y, 64).map_err(|e| e.to_string())?;
    if r.touched_cap {
        return Err("free closure reached the window cap".into());
    }
    Ok(r.closed)
}

fn region_closure(region: &Region, exterior: &Exterior, y: &InfectionSet) -> InfectionSet {
    closure_region(&duarte(), region, exterior, y).unwrap().closed
}

// ---------------------------------------------------------------- closures

/// Queue closure against iterated synchronous steps on a random instance:
/// one of four families, a box of side at most 32, a random exterior.
pub fn closure_oracle(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 1);
    let family = match rng.random_range(0..4) {
        0 => UpdateFamily::builtin("east1d").unwrap(),
        1 => UpdateFamily::builtin("east2d").unwrap(),
        2 => duarte(),
        _ => random_family(&mut rng, 2),
    };
    let (w, h) = (rng.random_range(1..=32u32), rng.random_range(1..=32u32));
    let region = Region::rectangle(Site::new(-(w as i64) / 2, -(h as i64) / 2), w, h).unwrap();
    let exterior = match rng.random_range(0..4) {
        0 => Exterior::AllHealthy,
        1 => Exterior::AllInfected,
        _ => Exterior::Boundary(random_boundary(&region, rng.random_range(0.2..0.9), seed)),
    };
    let q = [0.1, 0.3, 0.5][rng.random_range(0..3)];
    let y = bernoulli_sites(&mut rng, region.sites().iter().copied(), q);
    let fast = closure_region(&family, &region, &exterior, &y).map_err(|e| e.to_string())?;
    let mut cur = y;
    let mut rounds = 0;
    loop {
        let next = synchronous_step(&family, &region, &exterior, &cur).map_err(|e| e.to_string())?;
        if next == cur {
            break;
        }
        cur = next;
        rounds += 1;
    }
    if fast.closed != cur {
        return Err(format!("seed {seed}: closures differ ({} vs {} sites)", fast.closed.len(), cur.len()));
    }
    if fast.rounds != rounds {
        return Err(format!("seed {seed}: {} rounds vs {rounds}", fast.rounds));
    }
    Ok(())
}

// ---------------------------------------------------------------- screening

/// A staircase `S = {(i, b_i)}`, seeds `Y ⊇ S` and `Y'` agreeing with `Y`
/// off the screened side, and the free closures compared on the other side.
/// With `rising` the staircase is nondecreasing and the sides swap.
pub fn screening(seed: u64, rising: bool) -> Check {
    let mut rng = stream_rng(seed, 2);
    let n = rng.random_range(1..=8i64);
    let mut b = vec![rng.random_range(-4..=4i64)];
    for _ in 1..n {
        let step = rng.random_range(0..=2);
        let last = *b.last().unwrap();
        b.push(if rising { last + step } else { last - step });
    }
    let height = |i: i64| b[(i - 1) as usize];
    let in_cols = |s: &Site| (1..=n).contains(&s.x);
    // sites the two seeds may disagree on, and the sites compared
    let free_side = |s: &Site| in_cols(s) && if rising { s.y < height(s.x) } else { s.y > height(s.x) };
    let far_side = |s: &Site| in_cols(s) && if rising { s.y > height(s.x) } else { s.y < height(s.x) };
    let stair: InfectionSet = (1..=n).map(|i| Site::new(i, height(i))).collect();

    let window: Vec<Site> = rectangle_sites(-3, n + 3, -12, 12).collect();
    let q = rng.random_range(0.05..0.35);
    let mut y = bernoulli_sites(&mut rng, window.iter().copied(), q);
    y.extend(&stair);
    let q2 = rng.random_range(0.0..0.6);
    let mut y2: InfectionSet = y.iter().copied().filter(|s| !free_side(s)).collect();
    y2.extend(bernoulli_sites(&mut rng, window.iter().copied().filter(|s| free_side(s)), q2));

    let a: BTreeSet<Site> = free_closure(&y)?.into_iter().filter(|s| far_side(s)).collect();
    let c: BTreeSet<Site> = free_closure(&y2)?.into_iter().filter(|s| far_side(s)).collect();
    if a != c {
        let diff: Vec<_> = a.symmetric_difference(&c).take(4).collect();
        return Err(format!("seed {seed}: closures differ behind the staircase {b:?} at {diff:?}"));
    }
    Ok(())
}

// ---------------------------------------------------------------- monotonicity

/// (A): raising the boundary condition shrinks the closure.
pub fn monotone_boundary(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 3);
    let pieces = rng.random_range(1..=3);
    let region = random_region(&mut rng, 6, pieces);
    let p = rng.random_range(0.1..0.9);
    let extra = rng.random_range(0.0..0.8);
    let mut values = Vec::new();
    let tau = BoundaryCondition::from_fn(&region, |_, _| {
        let v = u8::from(rng.random::<f64>() < p);
        values.push(v);
        v
    });
    let mut k = 0;
    let tau_hi = BoundaryCondition::from_fn(&region, |_, _| {
        k += 1;
        values[k - 1].max(u8::from(rng.random::<f64>() < extra))
    });
    if !tau.le(&tau_hi) {
        return Err(format!("seed {seed}: generated τ ≰ τ'"));
    }
    let q = rng.random_range(0.05..0.4);
    let y = bernoulli_sites(&mut rng, region.sites().iter().copied(), q);
    let lo = region_closure(&region, &Exterior::Boundary(tau), &y);
    let hi = region_closure(&region, &Exterior::Boundary(tau_hi), &y);
    if !hi.is_subset(&lo) {
        return Err(format!("seed {seed}: [Y]^τ' ⊄ [Y]^τ"));
    }
    Ok(())
}

/// A random nonempty subregion of `outer`: a rectangle cut or a site thinning.
fn subregion(rng: &mut StreamRng, outer: &Region) -> Region {
    loop {
        let sites: Vec<Site> = if rng.random_bool(0.5) {
            let (lo, hi) = outer.bounding_box();
            let x0 = rng.random_range(lo.x..=hi.x);
            let x1 = rng.random_range(x0..=hi.x);
            let y0 = rng.random_range(lo.y..=hi.y);
            let y1 = rng.random_range(y0..=hi.y);
            outer
                .sites()
                .iter()
                .copied()
                .filter(|s| (x0..=x1).contains(&s.x) && (y0..=y1).contains(&s.y))
                .collect()
        } else {
            let keep = rng.random_range(0.3..0.95);
            outer.sites().iter().copied().filter(|_| rng.random::<f64>() < keep).collect()
        };
        if !sites.is_empty() {
            return Region::from_sites(sites).unwrap();
        }
    }
}

/// (B): infected boundaries favour the smaller region, healthy ones the larger.
pub fn monotone_restriction(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 4);
    let pieces = rng.random_range(1..=3);
    let outer = random_region(&mut rng, 6, pieces);
    let inner = subregion(&mut rng, &outer);
    let q = rng.random_range(0.05..0.4);
    let y_outer = bernoulli_sites(&mut rng, outer.sites().iter().copied(), q);
    let y_inner: InfectionSet = y_outer.iter().copied().filter(|&s| inner.contains(s)).collect();
    for value in [0u8, 1] {
        let ext = |r: &Region| Exterior::Boundary(BoundaryCondition::uniform(r, value));
        let big: InfectionSet = region_closure(&outer, &ext(&outer), &y_outer)
            .into_iter()
            .filter(|&s| inner.contains(s))
            .collect();
        let small = region_closure(&inner, &ext(&inner), &y_inner);
        let ok = if value == 0 { big.is_subset(&small) } else { small.is_subset(&big) };
        if !ok {
            return Err(format!("seed {seed}: inclusion fails with τ ≡ {value}"));
        }
    }
    Ok(())
}

/// (C): with `∂_⊥Λ ⊆ ∂_⊥Λ'` and the `1,0` condition on both regions.
/// `Λ'` is a run of columns, each one or two vertical segments; `Λ` keeps
/// a random nonempty set of whole segments.
pub fn monotone_columns(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 5);
    let x0 = rng.random_range(-4..=0i64);
    let width = rng.random_range(1..=8i64);
    let mut segments = Vec::new();
    for x in x0..x0 + width {
        let lo = rng.random_range(-6..=0i64);
        let hi = rng.random_range(lo..=lo + 6);
        segments.push((x, lo, hi));
        if rng.random_bool(0.4) {
            let lo2 = hi + rng.random_range(2..=3);
            segments.push((x, lo2, lo2 + rng.random_range(0..=3)));
        }
    }
    let kept: Vec<(i64, i64, i64)> = loop {
        let k: Vec<_> = segments.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        if !k.is_empty() {
            break k;
        }
    };
    let outer = Region::from_columns(segments).unwrap();
    let inner = Region::from_columns(kept).unwrap();
    let (bo, bi) = (outer.boundaries(), inner.boundaries());
    if !bi.perpendicular.is_subset(&bo.perpendicular) {
        return Err(format!("seed {seed}: generated regions break ∂_⊥Λ ⊆ ∂_⊥Λ'"));
    }
    let q = rng.random_range(0.05..0.4);
    let y_outer = bernoulli_sites(&mut rng, outer.sites().iter().copied(), q);
    let y_inner: InfectionSet = y_outer.iter().copied().filter(|&s| inner.contains(s)).collect();
    let split = |r: &Region| Exterior::Boundary(BoundaryCondition::split(r, 1, 0));
    let small = region_closure(&inner, &split(&inner), &y_inner);
    let big = region_closure(&outer, &split(&outer), &y_outer);
    if !small.iter().all(|s| big.contains(s)) {
        return Err(format!("seed {seed}: [Y'∩Λ]_Λ ⊄ [Y']_Λ' ∩ Λ"));
    }
    Ok(())
}

// ---------------------------------------------------------------- propagation

fn check_interval(closed: &InfectionSet, path: &[Site], seed: u64) -> Check {
    let (start, end) = (path[0], *path.last().unwrap());
    let missing = (start.x..=end.x).map(|x| Site::new(x, start.y)).find(|s| !closed.contains(s));
    match missing {
        Some(s) => Err(format!("seed {seed}: I_Γ from {start:?} to column {} misses {s:?}", end.x)),
        None => Ok(()),
    }
}

/// A random Duarte path planted in a noisy seed: its horizontal interval
/// must be in the closure.
pub fn planted_path(seed: u64) -> Check {
    let mut rng = stream_rng(seed, 6);
    let mut path = vec![Site::new(rng.random_range(-6..=0), rng.random_range(-4..=4))];
    for _ in 0..rng.random_range(1..=20) {
        let s = *path.last().unwrap();
        let next = match rng.random_range(0..10) {
            0..=3 => s.offset(1, 0),
            4..=6 => s.offset(0, 1),
            _ => s.offset(0, -1),
        };
        path.push(next);
    }
    if !is_duarte_path(&path) {
        return Err(format!("seed {seed}: generator produced a non-Duarte path"));
    }
    let q = rng.random_range(0.0..0.15);
    let mut y = bernoulli_sites(&mut rng, rectangle_sites(-10, 18, -14, 14), q);
    y.extend(&path);
    let closed = free_closure(&y)?;
    check_interval(&closed, &path, seed)
}

/// A Duarte path found by search inside the closure of a random seed.
/// Returns whether a path was found.
pub fn discovered_path(seed: u64) -> Check<bool> {
    let mut rng = stream_rng(seed, 7);
    let q = rng.random_range(0.1..0.4);
    let y = bernoulli_sites(&mut rng, rectangle_sites(-8, 8, -8, 8), q);
    let closed = free_closure(&y)?;
    let Some(lo) = closed.iter().map(|s| s.x).min() else {
        return Ok(false);
    };
    let hi = closed.iter().map(|s| s.x).max().unwrap();
    let from = rng.random_range(lo..=hi);
    let to = rng.random_range(from..=hi);
    match duarte_path_exists(&closed, from, to) {
        Some(path) => {
            if !path.iter().all(|s| closed.contains(s)) || !is_duarte_path(&path) {
                return Err(format!("seed {seed}: search returned an invalid witness"));
            }
            check_interval(&closed, &path, seed)?;
            Ok(true)
        }
        None => Ok(false),
    }
}

// ---------------------------------------------------------------- droplets

pub fn random_omega(geom: &ColumnGeometry, q: f64, seed: u64) -> Vec<u8> {
    let mut rng = stream_rng(seed, 0);
    (0..geom.region().len())
        .map(|_| u8::from(rng.random::<f64>() >= q))
        .collect()
}

pub fn flipped(bits: &[u8], i: usize) -> Vec<u8> {
    let mut b = bits.to_vec();
    b[i] ^= 1;
    b
}

pub fn column_of_index(geom: &ColumnGeometry, i: usize) -> usize {
    (1..=geom.n()).find(|&c| geom.column_range(c).contains(&i)).unwrap()
}

/// Disjoint droplets, one per up arrow, and the internal consistency flags.
pub fn profile_structure(n: usize, ell: usize, q: f64, seed: u64) -> Check {
    let g = ColumnGeometry::new(n).unwrap();
    let p = run_on_bits(&g, &random_omega(&g, q, seed), ell).unwrap();
    for (a, d) in p.droplets.iter().enumerate() {
        for e in &p.droplets[a + 1..] {
            if !(d.k < e.xi || e.k < d.xi) {
                return Err(format!("N={n} ℓ={ell} seed {seed}: {d:?} meets {e:?}"));
            }
        }
    }
    if p.droplets.len() != p.n_up() {
        return Err(format!("N={n} ℓ={ell} seed {seed}: droplet count"));
    }
    if !p.restriction_identity {
        return Err(format!("N={n} ℓ={ell} seed {seed}: restriction identity fails"));
    }
    if !p.xi_search_agrees {
        return Err(format!("N={n} ℓ={ell} seed {seed}: ξ search disagrees"));
    }
    Ok(())
}

/// Indices of sites whose constraint holds under the healthy-wall,
/// infected-cap condition, through the generic constraint check.
pub fn unconstrained_sites(geom: &ColumnGeometry, bits: &[u8]) -> Vec<usize> {
    let family = duarte();
    let region: Arc<_> = geom.region().clone();
    let tau = BoundaryCondition::split(&region, 1, 0);
    let config = Configuration::new(region.clone(), bits.to_vec(), Exterior::Boundary(tau)).unwrap();
    (0..region.len())
        .filter(|&i| config.constraint_satisfied(&family, region.sites()[i]).unwrap())
        .collect()
}

/// An unconstrained flip in column `j` only changes `Φ` if `Φ_{j−1} = ↑`.
/// Returns `(flips, flips that changed Φ)`.
pub fn east_motion_flips(seed: u64, flips: usize) -> Check<(usize, usize)> {
    let mut rng = stream_rng(seed, 0);
    let (mut checked, mut changed) = (0, 0);
    let mut trial = 0u64;
    while checked < flips {
        trial += 1;
        let n = rng.random_range(2..=8);
        let ell = rng.random_range(1..=4);
        let q = rng.random_range(0.01..0.25);
        let g = ColumnGeometry::new(n).unwrap();
        let omega = random_omega(&g, q, trial);
        let free = unconstrained_sites(&g, &omega);
        if free.is_empty() {
            continue;
        }
        let x = free[rng.random_range(0..free.len())];
        let before = run_on_bits(&g, &omega, ell).unwrap();
        let after = run_on_bits(&g, &flipped(&omega, x), ell).unwrap();
        checked += 1;
        if before.phi != after.phi {
            changed += 1;
            let j = column_of_index(&g, x);
            if j == 1 || before.phi[j - 2] != Arrow::Up {
                return Err(format!("trial {trial}: flip in column {j} changed Φ without ↑ to its left"));
            }
        }
    }
    Ok((checked, changed))
}

fn lost_arrows(g: &ColumnGeometry, omega: &[u8], before: &ArrowProfile, x: usize, ell: usize) -> Check<usize> {
    let j = column_of_index(g, x);
    let after = run_on_bits(g, &flipped(omega, x), ell).unwrap();
    let mut qualifying = 0;
    for d in &before.droplets {
        let i = d.k;
        if i <= j || after.phi[i - 1] != Arrow::Down || d.contains_column(j) {
            continue;
        }
        qualifying += 1;
        let witness = (d.xi..i).any(|k| after.phi[k - 1] == Arrow::Up && before.phi[k - 1] == Arrow::Down);
        if !witness {
            return Err(format!("lost ↑ at {i} (droplet {d:?}) after a flip in column {j} has no replacement"));
        }
    }
    Ok(qualifying)
}

/// A flip left of a droplet that removes its arrow creates a new arrow
/// inside the droplet. Seeds flips left of multi-column droplets until
/// `target` instances qualify. Returns `(qualifying, configurations)`.
pub fn east_motion_replacements(seed: u64, target: usize) -> Check<(usize, u64)> {
    let mut rng = stream_rng(seed, 0);
    let mut qualifying = 0;
    let mut trial = 0u64;
    while qualifying < target {
        trial += 1;
        if trial >= 200_000 {
            return Err(format!("only {qualifying} qualifying instances in {trial} configurations"));
        }
        let n = rng.random_range(3..=8);
        let ell = rng.random_range(2..=4);
        let q = rng.random_range(0.05..0.3);
        let g = ColumnGeometry::new(n).unwrap();
        let omega = random_omega(&g, q, trial);
        let before = run_on_bits(&g, &omega, ell).unwrap();
        let Some(d) = before.droplets.iter().find(|d| d.range > 0 && d.xi > 1) else {
            continue;
        };
        for _ in 0..20 {
            let c = rng.random_range(1..d.xi);
            let r = g.column_range(c);
            let x = rng.random_range(r.start..r.end);
            qualifying += lost_arrows(&g, &omega, &before, x, ell)?;
        }
    }
    Ok((qualifying, trial))
}

/// A droplet of range `r` forces `B₂(n₂)` for every `2 ≤ n₂ ≤ r`.
/// Returns the number of `(ω, n₂)` pairs checked.
pub fn range_implies_b2(seed: u64, configurations: u64) -> Check<usize> {
    let mut rng = stream_rng(seed, 0);
    let mut found = 0;
    for trial in 0..configurations {
        let n = rng.random_range(3..=10);
        let ell = rng.random_range(2..=4);
        let q = rng.random_range(0.02..0.3);
        let g = ColumnGeometry::new(n).unwrap();
        let omega = random_omega(&g, q, trial);
        let p = run_on_bits(&g, &omega, ell).unwrap();
        let r = p.max_range();
        for n2 in 2..=r {
            found += 1;
            if event_b2(&omega, &p, &g, n2).is_none() {
                return Err(format!("trial {trial}: range {r} but B₂({n2}) fails"));
            }
        }
    }
    Ok(found)
}

// ---------------------------------------------------------------- reachability

/// Legal-path reachability by plain search over sets of empty sites, each
/// flip tested through `Configuration::constraint_satisfied`.
pub fn brute_force_reach(
    family: &UpdateFamily,
    region: &Arc<Region>,
    exterior: &Exterior,
    cap: usize,
) -> (HashSet<BTreeSet<Site>>, bool) {
    let start = BTreeSet::new();
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    let mut origin_hit = false;
    while let Some(empties) = queue.pop_front() {
        let config = Configuration::with_empties(region.clone(), empties.iter().copied(), exterior.clone()).unwrap();
        for &x in region.sites() {
            if !config.constraint_satisfied(family, x).unwrap() {
                continue;
            }
            let mut next = empties.clone();
            if !next.remove(&x) {
                if next.len() == cap {
                    continue;
                }
                next.insert(x);
            }
            origin_hit |= next.contains(&Site::ORIGIN);
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    (seen, origin_hit)
}
