//! Random instance generators shared by the property tests, the acceptance
//! suite and the benchmarks.

use rand::Rng;

use crate::family::UpdateFamily;
use crate::lattice::{BoundaryCondition, Region, Site};
use crate::rng::stream_rng;

/// A family of `rules` rules, each with one to three sites in `[-2, 2]²`.
pub fn random_family<R: Rng>(rng: &mut R, rules: usize) -> UpdateFamily {
    let rules = (0..rules.max(1))
        .map(|_| {
            let size = rng.random_range(1..=3);
            (0..size)
                .map(|_| loop {
                    let s = Site::new(rng.random_range(-2..=2), rng.random_range(-2..=2));
                    if s != Site::ORIGIN {
                        break s;
                    }
                })
                .collect()
        })
        .collect();
    UpdateFamily::new("random", rules).expect("generated rules are valid")
}

/// Boundary condition with each site healthy with probability `healthy`.
pub fn random_boundary(region: &Region, healthy: f64, seed: u64) -> BoundaryCondition {
    let mut rng = stream_rng(seed, 0xb0);
    BoundaryCondition::from_fn(region, |_, _| u8::from(rng.random::<f64>() < healthy))
}

/// A random finite region: a union of `pieces` rectangles inside `[-half, half]²`.
pub fn random_region<R: Rng>(rng: &mut R, half: i64, pieces: usize) -> Region {
    let mut sites = Vec::new();
    for _ in 0..pieces.max(1) {
        let x0 = rng.random_range(-half..=half);
        let y0 = rng.random_range(-half..=half);
        let x1 = rng.random_range(x0..=half);
        let y1 = rng.random_range(y0..=half);
        for x in x0..=x1 {
            for y in y0..=y1 {
                sites.push(Site::new(x, y));
            }
        }
    }
    Region::from_sites(sites).expect("nonempty")
}
