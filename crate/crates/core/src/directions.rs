//! Stable directions of an update family and the supercritical/rooted
//! classification.
//!
//! A unit direction `u` is stable when the half-plane `{x : ⟨x,u⟩ < 0}` is
//! closed under the bootstrap dynamics, which happens iff every rule has a
//! site `x` with `⟨x,u⟩ ≥ 0`. Signs of `⟨x,u⟩` only change at directions
//! perpendicular to rule sites, so the circle splits into finitely many
//! critical points and open arcs on which stability is constant. Every
//! comparison below is an integer cross or dot product.

use std::cmp::Ordering;
use std::fmt;

use serde::Serialize;

use crate::family::UpdateFamily;
use crate::lattice::Site;

/// A direction of S¹ represented by a primitive integer vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(into = "(i64, i64)")]
pub struct Direction {
    pub x: i64,
    pub y: i64,
}

impl From<Direction> for (i64, i64) {
    fn from(d: Direction) -> Self {
        (d.x, d.y)
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

impl Direction {
    /// Reduces `(x, y)` to a primitive vector. Returns `None` for zero.
    pub fn new(x: i64, y: i64) -> Option<Self> {
        let g = gcd(x, y);
        (g != 0).then(|| Direction { x: x / g, y: y / g })
    }

    pub fn opposite(self) -> Self {
        Direction {
            x: -self.x,
            y: -self.y,
        }
    }

    fn cross(self, other: Direction) -> i128 {
        self.x as i128 * other.y as i128 - self.y as i128 * other.x as i128
    }

    /// 0 for angles in `[0, π)`, 1 for `[π, 2π)`.
    fn half(self) -> u8 {
        u8::from(!(self.y > 0 || (self.y == 0 && self.x > 0)))
    }

    /// Counterclockwise angular order starting at angle 0.
    pub fn angle_cmp(self, other: Direction) -> Ordering {
        self.half()
            .cmp(&other.half())
            .then_with(|| 0.cmp(&self.cross(other)))
    }

    /// Counterclockwise order of `a` and `b` as seen from `self`.
    fn rel_cmp(self, a: Direction, b: Direction) -> Ordering {
        let wrap = |d: Direction| u8::from(d.angle_cmp(self) == Ordering::Less);
        wrap(a).cmp(&wrap(b)).then_with(|| a.angle_cmp(b))
    }

    /// Whether `p` lies in the closed half-circle running ccw from `self` to `-self`.
    fn semicircle_contains(self, p: Direction) -> bool {
        self.cross(p) >= 0
    }
}

/// Dot-product stability test for an arbitrary integer direction.
pub fn is_stable(family: &UpdateFamily, ux: i64, uy: i64) -> bool {
    family
        .rules()
        .iter()
        .all(|rule| rule.iter().any(|s| s.x * ux + s.y * uy >= 0))
}

/// A closed arc running counterclockwise from `from` to `to`. A single
/// direction has `from == to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct StableArc {
    pub from: Direction,
    pub to: Direction,
}

impl StableArc {
    pub fn is_point(&self) -> bool {
        self.from == self.to
    }

    pub fn contains(&self, u: Direction) -> bool {
        u == self.from || self.from.rel_cmp(u, self.to) != Ordering::Greater
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    SupercriticalRooted,
    SupercriticalUnrooted,
    NotSupercritical,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StableDirectionReport {
    /// Disjoint closed arcs sorted by the angle of `from`.
    pub arcs: Vec<StableArc>,
    /// Every direction is stable; `arcs` is then empty.
    pub full_circle: bool,
    pub classification: Classification,
}

impl StableDirectionReport {
    pub fn contains(&self, u: Direction) -> bool {
        self.full_circle || self.arcs.iter().any(|a| a.contains(u))
    }

    /// Stable directions whose neighbourhood is entirely unstable.
    pub fn isolated(&self) -> Vec<Direction> {
        self.arcs.iter().filter(|a| a.is_point()).map(|a| a.from).collect()
    }
}

fn perpendiculars(family: &UpdateFamily) -> Vec<Direction> {
    let mut dirs: Vec<Direction> = family
        .rules()
        .iter()
        .flatten()
        .flat_map(|s: &Site| {
            [Direction::new(-s.y, s.x), Direction::new(s.y, -s.x)]
        })
        .flatten()
        .collect();
    dirs.sort_by(|a, b| a.angle_cmp(*b));
    dirs.dedup();
    dirs
}

/// A direction strictly inside the open ccw arc from `a` to the next critical `b`.
fn interior(a: Direction, b: Direction) -> (i64, i64) {
    if a != b && a.cross(b) > 0 {
        (a.x + b.x, a.y + b.y)
    } else {
        (-a.y, a.x)
    }
}

pub fn stable_directions(family: &UpdateFamily) -> StableDirectionReport {
    let critical = perpendiculars(family);
    let n = critical.len();
    // element 2i is critical[i], element 2i+1 the open arc after it
    let mut stable = Vec::with_capacity(2 * n);
    for i in 0..n {
        let c = critical[i];
        stable.push(is_stable(family, c.x, c.y));
        let (ix, iy) = interior(c, critical[(i + 1) % n]);
        stable.push(is_stable(family, ix, iy));
    }

    let arcs = if stable.iter().all(|&s| s) {
        Vec::new()
    } else {
        let start = stable.iter().position(|&s| !s).expect("some element is unstable");
        let mut arcs = Vec::new();
        let mut run: Option<(usize, usize)> = None;
        for step in 1..=2 * n {
            let e = (start + step) % (2 * n);
            if stable[e] {
                run = Some(match run {
                    None => (e, e),
                    Some((first, _)) => (first, e),
                });
            } else if let Some((first, last)) = run.take() {
                // closedness: runs begin and end on critical points
                debug_assert!(first % 2 == 0 && last % 2 == 0);
                arcs.push(StableArc {
                    from: critical[first / 2],
                    to: critical[last / 2],
                });
            }
        }
        arcs.sort_by(|a, b| a.from.angle_cmp(b.from));
        arcs
    };
    let full_circle = n > 0 && stable.iter().all(|&s| s);
    let classification = classify_arcs(&arcs, full_circle);
    StableDirectionReport {
        arcs,
        full_circle,
        classification,
    }
}

fn classify_arcs(arcs: &[StableArc], full_circle: bool) -> Classification {
    if full_circle {
        return Classification::NotSupercritical;
    }
    // An open semicircle avoids S iff S fits in a closed semicircle, and such
    // a semicircle can be rotated until it starts at the start of an arc.
    let supercritical = arcs.is_empty()
        || arcs.iter().any(|anchor| {
            let d = anchor.from;
            arcs.iter().all(|a| {
                d.semicircle_contains(a.from)
                    && d.semicircle_contains(a.to)
                    && d.rel_cmp(a.from, a.to) != Ordering::Greater
            })
        });
    if !supercritical {
        return Classification::NotSupercritical;
    }
    let rooted = arcs.iter().any(|a| !a.is_point()) || {
        let points: Vec<Direction> = arcs.iter().map(|a| a.from).collect();
        points
            .iter()
            .any(|&u| points.iter().any(|&v| v != u && v != u.opposite()))
    };
    if rooted {
        Classification::SupercriticalRooted
    } else {
        Classification::SupercriticalUnrooted
    }
}

pub fn classify_family(family: &UpdateFamily) -> Classification {
    stable_directions(family).classification
}
