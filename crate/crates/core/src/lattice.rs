//! Sites, finite regions, boundary conditions and configurations on Z².
//!
//! Values follow the KCM convention: `0` is an empty (infected) site and
//! `1` an occupied (healthy) one. Every configuration lives on a finite
//! [`Region`] and carries an [`Exterior`] policy that fixes the value of
//! every site outside it.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::rng::stream_rng;

/// A point of Z². `y` is the height.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(from = "(i64, i64)", into = "(i64, i64)")]
pub struct Site {
    pub x: i64,
    pub y: i64,
}

impl Site {
    pub const ORIGIN: Site = Site { x: 0, y: 0 };

    pub const fn new(x: i64, y: i64) -> Self {
        Site { x, y }
    }

    pub fn offset(self, dx: i64, dy: i64) -> Self {
        Site::new(self.x + dx, self.y + dy)
    }
}

impl std::ops::Add for Site {
    type Output = Site;
    fn add(self, rhs: Site) -> Site {
        Site::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Site {
    type Output = Site;
    fn sub(self, rhs: Site) -> Site {
        Site::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl From<(i64, i64)> for Site {
    fn from((x, y): (i64, i64)) -> Self {
        Site::new(x, y)
    }
}

impl From<Site> for (i64, i64) {
    fn from(s: Site) -> Self {
        (s.x, s.y)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Largest bounding-box area for which a region keeps a dense index.
const DENSE_LOOKUP_LIMIT: u128 = 1 << 26;

#[derive(Debug, Clone)]
enum Lookup {
    Dense { width: usize, cells: Vec<u32> },
    Sparse(HashMap<Site, u32>),
}

/// A finite, nonempty set of sites with a stable site indexing.
///
/// Sites are kept sorted (by `x`, then `y`); the position of a site in that
/// order is its index, used by [`Configuration`] bit vectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Vec<Site>", try_from = "Vec<Site>")]
pub struct Region {
    sites: Vec<Site>,
    min: Site,
    max: Site,
    lookup: Lookup,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.sites == other.sites
    }
}

impl Eq for Region {}

impl From<Region> for Vec<Site> {
    fn from(r: Region) -> Self {
        r.sites
    }
}

impl TryFrom<Vec<Site>> for Region {
    type Error = Error;
    fn try_from(sites: Vec<Site>) -> Result<Self> {
        Region::from_sites(sites)
    }
}

/// The two boundary views of a region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Boundaries {
    /// Sites `y` outside the region with `y + e₁` inside.
    pub parallel: BTreeSet<Site>,
    /// Sites `y` outside the region with `y + e₂` or `y − e₂` inside.
    pub perpendicular: BTreeSet<Site>,
}

impl Boundaries {
    pub fn union(&self) -> BTreeSet<Site> {
        self.parallel.union(&self.perpendicular).copied().collect()
    }
}

impl Region {
    pub fn from_sites(sites: impl IntoIterator<Item = Site>) -> Result<Self> {
        let mut sites: Vec<Site> = sites.into_iter().collect();
        sites.sort_unstable();
        sites.dedup();
        if sites.is_empty() {
            return Err(Error::EmptyRegion);
        }
        let (mut min, mut max) = (sites[0], sites[0]);
        for s in &sites {
            min.x = min.x.min(s.x);
            min.y = min.y.min(s.y);
            max.x = max.x.max(s.x);
            max.y = max.y.max(s.y);
        }
        let width = (max.x - min.x) as u128 + 1;
        let height = (max.y - min.y) as u128 + 1;
        let lookup = if width * height <= DENSE_LOOKUP_LIMIT {
            let width = width as usize;
            let mut cells = vec![u32::MAX; width * height as usize];
            for (i, s) in sites.iter().enumerate() {
                let off = (s.y - min.y) as usize * width + (s.x - min.x) as usize;
                cells[off] = i as u32;
            }
            Lookup::Dense { width, cells }
        } else {
            Lookup::Sparse(sites.iter().enumerate().map(|(i, s)| (*s, i as u32)).collect())
        };
        Ok(Region {
            sites,
            min,
            max,
            lookup,
        })
    }

    /// The `width × height` rectangle with lower-left corner `corner`.
    pub fn rectangle(corner: Site, width: u32, height: u32) -> Result<Self> {
        let mut sites = Vec::with_capacity(width as usize * height as usize);
        for dx in 0..width as i64 {
            for dy in 0..height as i64 {
                sites.push(corner.offset(dx, dy));
            }
        }
        Region::from_sites(sites)
    }

    /// The square `[-half, half]²`.
    pub fn centered_square(half: u32) -> Result<Self> {
        let h = half as i64;
        Region::rectangle(Site::new(-h, -h), 2 * half + 1, 2 * half + 1)
    }

    /// Union of vertical segments `(x, y_lo..=y_hi)`.
    pub fn from_columns(columns: impl IntoIterator<Item = (i64, i64, i64)>) -> Result<Self> {
        let mut sites = Vec::new();
        for (x, lo, hi) in columns {
            sites.extend((lo..=hi).map(|y| Site::new(x, y)));
        }
        Region::from_sites(sites)
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    /// Inclusive bounding box `(min, max)`.
    pub fn bounding_box(&self) -> (Site, Site) {
        (self.min, self.max)
    }

    pub fn index_of(&self, s: Site) -> Option<usize> {
        if s.x < self.min.x || s.x > self.max.x || s.y < self.min.y || s.y > self.max.y {
            return None;
        }
        match &self.lookup {
            Lookup::Dense { width, cells } => {
                let off = (s.y - self.min.y) as usize * width + (s.x - self.min.x) as usize;
                let i = cells[off];
                (i != u32::MAX).then_some(i as usize)
            }
            Lookup::Sparse(map) => map.get(&s).map(|&i| i as usize),
        }
    }

    pub fn contains(&self, s: Site) -> bool {
        self.index_of(s).is_some()
    }

    /// `∂_∥Λ` and `∂_⊥Λ`. A site may lie in both views.
    pub fn boundaries(&self) -> Boundaries {
        let mut parallel = BTreeSet::new();
        let mut perpendicular = BTreeSet::new();
        for &s in &self.sites {
            let w = s.offset(-1, 0);
            if !self.contains(w) {
                parallel.insert(w);
            }
            for dy in [-1, 1] {
                let v = s.offset(0, dy);
                if !self.contains(v) {
                    perpendicular.insert(v);
                }
            }
        }
        Boundaries {
            parallel,
            perpendicular,
        }
    }

    pub fn is_subset_of(&self, other: &Region) -> bool {
        self.sites.iter().all(|&s| other.contains(s))
    }
}

/// Which boundary views a boundary site belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryKind {
    pub parallel: bool,
    pub perpendicular: bool,
}

/// A fixed 0/1 assignment on `∂Λ = ∂_∥Λ ∪ ∂_⊥Λ` of some region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryCondition {
    values: BTreeMap<Site, u8>,
    parallel: BTreeSet<Site>,
    perpendicular: BTreeSet<Site>,
}

impl BoundaryCondition {
    /// Builds a boundary condition from a per-site rule.
    pub fn from_fn(region: &Region, mut value: impl FnMut(Site, BoundaryKind) -> u8) -> Self {
        let b = region.boundaries();
        let mut values = BTreeMap::new();
        for s in b.union() {
            let kind = BoundaryKind {
                parallel: b.parallel.contains(&s),
                perpendicular: b.perpendicular.contains(&s),
            };
            values.insert(s, value(s, kind).min(1));
        }
        BoundaryCondition {
            values,
            parallel: b.parallel,
            perpendicular: b.perpendicular,
        }
    }

    pub fn uniform(region: &Region, value: u8) -> Self {
        Self::from_fn(region, |_, _| value)
    }

    /// `τ_∥ ≡ parallel`, `τ_⊥ ≡ perpendicular`; a site on both views takes
    /// the perpendicular value.
    pub fn split(region: &Region, parallel: u8, perpendicular: u8) -> Self {
        Self::from_fn(region, |_, k| if k.perpendicular { perpendicular } else { parallel })
    }

    /// The `1,0` condition: healthy on `∂_∥`, infected on `∂_⊥`.
    pub fn healthy_parallel_infected_perpendicular(region: &Region) -> Self {
        Self::split(region, 1, 0)
    }

    /// Explicit assignment; the support must equal `∂Λ` exactly.
    pub fn from_map(region: &Region, values: BTreeMap<Site, u8>) -> Result<Self> {
        let b = region.boundaries();
        let support: BTreeSet<Site> = values.keys().copied().collect();
        if support != b.union() {
            return Err(Error::BoundaryMismatch(format!(
                "support has {} sites, region boundary has {}",
                support.len(),
                b.union().len()
            )));
        }
        for (&s, &v) in &values {
            if v > 1 {
                return Err(Error::ConfigurationValue { site: s, value: v });
            }
        }
        Ok(BoundaryCondition {
            values,
            parallel: b.parallel,
            perpendicular: b.perpendicular,
        })
    }

    pub fn value(&self, s: Site) -> Option<u8> {
        self.values.get(&s).copied()
    }

    pub fn set(&mut self, s: Site, v: u8) -> Result<()> {
        match self.values.get_mut(&s) {
            Some(slot) => {
                *slot = v.min(1);
                Ok(())
            }
            None => Err(Error::BoundaryMismatch(format!("{s} is not a boundary site"))),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = (Site, u8)> + '_ {
        self.values.iter().map(|(&s, &v)| (s, v))
    }

    pub fn support(&self) -> impl Iterator<Item = Site> + '_ {
        self.values.keys().copied()
    }

    /// `τ_∥`.
    pub fn parallel_view(&self) -> impl Iterator<Item = (Site, u8)> + '_ {
        self.parallel.iter().map(|s| (*s, self.values[s]))
    }

    /// `τ_⊥`.
    pub fn perpendicular_view(&self) -> impl Iterator<Item = (Site, u8)> + '_ {
        self.perpendicular.iter().map(|s| (*s, self.values[s]))
    }

    pub fn zeros(&self) -> impl Iterator<Item = Site> + '_ {
        self.values.iter().filter(|(_, &v)| v == 0).map(|(&s, _)| s)
    }

    /// Whether the support is exactly `∂Λ` of `region`.
    pub fn matches(&self, region: &Region) -> bool {
        let b = region.boundaries();
        b.parallel == self.parallel
            && b.perpendicular == self.perpendicular
            && self.values.len() == b.union().len()
    }

    /// Pointwise `self ≤ other`.
    pub fn le(&self, other: &BoundaryCondition) -> bool {
        self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .all(|(s, &v)| other.values.get(s).is_some_and(|&w| v <= w))
    }
}

/// Value of every site outside a configuration's region.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Exterior {
    AllHealthy,
    AllInfected,
    /// `τ` on `∂Λ`, healthy beyond.
    Boundary(BoundaryCondition),
}

impl Exterior {
    /// Value of an outside site.
    pub fn value(&self, s: Site) -> u8 {
        match self {
            Exterior::AllHealthy => 1,
            Exterior::AllInfected => 0,
            Exterior::Boundary(tau) => tau.value(s).unwrap_or(1),
        }
    }

    pub fn check(&self, region: &Region) -> Result<()> {
        match self {
            Exterior::Boundary(tau) if !tau.matches(region) => Err(Error::BoundaryMismatch(
                "boundary condition belongs to a different region".into(),
            )),
            _ => Ok(()),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Exterior::AllHealthy => "all-healthy",
            Exterior::AllInfected => "all-infected",
            Exterior::Boundary(_) => "boundary",
        }
    }
}

/// A 0/1 field on a finite region plus its exterior policy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    region: Arc<Region>,
    bits: Vec<u8>,
    exterior: Exterior,
}

impl Configuration {
    pub fn new(region: Arc<Region>, bits: Vec<u8>, exterior: Exterior) -> Result<Self> {
        if bits.len() != region.len() {
            return Err(Error::ConfigurationLength {
                expected: region.len(),
                got: bits.len(),
            });
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(Error::ConfigurationValue {
                site: region.sites()[i],
                value: bits[i],
            });
        }
        exterior.check(&region)?;
        Ok(Configuration {
            region,
            bits,
            exterior,
        })
    }

    pub fn filled(region: Arc<Region>, value: u8, exterior: Exterior) -> Result<Self> {
        let bits = vec![value.min(1); region.len()];
        Configuration::new(region, bits, exterior)
    }

    /// Occupied everywhere except on `empties`.
    pub fn with_empties(
        region: Arc<Region>,
        empties: impl IntoIterator<Item = Site>,
        exterior: Exterior,
    ) -> Result<Self> {
        let mut c = Configuration::filled(region, 1, exterior)?;
        for s in empties {
            c.set(s, 0)?;
        }
        Ok(c)
    }

    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn exterior(&self) -> &Exterior {
        &self.exterior
    }

    /// `ω_s` for any site of Z².
    pub fn value(&self, s: Site) -> u8 {
        match self.region.index_of(s) {
            Some(i) => self.bits[i],
            None => self.exterior.value(s),
        }
    }

    pub fn set(&mut self, s: Site, v: u8) -> Result<()> {
        let i = self.region.index_of(s).ok_or(Error::SiteOutsideRegion(s))?;
        self.bits[i] = v.min(1);
        Ok(())
    }

    /// `ω^x`: the configuration flipped at `x`.
    pub fn flipped(&self, x: Site) -> Result<Self> {
        let i = self.region.index_of(x).ok_or(Error::SiteOutsideRegion(x))?;
        let mut c = self.clone();
        c.bits[i] ^= 1;
        Ok(c)
    }

    /// `Y(ω)`: the empty sites of the region.
    pub fn empty_sites(&self) -> BTreeSet<Site> {
        self.region
            .sites()
            .iter()
            .zip(&self.bits)
            .filter(|(_, &b)| b == 0)
            .map(|(&s, _)| s)
            .collect()
    }

    pub fn count_empty(&self) -> usize {
        self.bits.iter().filter(|&&b| b == 0).count()
    }

    pub fn with_exterior(&self, exterior: Exterior) -> Result<Self> {
        Configuration::new(self.region.clone(), self.bits.clone(), exterior)
    }

    /// `c_x(ω)`: some rule `X` has `ω ≡ 0` on `X + x`.
    pub fn constraint_satisfied(&self, family: &UpdateFamily, x: Site) -> Result<bool> {
        if !self.region.contains(x) {
            return Err(Error::SiteOutsideRegion(x));
        }
        Ok(family
            .rules()
            .iter()
            .any(|rule| rule.iter().all(|&d| self.value(x + d) == 0)))
    }

    /// `x,y,value` lines with a header; the exterior is not stored.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,value\n");
        for (s, b) in self.region.sites().iter().zip(&self.bits) {
            out.push_str(&format!("{},{},{}\n", s.x, s.y, b));
        }
        out
    }

    pub fn from_csv(text: &str, exterior: Exterior) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("x,") {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected x,y,value", lineno + 1)));
            }
            let num = |f: &str| {
                f.parse::<i64>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))
            };
            let (x, y, v) = (num(fields[0])?, num(fields[1])?, num(fields[2])?);
            if !(0..=1).contains(&v) {
                return Err(Error::ConfigurationValue {
                    site: Site::new(x, y),
                    value: v.clamp(0, 255) as u8,
                });
            }
            entries.push((Site::new(x, y), v as u8));
        }
        let region = Arc::new(Region::from_sites(entries.iter().map(|e| e.0))?);
        if region.len() != entries.len() {
            return Err(Error::Parse("duplicate site in configuration".into()));
        }
        let mut bits = vec![0; region.len()];
        for (s, v) in entries {
            bits[region.index_of(s).expect("site was inserted")] = v;
        }
        Configuration::new(region, bits, exterior)
    }
}

/// I.i.d. configuration: each site empty with probability `q`,
/// deterministic in `(seed, stream)`.
pub fn sample_bernoulli(
    region: Arc<Region>,
    q: f64,
    seed: u64,
    stream: u64,
    exterior: Exterior,
) -> Result<Configuration> {
    let mut rng = stream_rng(seed, stream);
    sample_bernoulli_with(region, q, &mut rng, exterior)
}

pub fn sample_bernoulli_with<R: Rng>(
    region: Arc<Region>,
    q: f64,
    rng: &mut R,
    exterior: Exterior,
) -> Result<Configuration> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::Probability(q));
    }
    let bits = (0..region.len())
        .map(|_| u8::from(rng.random::<f64>() >= q))
        .collect();
    Configuration::new(region, bits, exterior)
}
