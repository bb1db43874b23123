use std::sync::Arc;

use crate::error::{Error, Result};
use crate::lattice::{Region, Site};

/// Largest region the droplet machinery will materialise.
pub const MAX_V_SITES: usize = 1 << 24;

/// The columns `C_i = {(i, j) : |j| < N² − (i−1)N} − N e₁`, `i = 1..N`,
/// and their union `V`. Column `i` sits at `x = i − N`, so the origin is
/// the midpoint of `C_N`. Indices in the API are 1-based like the columns.
#[derive(Debug, Clone)]
pub struct ColumnGeometry {
    n: usize,
    /// `h_i = N² − (i−1)N`; column `i` holds the heights `|j| < h_i`.
    heights: Vec<i64>,
    /// First index of each column in `V`, plus a final sentinel.
    starts: Vec<usize>,
    region: Arc<Region>,
}

impl ColumnGeometry {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("N must be at least 1".into()));
        }
        let n64 = n as i64;
        let heights: Vec<i64> = (1..=n64).map(|i| n64 * n64 - (i - 1) * n64).collect();
        let total: i64 = heights.iter().map(|h| 2 * h - 1).sum();
        if total as usize > MAX_V_SITES {
            return Err(Error::InvalidParameter(format!(
                "V would have {total} sites, above the cap {MAX_V_SITES}"
            )));
        }
        let mut starts = vec![0];
        for h in &heights {
            starts.push(starts.last().unwrap() + (2 * h - 1) as usize);
        }
        let region = Region::from_columns(
            heights
                .iter()
                .enumerate()
                .map(|(i, h)| (i as i64 + 1 - n64, -(h - 1), h - 1)),
        )?;
        Ok(ColumnGeometry {
            n,
            heights,
            starts,
            region: Arc::new(region),
        })
    }

    /// Number of columns `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// `V`.
    pub fn region(&self) -> &Arc<Region> {
        &self.region
    }

    /// `h_i`.
    pub fn height(&self, i: usize) -> i64 {
        self.heights[i - 1]
    }

    /// `|C_i| = 2h_i − 1`.
    pub fn column_len(&self, i: usize) -> usize {
        (2 * self.height(i) - 1) as usize
    }

    pub fn column_x(&self, i: usize) -> i64 {
        i as i64 - self.n as i64
    }

    /// Index range of `C_i` inside `V`, ordered by height.
    pub fn column_range(&self, i: usize) -> std::ops::Range<usize> {
        self.starts[i - 1]..self.starts[i]
    }

    pub fn column_sites(&self, i: usize) -> Vec<Site> {
        let h = self.height(i);
        (-(h - 1)..h).map(|j| Site::new(self.column_x(i), j)).collect()
    }

    /// `∂_⊥C_i` as `(bottom, top)`.
    pub fn caps(&self, i: usize) -> (Site, Site) {
        let (x, h) = (self.column_x(i), self.height(i));
        (Site::new(x, -h), Site::new(x, h))
    }

    /// `C̄_i = C_i ∪ ∂_⊥C_i`.
    pub fn capped_column(&self, i: usize) -> Vec<Site> {
        let (b, t) = self.caps(i);
        let mut v = vec![b];
        v.extend(self.column_sites(i));
        v.push(t);
        v
    }

    /// Column of a site of `C̄_i`, if any.
    pub fn column_of(&self, s: Site) -> Option<usize> {
        let i = s.x + self.n as i64;
        (i >= 1 && i <= self.n as i64 && s.y.abs() <= self.height(i as usize)).then_some(i as usize)
    }

    /// `V_{i,j} = C_i ∪ … ∪ C_j`.
    pub fn sub_region(&self, i: usize, j: usize) -> Result<Region> {
        if i == 0 || i > j || j > self.n {
            return Err(Error::InvalidParameter(format!("columns {i}..{j}")));
        }
        Region::from_columns((i..=j).map(|c| {
            let h = self.height(c);
            (self.column_x(c), -(h - 1), h - 1)
        }))
    }
}
