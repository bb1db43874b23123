use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::UpdateFamily;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    /// Monte Carlo `τ₀` (or persistence) on a box.
    Kcm,
    /// Median bootstrap infection time of the origin.
    Bootstrap,
    /// Spectral gap and mean hitting time by exact linear algebra.
    Exact,
}

impl ExperimentKind {
    pub fn label(self) -> &'static str {
        match self {
            ExperimentKind::Kcm => "kcm",
            ExperimentKind::Bootstrap => "bootstrap",
            ExperimentKind::Exact => "exact",
        }
    }
}

fn default_sizes() -> Vec<u32> {
    vec![8]
}

fn default_trials() -> usize {
    100
}

fn default_t_max() -> f64 {
    1e4
}

/// A sweep over `q × sizes`. A size is the box width for `kcm` and `exact`
/// and the half-width of the centred square for `bootstrap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    /// Built-in name or path to a family file.
    pub family: String,
    pub q: Vec<f64>,
    #[serde(default = "default_sizes")]
    pub sizes: Vec<u32>,
    /// Box height; defaults to 1 for `east1d` and to the width otherwise.
    #[serde(default)]
    pub height: Option<u32>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default)]
    pub seed: u64,
    /// Measure the persistence time instead of `τ₀`.
    #[serde(default)]
    pub persistence: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("experiment config: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    /// Checks the parameters and resolves the family. Sorts `q` descending
    /// and drops repeats.
    pub fn validate(&mut self) -> Result<UpdateFamily> {
        if self.q.is_empty() {
            return Err(Error::InvalidParameter("q list is empty".into()));
        }
        if let Some(&q) = self.q.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
            return Err(Error::Probability(q));
        }
        self.q.sort_by(|a, b| b.total_cmp(a));
        self.q.dedup();
        if self.sizes.is_empty() || self.sizes.contains(&0) {
            return Err(Error::InvalidParameter("sizes must be a nonempty list of positive integers".into()));
        }
        if self.height == Some(0) {
            return Err(Error::InvalidParameter("height must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidParameter("trials must be at least 1".into()));
        }
        if !(self.t_max >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_max = {}", self.t_max)));
        }
        UpdateFamily::resolve(&self.family)
    }

    /// Height of the box of width `width`.
    pub fn box_height(&self, family: &UpdateFamily, width: u32) -> u32 {
        self.height
            .unwrap_or(if family.name() == "east1d" { 1 } else { width })
    }
}
