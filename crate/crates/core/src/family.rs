//! Update families: finite collections of finite site-sets avoiding the origin.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;

/// An update family `U = {X₁, …, X_m}` in canonical form: every rule is
/// sorted and deduplicated, and the rule list is sorted lexicographically
/// and deduplicated.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UpdateFamily {
    name: String,
    rules: Vec<Vec<Site>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FamilyRepr {
    name: String,
    rules: Vec<Vec<(i64, i64)>>,
}

pub const BUILTIN_NAMES: [&str; 3] = ["east1d", "east2d", "duarte"];

const WEST: Site = Site::new(-1, 0);
const SOUTH: Site = Site::new(0, -1);
const NORTH: Site = Site::new(0, 1);

impl UpdateFamily {
    /// Canonicalizes and validates `rules`.
    pub fn new(name: impl Into<String>, rules: Vec<Vec<Site>>) -> Result<Self> {
        Self::canonical(name.into(), rules).map(|(f, _)| f)
    }

    fn canonical(name: String, rules: Vec<Vec<Site>>) -> Result<(Self, Vec<String>)> {
        if rules.is_empty() {
            return Err(Error::NoRules);
        }
        let mut warnings = Vec::new();
        let mut canon = Vec::with_capacity(rules.len());
        for (i, rule) in rules.into_iter().enumerate() {
            if rule.is_empty() {
                return Err(Error::EmptyRule { rule: i });
            }
            if rule.contains(&Site::ORIGIN) {
                return Err(Error::OriginInRule { rule: i });
            }
            let mut sorted = rule.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != rule.len() {
                warnings.push(format!("rule {i}: duplicate site removed"));
            }
            canon.push(sorted);
        }
        let before = canon.len();
        canon.sort();
        canon.dedup();
        if canon.len() != before {
            warnings.push(format!("{} duplicate rule(s) removed", before - canon.len()));
        }
        Ok((UpdateFamily { name, rules: canon }, warnings))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rules(&self) -> &[Vec<Site>] {
        &self.rules
    }

    /// `east1d`, `east2d` or `duarte`.
    pub fn builtin(name: &str) -> Result<Self> {
        let rules = match name {
            "east1d" => vec![vec![WEST]],
            "east2d" => vec![vec![WEST], vec![SOUTH]],
            // all 2-subsets of the north, south and west neighbours
            "duarte" => vec![vec![NORTH, SOUTH], vec![NORTH, WEST], vec![SOUTH, WEST]],
            other => return Err(Error::UnknownFamily(other.to_string())),
        };
        UpdateFamily::new(name, rules)
    }

    /// A built-in name, or else a path to a family file.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if BUILTIN_NAMES.contains(&name_or_path) {
            return Self::builtin(name_or_path);
        }
        let path = Path::new(name_or_path);
        if !path.exists() {
            return Err(Error::UnknownFamily(name_or_path.to_string()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        parse_family(&text).map(|p| p.family)
    }

    /// Largest coordinate magnitude over all rule sites.
    pub fn reach(&self) -> i64 {
        self.rules
            .iter()
            .flatten()
            .map(|s| s.x.abs().max(s.y.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Canonical JSON text.
    pub fn to_json(&self) -> String {
        let repr = FamilyRepr {
            name: self.name.clone(),
            rules: self
                .rules
                .iter()
                .map(|r| r.iter().map(|&s| s.into()).collect())
                .collect(),
        };
        serde_json::to_string(&repr).expect("family serializes")
    }
}

/// A parsed family plus warnings about non-canonical input.
#[derive(Debug, Clone)]
pub struct ParsedFamily {
    pub family: UpdateFamily,
    pub warnings: Vec<String>,
}

/// Parses `{"name": str, "rules": [[[dx,dy],...],...]}`.
pub fn parse_family(text: &str) -> Result<ParsedFamily> {
    let repr: FamilyRepr = serde_json::from_str(text).map_err(|e| Error::FamilySyntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    let rules = repr
        .rules
        .into_iter()
        .map(|r| r.into_iter().map(Site::from).collect())
        .collect();
    let (family, warnings) = UpdateFamily::canonical(repr.name, rules)?;
    Ok(ParsedFamily { family, warnings })
}
