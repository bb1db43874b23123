use thiserror::Error;

use crate::lattice::Site;

#[derive(Debug, Error)]
pub enum Error {
    #[error("family syntax error at line {line}, column {column}: {message}")]
    FamilySyntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("rule {rule}: origin in rule")]
    OriginInRule { rule: usize },
    #[error("rule {rule}: empty rule")]
    EmptyRule { rule: usize },
    #[error("family has no rules")]
    NoRules,
    #[error("unknown family `{0}`")]
    UnknownFamily(String),

    #[error("region is empty")]
    EmptyRegion,
    #[error("site {0} is outside the region")]
    SiteOutsideRegion(Site),
    #[error("boundary condition does not match region: {0}")]
    BoundaryMismatch(String),
    #[error("configuration has {got} values for a region of {expected} sites")]
    ConfigurationLength { expected: usize, got: usize },
    #[error("configuration value {value} at {site} is not 0 or 1")]
    ConfigurationValue { site: Site, value: u8 },

    #[error("probability {0} is outside the admissible range")]
    Probability(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("state space of {0} sites exceeds the configured cap")]
    StateSpaceOverflow(usize),
    #[error("search budget of {0} states exhausted")]
    BudgetExhausted(usize),
    #[error("chain has no dynamics on the ergodic component of the all-occupied state ({components} components)")]
    Reducible { components: usize },
    #[error("eigensolver did not converge (residual {residual:e})")]
    NoConvergence { residual: f64 },
    #[error("{count} states cannot reach the target, e.g. state {example}")]
    Unreachable { count: usize, example: u32 },
    #[error("test function does not vanish on the target set (state {0})")]
    NotInHa(u32),
    #[error("test function has zero Dirichlet form")]
    ZeroDirichlet,
    #[error("insufficient points for a fit: {0} usable, at least 3 required")]
    InsufficientPoints(usize),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
