//! Bootstrap percolation and kinetically constrained models on Z².
//!
//! The crate covers update families and their stable directions, U-bootstrap
//! closures with boundary conditions, continuous-time KCM simulation, exact
//! small-system solvers (spectral gap, mean hitting time, Dirichlet forms,
//! energy barriers), the Duarte droplet algorithm, and a sweep harness.
//!
//! Site values: `0` is empty (infected), `1` is occupied (healthy).

pub mod bootstrap;
pub mod directions;
pub mod duarte;
pub mod error;
pub mod exact;
pub mod family;
pub mod harness;
pub mod kcm;
pub mod lattice;
pub mod rng;
pub mod stats;
pub mod testing;

pub use bootstrap::{
    closure_free, closure_region, duarte_path_exists, is_infectable, median_bootstrap_time,
    synchronous_step, BootstrapTimeSummary, ClosureResult, InfectionSet,
};
pub use directions::{
    classify_family, stable_directions, Classification, Direction, StableArc,
    StableDirectionReport,
};
pub use error::{Error, Result};
pub use family::{parse_family, ParsedFamily, UpdateFamily, BUILTIN_NAMES};
pub use lattice::{
    sample_bernoulli, BoundaryCondition, BoundaryKind, Boundaries, Configuration, Exterior,
    Region, Site,
};

/// Crate version, written into every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
