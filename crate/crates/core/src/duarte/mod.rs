//! Droplets for the Duarte model on the region `V` of shrinking columns.
//!
//! The algorithm sweeps the columns from left to right. Whenever a column
//! holds a long enough vertical interval that the current empties can
//! infect, the smallest block of columns responsible for it is healed and
//! recorded as a droplet, and the column gets an up arrow.

mod algorithm;
mod events;
mod geometry;
mod monitor;
mod scales;

pub use algorithm::{
    column_closure, run_droplet_algorithm, run_on_bits, vertical_runs, AlgoState, Arrow, ArrowProfile,
    DropletRecord,
};
pub use events::{
    eta_blocks, eta_project, event_b1, event_b2, validate_coarse_path, B2Witness, CoarsePathReport,
    CoarseProfile, PathViolation,
};
pub use geometry::{ColumnGeometry, MAX_V_SITES};
pub use monitor::{monitor_trajectory, MonitorParams, MonitorReport};
pub use scales::{paper_scales, DuarteScales};

use serde::Serialize;

#[derive(Serialize)]
struct ProfileDump<'a> {
    n: usize,
    ell: usize,
    phi: String,
    n_up: usize,
    droplets: &'a [DropletRecord],
    xi_search_agrees: bool,
    restriction_identity: bool,
    b1: Option<bool>,
    b2: Option<&'a B2Witness>,
}

/// JSON summary of a profile with optional event results.
pub fn profile_json(
    geom: &ColumnGeometry,
    ell: usize,
    profile: &ArrowProfile,
    b1: Option<bool>,
    b2: Option<&B2Witness>,
) -> serde_json::Value {
    serde_json::to_value(ProfileDump {
        n: geom.n(),
        ell,
        phi: profile.phi_string(),
        n_up: profile.n_up(),
        droplets: &profile.droplets,
        xi_search_agrees: profile.xi_search_agrees,
        restriction_identity: profile.restriction_identity,
        b1,
        b2,
    })
    .expect("profile serializes")
}
