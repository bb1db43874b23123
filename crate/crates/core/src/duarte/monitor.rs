use serde::Serialize;

use super::algorithm::run_on_bits;
use super::events::{event_b1, event_b2};
use super::geometry::ColumnGeometry;
use crate::error::{Error, Result};
use crate::family::UpdateFamily;
use crate::kcm::{start, Constraints, SimParams};
use crate::lattice::{BoundaryCondition, Exterior};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonitorParams {
    pub ell: usize,
    pub n1: usize,
    pub n2: usize,
    pub q: f64,
    pub t_max: f64,
    /// Spacing of the observation grid.
    pub dt: f64,
    pub seed: u64,
    pub trial: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonitorReport {
    /// First grid time in `B₁(n₁)`.
    pub b1_entry: Option<f64>,
    /// First grid time in `B₂(n₂)`.
    pub b2_entry: Option<f64>,
    pub max_n_up: usize,
    pub max_range: usize,
    pub samples: usize,
    pub dt: f64,
}

/// Duarte KCM on `V` with the frozen boundary `τ_∥ ≡ 1, τ_⊥ ≡ 0`, started
/// from the stationary measure and observed at times `0, dt, 2dt, … ≤ t_max`.
/// Entry times are grid times, so they overshoot the true ones by up to
/// `dt`. A run with `t_max = 0` observes nothing.
pub fn monitor_trajectory(geom: &ColumnGeometry, p: &MonitorParams) -> Result<MonitorReport> {
    if !(p.dt > 0.0) {
        return Err(Error::InvalidParameter(format!("sample interval {} must be positive", p.dt)));
    }
    let region = geom.region().clone();
    let exterior = Exterior::Boundary(BoundaryCondition::split(&region, 1, 0));
    let params = SimParams {
        family: UpdateFamily::builtin("duarte")?,
        q: p.q,
        region: region.clone(),
        exterior: exterior.clone(),
        t_max: p.t_max,
        seed: p.seed,
        trial: p.trial,
    };
    let constraints = Constraints::new(&params.family, &region, &exterior);
    let (mut traj, _) = start(&params, &constraints)?;
    let mut report = MonitorReport {
        b1_entry: None,
        b2_entry: None,
        max_n_up: 0,
        max_range: 0,
        samples: 0,
        dt: p.dt,
    };
    if p.t_max <= 0.0 {
        return Ok(report);
    }
    let mut k = 0u64;
    loop {
        let t = k as f64 * p.dt;
        if t > p.t_max {
            break;
        }
        traj.advance_to(t);
        let profile = run_on_bits(geom, traj.bits(), p.ell)?;
        report.samples += 1;
        report.max_n_up = report.max_n_up.max(profile.n_up());
        report.max_range = report.max_range.max(profile.max_range());
        if report.b1_entry.is_none() && event_b1(&profile, p.n1) {
            report.b1_entry = Some(t);
        }
        if report.b2_entry.is_none() && event_b2(traj.bits(), &profile, geom, p.n2).is_some() {
            report.b2_entry = Some(t);
        }
        k += 1;
    }
    Ok(report)
}
