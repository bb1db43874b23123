//! Exact computations on small regions: the sparse generator, spectral gap,
//! mean hitting time of `{ω₀ = 0}`, Dirichlet forms, the proxy-function
//! lower bound, and capped-empties reachability.

mod dirichlet;
mod generator;
mod hitting;
mod reach;
mod spectral;

use serde::Serialize;

pub use dirichlet::{
    check_proxy_bound, default_grid, dirichlet_form, energy, proxy_bound, DirichletReport,
    ProxyReport, ProxyRow, TestFunctionTable,
};
pub use generator::{GeneratorOperator, State, StateSpace, GENERATOR_CAP};
pub use hitting::{in_target, mean_hitting, HittingReport};
pub use reach::{
    an_reachability, an_region, east_barrier, reachable_states, AnReport, BarrierReport,
    REACH_BUDGET,
};
pub use spectral::{spectral_gap, GapReport};

use crate::error::Result;
use crate::family::UpdateFamily;
use crate::lattice::{Exterior, Region};

/// Default absolute residual tolerance for the eigensolver.
pub const GAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Residuals {
    pub gap: f64,
    pub hitting: f64,
}

/// Summary of the exact solve on the ergodic component of the all-occupied state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactReport {
    pub gap: f64,
    pub t_rel: f64,
    pub e_mu_tau0: f64,
    /// `q E_μ(τ₀) ≤ T_rel`.
    pub ratio_check: bool,
    pub residuals: Residuals,
    pub states: usize,
}

pub fn exact_report(
    family: &UpdateFamily,
    region: &Region,
    exterior: &Exterior,
    q: f64,
) -> Result<ExactReport> {
    let gen = GeneratorOperator::build(family, region, exterior, q, GENERATOR_CAP)?
        .ergodic_component();
    let gap = spectral_gap(&gen, GAP_TOLERANCE)?;
    let hit = mean_hitting(&gen)?;
    Ok(ExactReport {
        gap: gap.gap,
        t_rel: gap.t_rel,
        e_mu_tau0: hit.e_mu,
        ratio_check: q * hit.e_mu <= gap.t_rel,
        residuals: Residuals {
            gap: gap.residual,
            hitting: hit.residual,
        },
        states: gen.dim(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kcm::{default_exterior, kcm_box};
    use crate::lattice::{BoundaryCondition, Site};
    use nalgebra::{DMatrix, SymmetricEigen};
    use proptest::prelude::*;

    fn east(len: u32, q: f64) -> GeneratorOperator {
        let f = UpdateFamily::builtin("east1d").unwrap();
        let r = kcm_box(len, 1).unwrap();
        let e = default_exterior(&f, &r);
        GeneratorOperator::build(&f, &r, &e, q, GENERATOR_CAP).unwrap()
    }

    fn free_sites(n: u32, q: f64) -> GeneratorOperator {
        // a rule that always fires: its only site is an infected exterior site
        let f = UpdateFamily::new("free", vec![vec![Site::new(0, 5)]]).unwrap();
        let r = kcm_box(n, 1).unwrap();
        GeneratorOperator::build(&f, &r, &Exterior::AllInfected, q, GENERATOR_CAP).unwrap()
    }

    fn dense_gap(gen: &GeneratorOperator) -> f64 {
        let l = gen.to_dense();
        let n = gen.dim();
        let mu = gen.mu();
        let s = DMatrix::from_fn(n, n, |i, j| -l[i][j] * (mu[i] / mu[j]).sqrt());
        let s = (&s + s.transpose()) * 0.5;
        let mut ev: Vec<f64> = SymmetricEigen::new(s).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ev[1]
    }

    #[test]
    fn single_site_chain() {
        let q = 0.3;
        let g = free_sites(1, q);
        assert_eq!(g.dim(), 2);
        let rates: Vec<f64> = (0..2).map(|i| g.row(i).next().unwrap().1).collect();
        // state 0 is empty (goes up at rate p), state 1 occupied (down at rate q)
        assert_eq!(rates, vec![1.0 - q, q]);
        let gap = spectral_gap(&g, 1e-12).unwrap();
        assert!((gap.gap - 1.0).abs() < 1e-12);
        let hit = mean_hitting(&g).unwrap();
        assert!((hit.e_mu - (1.0 - q) / q).abs() < 1e-10);
        assert_eq!(hit.per_state[0], 0.0);
    }

    #[test]
    fn blocked_site_has_no_dynamics() {
        let f = UpdateFamily::new("up", vec![vec![Site::new(0, 1)]]).unwrap();
        let r = kcm_box(1, 1).unwrap();
        let g = GeneratorOperator::build(&f, &r, &Exterior::AllHealthy, 0.3, 16).unwrap();
        assert!((0..2).all(|i| g.row(i).count() == 0 && g.diagonal(i) == 0.0));
        assert!(spectral_gap(&g, 1e-10).is_err());
        assert!(matches!(mean_hitting(&g), Err(crate::Error::Unreachable { .. })));
    }

    #[test]
    fn east_two_sites_by_hand() {
        let q = 0.25;
        let p = 1.0 - q;
        let g = east(2, q);
        let l = g.to_dense();
        // bit 0 is the site (-1,0) next to the empty wall, bit 1 the origin
        for i in 0..4 {
            let s = g.space().state(i);
            let left_empty = s & 1 == 0;
            let mut row = [0.0; 4];
            row[(s ^ 1) as usize] = if s & 1 == 1 { q } else { p };
            if left_empty {
                row[(s ^ 2) as usize] = if s & 2 == 2 { q } else { p };
            }
            row[i] = -row.iter().sum::<f64>();
            for j in 0..4 {
                assert!((l[i][j] - row[j]).abs() < 1e-15, "entry {i},{j}");
            }
        }
        assert!(g.detailed_balance_defect() < 1e-12);
    }

    #[test]
    fn tensorization() {
        for q in [0.2, 0.5, 0.7] {
            let g = free_sites(3, q);
            let gap = spectral_gap(&g, 1e-11).unwrap();
            assert!((gap.gap - 1.0).abs() < 1e-8, "{}", gap.gap);
        }
    }

    #[test]
    fn lanczos_matches_dense_diagonalization() {
        let g = east(4, 0.3).ergodic_component();
        assert_eq!(g.dim(), 16);
        let gap = spectral_gap(&g, 1e-12).unwrap();
        assert!((gap.gap - dense_gap(&g)).abs() < 1e-8);
        for len in [6, 8] {
            for q in [0.2, 0.45] {
                let g = east(len, q).ergodic_component();
                let gap = spectral_gap(&g, 1e-11).unwrap();
                assert!((gap.gap - dense_gap(&g)).abs() < 1e-8, "L={len} q={q}");
            }
        }
    }

    #[test]
    fn gap_and_mean_hitting_are_related() {
        let g = east(6, 0.3).ergodic_component();
        let gap = spectral_gap(&g, GAP_TOLERANCE).unwrap();
        let hit = mean_hitting(&g).unwrap();
        assert!(0.3 * hit.e_mu <= gap.t_rel);
        assert!(hit.residual <= 1e-10);
    }

    #[test]
    fn dirichlet_examples() {
        let q = 0.3;
        let g = free_sites(1, q);
        let constant = TestFunctionTable::from_fn(&g, |_| 2.0);
        let r = dirichlet_form(&g, &constant);
        assert_eq!((r.dirichlet, r.poincare_ratio), (0.0, None));
        assert!(r.variance.abs() < 1e-15);
        let omega0 = TestFunctionTable::from_fn(&g, |s| f64::from(s & 1));
        let r = dirichlet_form(&g, &omega0);
        assert!((r.variance - q * (1.0 - q)).abs() < 1e-15);
        assert!((r.dirichlet - q * (1.0 - q)).abs() < 1e-15);
        assert!((r.poincare_ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proxy_bound_preconditions() {
        let g = east(4, 0.3);
        let bad = TestFunctionTable::from_fn(&g, |_| 1.0);
        let err = check_proxy_bound(&g, &bad, 1.0, &[]).unwrap_err();
        assert!(matches!(err, crate::Error::NotInHa(_)));
        let zero = TestFunctionTable::from_fn(&g, |_| 0.0);
        assert!(matches!(
            check_proxy_bound(&g, &zero, 1.0, &[]),
            Err(crate::Error::ZeroDirichlet)
        ));
    }

    #[test]
    fn proxy_bound_with_indicator_of_healthy_origin() {
        let g = east(5, 0.3).ergodic_component();
        let origin = g.origin().unwrap();
        let phi = TestFunctionTable::from_fn(&g, |s| f64::from((s >> origin & 1) as u8));
        let e = mean_hitting(&g).unwrap().e_mu;
        let report = check_proxy_bound(&g, &phi, e, &[]).unwrap();
        assert!(report.all_hold);
        assert_eq!(report.grid.len(), 20);
    }

    #[test]
    fn east_barrier_small_values() {
        let values: Vec<u32> = (1..=4)
            .map(|l| east_barrier(l, REACH_BUDGET).unwrap().barrier)
            .collect();
        assert_eq!(values, vec![1, 2, 2, 3]);
        assert!(east_barrier(0, REACH_BUDGET).is_err());
    }

    #[test]
    fn an_reachability_examples() {
        let e2 = UpdateFamily::builtin("east2d").unwrap();
        let r = an_reachability(&e2, 1, 1, REACH_BUDGET).unwrap();
        assert_eq!((r.side, r.origin_infectable, r.reachable_states), (3, false, 1));
        let r = an_reachability(&e2, 2, 1, REACH_BUDGET).unwrap();
        assert_eq!(r.side, 9);
        assert!(!r.origin_infectable);
        let west = UpdateFamily::builtin("east1d").unwrap();
        let r = an_reachability(&west, 2, 1, REACH_BUDGET).unwrap();
        assert!(!r.origin_infectable);
        // the left column can empty one site at a time
        assert_eq!(r.reachable_states, 1 + 9);
        assert!(an_reachability(&e2, 3, 1, 10).is_err());
    }

    #[test]
    fn ergodic_component_of_reducible_chain() {
        // without a frozen zero the all-occupied state is isolated
        let f = UpdateFamily::builtin("east1d").unwrap();
        let r = kcm_box(3, 1).unwrap();
        let tau = BoundaryCondition::uniform(&r, 1);
        let g = GeneratorOperator::build(&f, &r, &Exterior::Boundary(tau), 0.3, 64).unwrap();
        assert!(g.component_count() > 1);
        assert!(matches!(spectral_gap(&g, 1e-10), Err(crate::Error::Reducible { .. })));
        assert_eq!(g.ergodic_component().dim(), 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn generator_rows_and_balance(seed in any::<u64>(), q in 0.05f64..0.95) {
            let f = crate::testing::random_family(&mut crate::rng::stream_rng(seed, 0), 2);
            let r = kcm_box(3, 3).unwrap();
            let g = GeneratorOperator::build(&f, &r, &Exterior::AllInfected, q, 1 << 10).unwrap();
            for i in 0..g.dim() {
                let sum: f64 = g.row(i).map(|(_, r)| r).sum::<f64>() + g.diagonal(i);
                prop_assert_eq!(sum, 0.0);
            }
            prop_assert!(g.detailed_balance_defect() <= 1e-12);
        }

        #[test]
        fn dirichlet_form_equals_energy(seed in any::<u64>(), q in 0.1f64..0.9) {
            let g = east(6, q).ergodic_component();
            let mut rng = crate::rng::stream_rng(seed, 1);
            let vals: Vec<f64> = (0..g.dim()).map(|_| rand::Rng::random::<f64>(&mut rng) - 0.5).collect();
            let f = TestFunctionTable { values: vals, normalized: false };
            let d = dirichlet_form(&g, &f).dirichlet;
            prop_assert!((d - energy(&g, &f)).abs() <= 1e-12 * d.max(1.0));
        }
    }
}
