//! Closure identities for the Duarte bootstrap process on random instances.

mod common;

use proptest::prelude::*;

fn holds(check: common::Check) -> Result<(), TestCaseError> {
    check.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 150, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn queue_closure_matches_synchronous_oracle(seed in any::<u64>()) {
        holds(common::closure_oracle(seed))?;
    }

    #[test]
    fn staircases_screen_the_far_side(seed in any::<u64>(), rising in any::<bool>()) {
        holds(common::screening(seed, rising))?;
    }

    #[test]
    fn raising_the_boundary_shrinks_the_closure(seed in any::<u64>()) {
        holds(common::monotone_boundary(seed))?;
    }

    #[test]
    fn restriction_inclusions(seed in any::<u64>()) {
        holds(common::monotone_restriction(seed))?;
    }

    #[test]
    fn whole_segment_subregions(seed in any::<u64>()) {
        holds(common::monotone_columns(seed))?;
    }

    #[test]
    fn planted_duarte_paths_propagate(seed in any::<u64>()) {
        holds(common::planted_path(seed))?;
    }

    #[test]
    fn discovered_duarte_paths_propagate(seed in any::<u64>()) {
        holds(common::discovered_path(seed).map(|_| ()))?;
    }
}

#[test]
fn discovery_finds_paths() {
    let found = (0..200).filter(|&s| common::discovered_path(s).unwrap()).count();
    assert!(found > 100, "{found}");
}

#[test]
fn an_reachability_matches_brute_force() {
    use kcm_lab::exact::{an_reachability, an_region, REACH_BUDGET};
    use kcm_lab::{Exterior, UpdateFamily};
    let f = UpdateFamily::builtin("east2d").unwrap();
    for n in 1..=2 {
        let fast = an_reachability(&f, n, 1, REACH_BUDGET).unwrap();
        let region = std::sync::Arc::new(an_region(n, 1).unwrap());
        let (states, hit) = common::brute_force_reach(&f, &region, &Exterior::AllInfected, n as usize - 1);
        assert_eq!(fast.reachable_states, states.len());
        assert_eq!(fast.origin_infectable, hit);
    }
}
