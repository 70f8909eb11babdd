mod common;

use common::invariants::{self, ansatz_strategy};
use proptest::prelude::*;

fn check(r: invariants::Check) -> std::result::Result<(), TestCaseError> {
    r.map_err(TestCaseError::fail)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn superoperator_matches_column_construction(n in 1usize..=2, seed in any::<u64>()) {
        check(invariants::superoperator(n, seed))?;
    }

    #[test]
    fn dense_map_is_an_algebra_homomorphism(n in 1usize..=3, seed in any::<u64>()) {
        check(invariants::homomorphism(n, seed))?;
    }

    #[test]
    fn ansatz_states_are_density_matrices(cfg in ansatz_strategy(), seed in any::<u64>()) {
        check(invariants::ansatz_state(&cfg, seed))?;
    }

    #[test]
    fn channel_preserves_trace_and_hermiticity(n in 1usize..=2, seed in any::<u64>()) {
        check(invariants::channel(n, seed))?;
    }

    #[test]
    fn noisy_trajectories_stay_normalized(cfg in ansatz_strategy(), seed in any::<u64>()) {
        check(invariants::noisy_norm(&cfg, seed))?;
    }

    #[test]
    fn measurement_representations_agree(cfg in ansatz_strategy(), seed in any::<u64>()) {
        check(invariants::measurement_bridge(&cfg, seed))?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn fixed_seed_runs_are_reproducible(seed in any::<u64>()) {
        check(invariants::determinism(seed))?;
    }
}
