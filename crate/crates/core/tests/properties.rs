mod common;

use proptest::prelude::*;

use nldt::openloop::{gini, weighted_gini};
use nldt::tree::NormalizationBounds;

#[test]
fn gini_matches_pair_counting_on_every_small_histogram() {
    common::check_gini_exhaustive();
}

proptest! {
    #[test]
    fn splitting_never_raises_impurity(left in prop::collection::vec(0u64..40, 3), right in prop::collection::vec(0u64..40, 3)) {
        let parent: Vec<u64> = left.iter().zip(&right).map(|(a, b)| a + b).collect();
        prop_assume!(parent.iter().sum::<u64>() > 0);
        prop_assert!(weighted_gini(&left, &right) <= gini(&parent).unwrap() + 1e-12);
    }

    #[test]
    fn normalization_round_trips(
        lo in prop::collection::vec(-100.0f64..100.0, 1..5),
        span in prop::collection::vec(1e-3f64..50.0, 5),
        t in prop::collection::vec(-0.5f64..1.5, 5),
    ) {
        let d = lo.len();
        let hi: Vec<f64> = lo.iter().zip(&span).map(|(l, s)| l + s).collect();
        let b = NormalizationBounds::new(lo.clone(), hi).unwrap();
        let x: Vec<f64> = (0..d).map(|j| lo[j] + t[j] * span[j]).collect();
        let xh = b.normalize(&x).unwrap();
        for j in 0..d {
            prop_assert!((xh[j] - (1.0 + t[j])).abs() < 1e-9);
        }
        let back = b.denormalize(&xh).unwrap();
        for j in 0..d {
            prop_assert!((back[j] - x[j]).abs() < 1e-9 * (1.0 + x[j].abs()));
        }
    }
}

#[test]
fn normalization_edge_cases() {
    common::check_normalization_cases();
}

#[test]
fn flatten_inject_identity_on_random_trees() {
    common::check_flatten_inject(1000);
}

#[test]
fn tiny_bilevel_matches_exhaustive_enumeration() {
    common::check_tiny_bilevel();
}

#[test]
fn seeded_pipelines_ignore_thread_count() {
    common::check_thread_independence();
}
