mod common;

use bankcf_core::cfgen::pareto::{crowding_by, nondominated_sort_points};
use bankcf_core::cfgen::{dominates, nondominated_sort, ObjectiveVector};
use common::{dominates_oracle, fronts_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sorted(mut fronts: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    for f in &mut fronts {
        f.sort_unstable();
    }
    fronts
}

#[test]
fn fast_sort_agrees_with_peeling_on_random_instances() {
    let mut r = ChaCha8Rng::seed_from_u64(7);
    for case in 0..200 {
        let n = r.random_range(1..=50);
        // Half the cases use a coarse grid so duplicates and ties appear.
        let coarse = case % 2 == 0;
        let points: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                (0..4)
                    .map(|_| if coarse { r.random_range(0..4) as f64 } else { r.random::<f64>() })
                    .collect()
            })
            .collect();
        assert_eq!(sorted(nondominated_sort_points(&points)), fronts_oracle(&points), "case {case}");
    }
}

#[test]
fn objective_vectors_sort_like_arrays() {
    let v = vec![
        ObjectiveVector { prediction_gap: 0.0, proximity: 0.2, sparsity: 1, implausibility: 0.1 },
        ObjectiveVector { prediction_gap: 0.0, proximity: 0.1, sparsity: 2, implausibility: 0.1 },
        ObjectiveVector { prediction_gap: 0.1, proximity: 0.3, sparsity: 2, implausibility: 0.2 },
    ];
    assert_eq!(sorted(nondominated_sort(&v)), vec![vec![0, 1], vec![2]]);
}

#[test]
fn crowding_boundaries_infinite_interior_finite() {
    let pts: Vec<Vec<f64>> = vec![vec![0.0, 1.0], vec![0.5, 0.5], vec![1.0, 0.0], vec![0.25, 0.75]];
    let front = vec![0, 1, 2, 3];
    let c = crowding_by(&pts, &front, None);
    assert!(c[0].is_infinite() && c[2].is_infinite());
    assert!(c[1].is_finite() && c[3].is_finite() && c[1] > 0.0);
}

proptest! {
    #[test]
    fn dominance_is_irreflexive_and_asymmetric(
        a in prop::collection::vec(0.0f64..1.0, 4),
        b in prop::collection::vec(0.0f64..1.0, 4),
    ) {
        prop_assert!(!dominates(&a, &a));
        prop_assert!(!(dominates(&a, &b) && dominates(&b, &a)));
        prop_assert_eq!(dominates(&a, &b), dominates_oracle(&a, &b));
    }
}
