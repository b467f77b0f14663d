mod common;

use bankcf_core::balancing::{LabeledMatrix, SampleWeightVector};
use bankcf_core::cfgen::moc::{evolve_in, initial_population};
use bankcf_core::cfgen::nice::nearest_unlike_neighbour;
use bankcf_core::cfgen::pareto::nondominated_sort_points;
use bankcf_core::cfgen::{
    dominates, gower_distance, heom_distance, moc_in, nice_in, whatif_in, CfContext, CfQuery, MocConfig,
};
use bankcf_core::dataset::{DataTable, FeatureSpec};
use bankcf_core::trees::{fit_kind, EnsembleModel, ModelKind, TrainConfig};
use common::{table, Desk};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::OnceLock;

fn desk() -> &'static Desk {
    static DESK: OnceLock<Desk> = OnceLock::new();
    DESK.get_or_init(|| Desk::new(0))
}

fn differing(a: &[f64], b: &[f64]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}

#[test]
fn whatif_matches_full_scan() {
    let d = desk();
    let ctx = d.context();
    let schema = &d.model.schema;
    let reference = d.data.reference();
    for factual in d.failing_factuals(15) {
        let q = d.query(&factual);
        let got = whatif_in(&ctx, &q).unwrap();
        let mut scan: Vec<(f64, usize)> = (0..reference.len())
            .filter(|&i| d.model.predict_label(reference.row_values(i)).unwrap() == q.desired_class)
            .map(|i| (gower_distance(reference.row_values(i), &factual, schema).unwrap(), i))
            .collect();
        scan.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        let expected: Vec<&[f64]> = scan.iter().take(5).map(|&(_, i)| reference.row_values(i)).collect();
        let got: Vec<&[f64]> = got.counterfactuals.iter().map(|c| c.values.as_slice()).collect();
        assert_eq!(got, expected);
    }
}

#[test]
fn nice_stays_within_the_unlike_neighbour() {
    let d = desk();
    let ctx = d.context();
    let schema = &d.model.schema;
    let reference = d.data.reference();
    for factual in d.failing_factuals(15) {
        let q = d.query(&factual);
        let nun = (0..reference.len())
            .filter(|&i| d.model.predict_label(reference.row_values(i)).unwrap() == q.desired_class)
            .map(|i| (heom_distance(reference.row_values(i), &factual, schema).unwrap(), i))
            .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)))
            .map(|(_, i)| i)
            .unwrap();
        assert_eq!(nearest_unlike_neighbour(&ctx, &q), Some(nun));
        let nun = reference.row_values(nun);
        let out = nice_in(&ctx, &q).unwrap();
        assert!(!out.is_empty(), "{:?}", out.reason);
        for cf in &out.counterfactuals {
            assert!(q.flips(&d.model, &cf.values));
            assert!(cf.sparsity() <= differing(&factual, nun));
            for j in 0..factual.len() {
                assert!(cf.values[j] == factual[j] || cf.values[j] == nun[j]);
            }
        }
        // The closest WhatIf row is the unlike neighbour, so NICE never
        // needs more changes than it.
        let wi = whatif_in(&ctx, &q).unwrap();
        assert!(wi.counterfactuals[0].sparsity() >= out.counterfactuals[0].sparsity());
    }
}

#[test]
fn frozen_features_are_never_changed() {
    let d = desk();
    let ctx = d.context();
    let frozen = d.model.feature_names[0].clone();
    let cfg = MocConfig { generations: 30, seed: 3, ..MocConfig::default() };
    for factual in d.failing_factuals(3) {
        let q = d.query(&factual).with_frozen([frozen.as_str()]);
        let outs = [whatif_in(&ctx, &q).unwrap(), nice_in(&ctx, &q).unwrap(), moc_in(&ctx, &q, &cfg, None).unwrap()];
        for out in outs {
            for cf in &out.counterfactuals {
                assert_eq!(cf.values[0], factual[0]);
                assert!(!cf.changed_features.contains(&frozen));
            }
        }
    }
}

#[test]
fn moc_results_are_valid_and_mutually_nondominated() {
    let d = desk();
    let ctx = d.context();
    for (i, factual) in d.failing_factuals(4).into_iter().enumerate() {
        let q = d.query(&factual);
        let cfg = MocConfig { seed: i as u64, ..MocConfig::default() };
        let out = moc_in(&ctx, &q, &cfg, None).unwrap();
        assert!(!out.is_empty(), "{:?}", out.reason);
        let pts: Vec<[f64; 4]> = out.counterfactuals.iter().map(|c| c.objectives.as_array()).collect();
        for (a, pa) in pts.iter().enumerate() {
            assert!(q.flips(&d.model, &out.counterfactuals[a].values));
            for pb in &pts {
                assert!(!dominates(pb, pa));
            }
        }
    }
}

#[test]
fn moc_elitism_keeps_the_front() {
    let d = desk();
    let ctx = d.context();
    let factual = d.failing_factuals(1).remove(0);
    let q = d.query(&factual);
    let cfg = MocConfig { seed: 9, ..MocConfig::default() };
    let mut pop = initial_population(&ctx, &q, &cfg).unwrap();
    for _ in 0..25 {
        let old: Vec<[f64; 4]> = pop.first_front().into_iter().map(|i| pop.objective_points()[i]).collect();
        pop = evolve_in(&ctx, pop, &q, &cfg, 1, None).unwrap();
        let pts = pop.objective_points();
        let fronts = nondominated_sort_points(&pts.iter().map(|p| p.to_vec()).collect::<Vec<_>>());
        assert_eq!(fronts[0].len(), pop.first_front().len());
        for &i in &fronts[0] {
            assert!(old.iter().all(|o| !dominates(o, &pts[i])), "generation {}", pop.generation);
        }
    }
}

fn toy() -> (EnsembleModel, DataTable) {
    let schema = vec![FeatureSpec::numeric("x", 0.0, 1.0), FeatureSpec::numeric("y", 0.0, 1.0)];
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let rows: Vec<Vec<f64>> = (0..=100).map(|i| vec![i as f64 / 100.0, r.random()]).collect();
    let labels: Vec<u8> = rows.iter().map(|v| u8::from(v[0] <= 0.6)).collect();
    let t = table(schema, &rows, &labels);
    let m = LabeledMatrix::from_table(&t).unwrap();
    let model = fit_kind(
        ModelKind::DecisionTree,
        &m,
        &SampleWeightVector::uniform(m.n_rows()),
        &TrainConfig::for_kind(ModelKind::DecisionTree, 0),
    )
    .unwrap()
    .with_schema(t.schema().to_vec())
    .unwrap();
    (model, t)
}

#[test]
fn moc_finds_the_one_dimensional_boundary() {
    let (model, t) = toy();
    let ctx = CfContext::new(&model, &t, 5).unwrap();
    let q = CfQuery::flip(&model, vec![0.3, 0.5]).unwrap();
    assert_eq!(q.desired_class, 0);
    let out = moc_in(&ctx, &q, &MocConfig::default(), None).unwrap();
    let best = &out.counterfactuals[0];
    assert_eq!(best.sparsity(), 1);
    assert_eq!(best.values[1], 0.5);
    // The boundary sits at 0.605; the sparsest, closest point should hug it.
    assert!((0.605..0.7).contains(&best.values[0]), "{:?}", best.values);
}

#[test]
fn desired_class_already_predicted_is_trivial_for_whatif() {
    let (model, t) = toy();
    let ctx = CfContext::new(&model, &t, 5).unwrap();
    let q = CfQuery::flip(&model, vec![0.9, 0.5]).unwrap();
    assert_eq!(q.desired_class, 1);
    let out = whatif_in(&ctx, &q).unwrap();
    for cf in &out.counterfactuals {
        assert!(cf.values[0] <= 0.6);
    }
}
