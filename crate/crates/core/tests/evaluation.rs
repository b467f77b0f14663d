mod common;

use bankcf_core::cfgen::gower_distance;
use bankcf_core::dataset::FeatureSpec;
use bankcf_core::evaluation::{
    classification_report, DesiderataConfig, DesiderataScorer, DistanceKind,
};
use common::{confusion_oracle, table, Desk};

#[test]
fn classification_report_matches_recount() {
    let d = Desk::new(0);
    for part in [&d.data.split.out_of_sample, &d.data.split.out_of_time] {
        let report = classification_report(&d.model, part).unwrap();
        let pred: Vec<u8> = (0..part.len()).map(|i| d.model.predict_label(part.row_values(i)).unwrap()).collect();
        let (tp, fp, tn, fn_) = confusion_oracle(&pred, &part.labels());
        let c = report.confusion;
        assert_eq!((c.tp, c.fp, c.tn, c.fn_), (tp, fp, tn, fn_));
        assert_eq!(report.n, part.len());
    }
}

fn five() -> Vec<FeatureSpec> {
    (0..5).map(|j| FeatureSpec::numeric(&format!("f{j}"), 0.0, 10.0)).collect()
}

/// Ten rows on a line, labelled by the first coordinate; the scorer only
/// needs the model's labels to agree on the two probe points.
fn scorer_fixture() -> (bankcf_core::trees::EnsembleModel, bankcf_core::dataset::DataTable) {
    use bankcf_core::balancing::{LabeledMatrix, SampleWeightVector};
    use bankcf_core::trees::{fit_kind, ModelKind, TrainConfig};
    let rows: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64, 0.0, 0.0, 0.0, 10.0 - i as f64]).collect();
    let labels: Vec<u8> = rows.iter().map(|r| u8::from(r[0] >= 5.0)).collect();
    let t = table(five(), &rows, &labels);
    let m = LabeledMatrix::from_table(&t).unwrap();
    let cfg = TrainConfig::for_kind(ModelKind::DecisionTree, 0);
    let model = fit_kind(ModelKind::DecisionTree, &m, &SampleWeightVector::uniform(m.n_rows()), &cfg)
        .unwrap()
        .with_schema(t.schema().to_vec())
        .unwrap();
    (model, t)
}

#[test]
fn identical_point_scores_zero_and_invalid() {
    let (model, t) = scorer_fixture();
    let s = DesiderataScorer::new(&model, &t, DesiderataConfig::default()).unwrap();
    let x = t.row_values(7).to_vec();
    let r = s.score_values(&x, &x).unwrap();
    assert!(!r.valid_flip);
    assert!(r.valid_threshold);
    assert_eq!((r.proximity, r.sparsity), (0.0, 0));
}

#[test]
fn two_of_five_changed() {
    let (model, t) = scorer_fixture();
    let s = DesiderataScorer::new(&model, &t, DesiderataConfig::default()).unwrap();
    let factual = vec![8.0, 0.0, 0.0, 0.0, 2.0];
    let cf = vec![2.0, 0.0, 0.0, 0.0, 8.0];
    let r = s.score_values(&factual, &cf).unwrap();
    assert!(r.valid_flip);
    assert_eq!(r.sparsity, 2);
    // Features 1..4 are constant in the reference data and therefore unchanged.
    let g = gower_distance(&factual, &cf, &model.schema).unwrap();
    assert!((r.proximity - g).abs() < 1e-15);
    assert!((r.proximity - 2.0 * 0.6 / 5.0).abs() < 1e-12);
    assert!(!DesiderataScorer::new(&model, &t, DesiderataConfig { epsilon: 0.2, ..Default::default() })
        .unwrap()
        .score_values(&factual, &cf)
        .unwrap()
        .valid_threshold);
}

#[test]
fn plausibility_of_a_reference_row_with_one_neighbour_is_zero() {
    let (model, t) = scorer_fixture();
    let cfg = DesiderataConfig { k_plaus: 1, ..Default::default() };
    let s = DesiderataScorer::new(&model, &t, cfg).unwrap();
    let r = s.score_values(&[8.0, 0.0, 0.0, 0.0, 2.0], t.row_values(3)).unwrap();
    assert_eq!(r.plausibility, 0.0);
    // Halfway between two rows: nearest is one step on two features.
    let r = s.score_values(&[8.0, 0.0, 0.0, 0.0, 2.0], &[3.5, 0.0, 0.0, 0.0, 6.5]).unwrap();
    assert!((r.plausibility - 2.0 * 0.05 / 5.0).abs() < 1e-12);
}

#[test]
fn heom_proximity_is_unnormalised_gower() {
    let (model, t) = scorer_fixture();
    let cfg = DesiderataConfig { distance: DistanceKind::Heom, epsilon: 5.0, ..Default::default() };
    let s = DesiderataScorer::new(&model, &t, cfg).unwrap();
    let r = s.score_values(&[8.0, 0.0, 0.0, 0.0, 2.0], &[2.0, 0.0, 0.0, 0.0, 8.0]).unwrap();
    assert!((r.proximity - 1.2).abs() < 1e-12);
}

#[test]
fn bad_config_rejected() {
    let (model, t) = scorer_fixture();
    assert!(DesiderataScorer::new(&model, &t, DesiderataConfig { k_plaus: 0, ..Default::default() }).is_err());
    assert!(DesiderataScorer::new(&model, &t, DesiderataConfig { epsilon: -1.0, ..Default::default() }).is_err());
}
