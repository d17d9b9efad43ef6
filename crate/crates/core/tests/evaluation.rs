//! Leave-one-person-out protocol, baselines, cross-dataset runs and
//! failure accounting.

use std::collections::BTreeSet;

use eyecontact::classifier::LabelSource;
use eyecontact::evaluation::{
    failure_accounting, lopo_folds, mean_sd, run_cross_experiment, run_within_experiment,
    Breakdown, EvalError, ExperimentConfig, ExperimentReport,
};
use eyecontact::pipeline::{FrameRecord, PipelineConfig, VisibilityCategory};
use eyecontact::synthgen::{generate_dataset, GeneratorConfig};
use proptest::prelude::*;

fn dataset(n_persons: usize, frames: usize, seed: u64) -> Vec<FrameRecord> {
    generate_dataset(&GeneratorConfig {
        n_persons,
        frames_per_person: frames,
        seed,
        ..Default::default()
    })
    .unwrap()
}

fn cfg(label_source: LabelSource, breakdown: Breakdown) -> ExperimentConfig {
    ExperimentConfig {
        label_source,
        breakdown,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lopo_folds_partition_the_dataset(
        n_persons in 2usize..7, frames in 1usize..30, seed in any::<u64>(),
    ) {
        let data = dataset(n_persons, frames, seed);
        let folds = lopo_folds(&data).unwrap();
        prop_assert_eq!(folds.len(), n_persons);
        let mut seen = vec![0usize; data.len()];
        for f in &folds {
            for &i in &f.test {
                seen[i] += 1;
                prop_assert_eq!(&data[i].person_id, &f.test_person);
            }
            for &i in &f.train {
                prop_assert!(data[i].person_id != f.test_person);
            }
            prop_assert_eq!(f.train.len() + f.test.len(), data.len());
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let tests: BTreeSet<_> = folds.iter().map(|f| &f.test_person).collect();
        prop_assert_eq!(tests.len(), n_persons);
    }
}

#[test]
fn three_persons_give_three_folds() {
    let data = dataset(3, 20, 0);
    let folds = lopo_folds(&data).unwrap();
    let ids: Vec<_> = folds.iter().map(|f| f.test_person.as_str()).collect();
    assert_eq!(ids, ["P00", "P01", "P02"]);
    assert_eq!(lopo_folds(&dataset(1, 20, 0)), Err(EvalError::TooFewPersons(1)));
}

fn check_report_consistency(r: &ExperimentReport) {
    let excluded: usize = r.exclusions.values().sum();
    assert_eq!(r.frames_scored + excluded, r.frames_total, "{:?}", r.exclusions);
    for c in &r.cells {
        let mccs: Vec<f64> = c.folds.iter().map(|f| f.mcc).collect();
        let (m, s) = mean_sd(&mccs);
        assert_eq!((m, s), (c.mean, c.sd), "cell {}", c.id);
        assert!(c.mcc.abs() <= 1.0);
        if c.folds.is_empty() || c.folds.iter().all(|f| f.confusion.is_none()) {
            assert_eq!(c.mcc, 0.0);
            assert!(c.reason.is_some() || c.folds.iter().all(|f| f.reason.is_some()));
        }
    }
}

#[test]
fn ground_truth_within_run_is_strong_and_clustered_is_close() {
    let data = dataset(10, 500, 1);
    let gt = run_within_experiment(&data, &cfg(LabelSource::GroundTruth, Breakdown::None)).unwrap();
    let cl = run_within_experiment(&data, &cfg(LabelSource::Clustered, Breakdown::None)).unwrap();
    check_report_consistency(&gt);
    check_report_consistency(&cl);
    assert_eq!(gt.cells[0].folds.len(), 10);
    assert!(gt.mean >= 0.9, "gt {}", gt.mean);
    assert!((gt.mean - cl.mean).abs() <= 0.1, "gt {} clustered {}", gt.mean, cl.mean);
}

#[test]
fn human_baseline_dominates_over_many_seeds() {
    let (mut gt, mut cl) = (0.0, 0.0);
    let seeds = 20;
    for seed in 0..seeds {
        let data = dataset(6, 300, 100 + seed);
        gt += run_within_experiment(&data, &cfg(LabelSource::GroundTruth, Breakdown::None))
            .unwrap()
            .mean;
        cl += run_within_experiment(&data, &cfg(LabelSource::Clustered, Breakdown::None))
            .unwrap()
            .mean;
    }
    let (gt, cl) = (gt / seeds as f64, cl / seeds as f64);
    assert!(gt >= cl - 0.02, "gt {gt} clustered {cl}");
}

#[test]
fn cross_on_the_training_set_is_at_least_the_within_score() {
    let data = dataset(6, 400, 2);
    let c = cfg(LabelSource::GroundTruth, Breakdown::None);
    let within = run_within_experiment(&data, &c).unwrap();
    let cross = run_cross_experiment(&data, &data, &c).unwrap();
    check_report_consistency(&cross);
    assert!(cross.mcc >= within.mean, "cross {} within {}", cross.mcc, within.mean);
}

#[test]
fn cross_rejects_mismatched_feature_dims() {
    let a = dataset(2, 20, 0);
    let b = generate_dataset(&GeneratorConfig {
        n_persons: 2,
        frames_per_person: 20,
        feature_dim: 16,
        ..Default::default()
    })
    .unwrap();
    let r = run_cross_experiment(&a, &b, &ExperimentConfig::default());
    assert!(matches!(r, Err(EvalError::FeatureDimMismatch { train: 64, test: 16 })));
}

#[test]
fn breakdown_cells_are_complete_and_marked() {
    let data = generate_dataset(&GeneratorConfig {
        n_persons: 4,
        frames_per_person: 300,
        visibility_weights: [0.4, 0.1, 0.1, 0.1, 0.1, 0.1, 0.0, 0.1],
        ..Default::default()
    })
    .unwrap();
    let r = run_within_experiment(&data, &cfg(LabelSource::Clustered, Breakdown::VisibilityCategory))
        .unwrap();
    check_report_consistency(&r);
    let names: Vec<_> = r.cells.iter().map(|c| c.id.as_str()).collect();
    let expected: Vec<_> = VisibilityCategory::ALL.iter().map(|c| c.name()).collect();
    assert_eq!(names, expected);
    let no_face = r.cell("No face").unwrap();
    assert_eq!(no_face.mcc, 0.0);
    assert_eq!(no_face.reason.as_deref(), Some("all-frames-excluded"));
    assert_eq!(r.cell("Partial face no eyes 1 mouth").unwrap().reason.as_deref(), Some("no-frames"));

    let r = run_within_experiment(&data, &cfg(LabelSource::GroundTruth, Breakdown::HeadposeBucket)).unwrap();
    check_report_consistency(&r);
    assert_eq!(r.cells.len(), 25);
}

#[test]
fn reports_are_deterministic() {
    let data = dataset(4, 200, 3);
    let c = ExperimentConfig {
        breakdown: Breakdown::HeadposeBucket,
        seed: 77,
        ..Default::default()
    };
    let a = run_within_experiment(&data, &c).unwrap();
    let b = run_within_experiment(&data, &c).unwrap();
    assert_eq!(a, b);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
}

#[test]
fn failure_rates_follow_landmark_visibility() {
    let data = generate_dataset(&GeneratorConfig {
        visibility_weights: [0.7, 0.0, 0.0, 0.0, 0.0, 0.1, 0.1, 0.1],
        seed: 4,
        ..Default::default()
    })
    .unwrap();
    let acc = failure_accounting(&data, &PipelineConfig::default());
    let rate = |c: VisibilityCategory| acc.iter().find(|f| f.category == c).unwrap().rate;
    assert_eq!(rate(VisibilityCategory::NoFace), 1.0);
    assert_eq!(rate(VisibilityCategory::WholeFaceAllLandmarks), 0.0);
    let excluded: usize = acc.iter().map(|f| f.excluded).sum();
    let overall = excluded as f64 / data.len() as f64;
    assert!((overall - 0.30).abs() <= 0.02, "overall exclusion {overall}");
}
