use std::collections::BTreeSet;

use proptest::prelude::*;
use refseq::classify::{
    accuracy, cross_validate, fit_predict, knn_predict, stratified_folds, Classifier, CvConfig, KnnConfig,
    PipelineConfig,
};
use refseq::dataset::parse_dataset_str;
use refseq::features::{export_arff, export_csv, read_csv, transform, FeatureMatrix};
use refseq::patterns::PatternPreset;
use refseq::refselect::{select_all, select_references, SelectionMethod};
use refseq::seq::{ClassId, SequenceDataset};
use refseq::similarity::{evaluate, SimilaritySpec};
use refseq::synth::{shuffle_labels, synth_gen};

fn config(selection: SelectionMethod, cv: CvConfig) -> PipelineConfig {
    PipelineConfig {
        selection,
        similarity: SimilaritySpec::JaccardLcs,
        classifier: Classifier::Knn { k: 1 },
        cv,
        skip_failed_folds: false,
    }
}

fn disjoint_alphabets() -> SequenceDataset {
    let mut text = String::new();
    for i in 0..12 {
        text.push_str(&format!("A\ta{} a{} a{}\n", i % 3, (i + 1) % 4, i % 5));
        text.push_str(&format!("B\tb{} b{} b{} b{}\n", i % 4, i % 3, (i + 2) % 5, i % 2));
    }
    parse_dataset_str(&text).unwrap()
}

#[test]
fn disjoint_class_alphabets_are_perfectly_separated() {
    let ds = disjoint_alphabets();
    let r = cross_validate(&ds, &config(SelectionMethod::All, CvConfig { folds: 5, repeats: 2, seed: 1 })).unwrap();
    assert_eq!(r.mean_accuracy, 1.0);
    assert_eq!(r.folds.len(), 10);
}

#[test]
fn leave_one_out() {
    let ds = disjoint_alphabets();
    let n = ds.len();
    let r = cross_validate(&ds, &config(SelectionMethod::All, CvConfig { folds: n, repeats: 1, seed: 0 })).unwrap();
    assert_eq!(r.folds.len(), n);
    assert!(r.folds.iter().all(|f| f.n_test == 1 && (f.accuracy == 0.0 || f.accuracy == 1.0)));
}

#[test]
fn references_never_come_from_the_test_fold() {
    let ds = synth_gen(3, 10, 4, 5, 2).unwrap();
    for sel in [SelectionMethod::All, SelectionMethod::Gahc { pointnum: None }, SelectionMethod::mht(0.2)] {
        let cfg = config(sel, CvConfig { folds: 4, repeats: 2, seed: 3 });
        let r = cross_validate(&ds, &cfg).unwrap();
        for f in &r.folds {
            let test: BTreeSet<usize> = f.test_indices.iter().copied().collect();
            assert!(!f.reference_origins.is_empty());
            assert!(f.reference_origins.iter().all(|i| !test.contains(i)));
            assert_eq!(f.reference_origins.len(), f.n_references);
        }
    }
}

#[test]
fn mean_is_the_average_of_fold_accuracies() {
    let ds = synth_gen(2, 15, 3, 8, 4).unwrap();
    let r = cross_validate(&ds, &config(SelectionMethod::Gahc { pointnum: None }, CvConfig::default())).unwrap();
    let mean = r.folds.iter().map(|f| f.accuracy).sum::<f64>() / r.folds.len() as f64;
    assert_eq!(r.mean_accuracy, mean);
    assert!(r.folds.iter().all(|f| (0.0..=1.0).contains(&f.accuracy)));
    let total: usize = r.confusion.iter().flatten().sum();
    assert_eq!(total, ds.len() * 5);
}

#[test]
fn pattern_presets_run_through_the_pipeline() {
    let ds = synth_gen(2, 15, 4, 4, 5).unwrap();
    for preset in [PatternPreset::Fsp, PatternPreset::Closed] {
        let mut cfg = config(SelectionMethod::Pattern { preset }, CvConfig { folds: 3, repeats: 1, seed: 0 });
        cfg.similarity = preset.similarity();
        let r = cross_validate(&ds, &cfg).unwrap();
        assert_eq!(r.folds.len(), 3);
        assert!(r.folds.iter().all(|f| f.n_references > 0 && f.reference_origins.is_empty()));
    }
}

#[test]
fn failed_folds_abort_or_are_skipped() {
    // identical sequences in both classes leave nothing significant
    let ds = parse_dataset_str(&"A\tx y\nB\tx y\n".repeat(6)).unwrap();
    let mut cfg = config(SelectionMethod::mht(0.05), CvConfig { folds: 3, repeats: 1, seed: 0 });
    let err = cross_validate(&ds, &cfg).unwrap_err();
    assert!(err.to_string().contains("fold"));
    cfg.skip_failed_folds = true;
    assert!(cross_validate(&ds, &cfg).is_err());

    let mut text = "A\tx y\nB\tx y\n".repeat(3);
    text.push_str(&"A\ta a a\nB\tb b b\n".repeat(6));
    let mixed = parse_dataset_str(&text).unwrap();
    let r = cross_validate(&mixed, &cfg).unwrap();
    assert_eq!(r.folds.len() + r.skipped.len(), 3);
}

#[test]
fn shuffled_labels_fall_to_chance() {
    let ds = synth_gen(2, 40, 5, 10, 11).unwrap();
    let cfg = config(SelectionMethod::All, CvConfig { folds: 5, repeats: 2, seed: 11 });
    let mut total = 0.0;
    for s in 0..8 {
        total += cross_validate(&shuffle_labels(&ds, s), &cfg).unwrap().mean_accuracy;
    }
    let mean = total / 8.0;
    assert!((mean - 0.5).abs() < 0.1, "{mean}");
}

fn matrix_from_table(values: Vec<Vec<f64>>, labels: &[String], classes: &[String], spec: SimilaritySpec) -> FeatureMatrix {
    let cols = values.first().map_or(0, Vec::len);
    FeatureMatrix {
        rows: values.len(),
        cols,
        values: values.concat(),
        labels: labels.iter().map(|l| classes.iter().position(|c| c == l).unwrap()).collect(),
        feature_names: vec![],
        spec,
    }
}

#[test]
fn exported_csv_reclassifies_identically() {
    let ds = synth_gen(2, 20, 4, 6, 8).unwrap();
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) = (0..ds.len()).partition(|i| i % 4 != 0);
    let train = ds.subset(&train_idx);
    let test = ds.subset(&test_idx);
    let spec = SimilaritySpec::JaccardLcs;
    let refs = select_all(&train.instances).unwrap();
    let xtrain = transform(&train.instances, &refs, &spec, None).unwrap();
    let xtest = transform(&test.instances, &refs, &spec, None).unwrap();
    let clf = Classifier::Gnb;
    let direct = fit_predict(&xtrain, &xtest, &clf).unwrap();

    let dir = tempfile::tempdir().unwrap();
    export_csv(&xtrain, &ds.classes, dir.path().join("train.csv")).unwrap();
    export_csv(&xtest, &ds.classes, dir.path().join("test.csv")).unwrap();
    export_arff(&xtest, &ds.classes, "test", dir.path().join("test.arff")).unwrap();
    let load = |name: &str| {
        let t = read_csv(std::fs::File::open(dir.path().join(name)).unwrap()).unwrap();
        matrix_from_table(t.values, &t.labels, &ds.classes, spec)
    };
    let (rtrain, rtest) = (load("train.csv"), load("test.csv"));
    assert_eq!(rtrain.values, xtrain.values);
    let reloaded = fit_predict(&rtrain, &rtest, &clf).unwrap();
    assert_eq!(reloaded, direct);
    assert_eq!(accuracy(&reloaded, &rtest.labels), accuracy(&direct, &xtest.labels));
}

#[test]
fn transform_requires_matching_specs_at_prediction() {
    let ds = synth_gen(2, 5, 3, 2, 1).unwrap();
    let refs = select_all(&ds.instances).unwrap();
    let a = transform(&ds.instances, &refs, &SimilaritySpec::JaccardLcs, None).unwrap();
    let b = transform(&ds.instances, &refs, &SimilaritySpec::LcsMin, None).unwrap();
    assert!(fit_predict(&a, &b, &Classifier::default()).is_err());
}

#[test]
fn selection_dispatch_matches_direct_calls() {
    let ds = synth_gen(2, 10, 4, 4, 6).unwrap();
    let spec = SimilaritySpec::JaccardLcs;
    let sel = select_references(&ds.instances, &SelectionMethod::Gahc { pointnum: None }, &spec).unwrap();
    assert_eq!(sel.references.len(), 2);
    assert!(sel.mht_report.is_none());
    let sel = select_references(&ds.instances, &SelectionMethod::mht(0.05), &spec).unwrap();
    let rep = sel.mht_report.unwrap();
    assert_eq!(rep.entries.len(), ds.len());
    assert_eq!(rep.entries.iter().filter(|e| e.kept).count(), sel.references.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn folds_keep_class_proportions(
        labels in prop::collection::vec(0usize..3, 6..60),
        folds in 2usize..6,
        seed in any::<u64>(),
    ) {
        prop_assume!(labels.len() >= folds);
        let cfg = CvConfig { folds, repeats: 2, seed };
        let plan = stratified_folds(&labels, &cfg).unwrap();
        for r in 0..2 {
            let mut sizes = Vec::new();
            for f in 0..folds {
                let test = plan.test_indices(r, f);
                sizes.push(test.len());
                for c in 0..3 {
                    let n_c = labels.iter().filter(|&&l| l == c).count();
                    let in_fold = test.iter().filter(|&&i| labels[i] == c).count();
                    let expected = n_c as f64 / folds as f64;
                    prop_assert!((in_fold as f64 - expected).abs() < 1.0);
                }
            }
            let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
            prop_assert!(hi - lo <= 1);
        }
        prop_assert_eq!(plan, stratified_folds(&labels, &cfg).unwrap());
    }

    #[test]
    fn transform_entries_match_scalar_calls(seed in 0u64..1000, pick in 0usize..1000) {
        let ds = synth_gen(2, 4, 3, 3, seed).unwrap();
        let refs = select_all(&ds.instances).unwrap();
        for spec in [SimilaritySpec::JaccardLcs, SimilaritySpec::Sf3, SimilaritySpec::Ssk { n: 2, lambda: 0.5 }] {
            let m = transform(&ds.instances, &refs, &spec, None).unwrap();
            let (i, j) = (pick % m.rows, (pick / 7) % m.cols);
            let v = evaluate(&spec, &ds.instances[i].sequence, &refs.references[j]).unwrap();
            prop_assert_eq!(m.get(i, j), v);
            if spec.is_symmetric() {
                prop_assert_eq!(m.get(i, j), m.get(j, i));
            }
        }
    }

    #[test]
    fn knn_over_all_rows_is_the_majority(
        rows in prop::collection::vec((prop::collection::vec(0.0f64..1.0, 3), 0usize..3), 1..20),
        query in prop::collection::vec(-1.0f64..2.0, 3),
    ) {
        let labels: Vec<ClassId> = rows.iter().map(|r| r.1).collect();
        let m = FeatureMatrix {
            rows: rows.len(),
            cols: 3,
            values: rows.iter().flat_map(|r| r.0.clone()).collect(),
            labels: labels.clone(),
            feature_names: vec![],
            spec: SimilaritySpec::JaccardLcs,
        };
        let mut counts = [0usize; 3];
        for &l in &labels {
            counts[l] += 1;
        }
        let best = *counts.iter().max().unwrap();
        let majority = counts.iter().position(|&c| c == best).unwrap();
        prop_assert_eq!(knn_predict(&m, &query, &KnnConfig { k: rows.len() }).unwrap(), majority);
    }
}
