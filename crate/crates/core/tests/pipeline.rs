use std::path::PathBuf;

use ukm_core::data::{binarize, load_dataset, Encoding, EncodedSample};
use ukm_core::mlp::MlpConfig;
use ukm_core::pipeline::{
    class_scores, evaluate, run_protocol, train, Classifier, ExperimentSpec, HiddenSpec, ModelFile, ModelSpec, SplitSpec,
    TrainTrace,
};

fn fixture() -> Vec<EncodedSample> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/synthetic_ukm.csv");
    binarize(&load_dataset(path).unwrap(), 0.5).unwrap()
}

fn spec(model: ModelSpec) -> ExperimentSpec {
    ExperimentSpec {
        encoding: Encoding::default(),
        split: SplitSpec::default(),
        model,
    }
}

#[test]
fn anfis_training_is_byte_deterministic() {
    let samples = fixture();
    let s = spec(ModelSpec::anfis_default());
    let a = train(&s, &samples).unwrap();
    let b = train(&s, &samples).unwrap();
    assert_eq!(a.model.to_json(), b.model.to_json());
    let reloaded = ModelFile::from_json(&a.model.to_json()).unwrap();
    assert_eq!(reloaded.to_json(), a.model.to_json());

    let test = s.split.apply(&samples).unwrap().test;
    let r1 = evaluate(&a.model.classifier, &test).unwrap();
    let r2 = evaluate(&reloaded.classifier, &test).unwrap();
    assert_eq!(r1.to_json(), r2.to_json());
    assert_eq!(r1.accuracy, a.summary.test_accuracy);
}

#[test]
fn evaluation_rows_are_consistent() {
    let samples = fixture();
    let s = spec(ModelSpec::anfis_default());
    let out = train(&s, &samples).unwrap();
    let test = s.split.apply(&samples).unwrap().test;
    let report = evaluate(&out.model.classifier, &test).unwrap();
    assert_eq!(report.test_size, test.len());
    assert!((report.cap / 100.0 - report.accuracy).abs() < 1e-12);
    assert_eq!(report.classes.len(), 4);
    for row in &report.classes {
        assert!((row.tpr.unwrap() + row.fnr.unwrap() - 1.0).abs() < 1e-12);
        assert!((row.fpr.unwrap() + row.tnr.unwrap() - 1.0).abs() < 1e-12);
        let (scores, labels) = class_scores(&out.model.classifier, &test, row.class).unwrap();
        let curve = ukm_core::metrics::roc_curve(&scores, &labels).unwrap();
        assert_eq!(row.auc, Some(ukm_core::metrics::auc(&curve)));
    }
}

#[test]
fn oaa_anfis_and_swept_mlp_train_on_fixture() {
    let samples = fixture();
    let oaa = ModelSpec::Anfis {
        mf_shape: ukm_core::fuzzy::MfShape::Gbell,
        mfs_per_input: 2,
        output_mode: ukm_core::anfis::OutputMode::Oaa,
        order: Default::default(),
        training: Default::default(),
    };
    let out = train(&spec(oaa), &samples).unwrap();
    assert!(matches!(&out.model.classifier, Classifier::Anfis(c) if c.models.len() == 4));
    assert!(out.summary.test_accuracy > 0.8);

    let mlp = ModelSpec::Mlp {
        hidden: HiddenSpec::Sweep { min: 4, max: 6 },
        hidden_activation: ukm_core::mlp::Activation::Tansig,
        output_activation: ukm_core::mlp::Activation::Logsig,
        training: MlpConfig {
            epochs: 50,
            ..MlpConfig::default()
        },
    };
    let out = train(&spec(mlp), &samples).unwrap();
    match &out.trace {
        TrainTrace::Mlp { hidden, sweep, loss } => {
            assert_eq!(sweep.len(), 3);
            assert!((4..=6).contains(hidden));
            assert_eq!(loss.len(), 50);
        }
        other => panic!("unexpected trace {other:?}"),
    }
    assert!(out.summary.test_accuracy > 0.8);
}

#[test]
fn predefined_and_kfold_protocols() {
    let samples = fixture();
    let mut s = spec(ModelSpec::anfis_default());
    s.split = SplitSpec::Predefined { train_rows: 258 };
    let summary = run_protocol(&s, &samples).unwrap();
    assert_eq!(summary.runs.len(), 1);
    assert_eq!(summary.runs[0].test_size, 145);

    s.split = SplitSpec::Kfold { k: 5, fold: 0, seed: 3 };
    let summary = run_protocol(&s, &samples).unwrap();
    assert_eq!(summary.runs.len(), 5);
    assert_eq!(summary.runs.iter().map(|r| r.test_size).sum::<usize>(), samples.len());
    assert!(summary.max_cap >= summary.mean_cap);
    let wrong: usize = summary.runs.iter().map(|r| r.wrong).sum();
    assert!((summary.cap - 100.0 * (1.0 - wrong as f64 / samples.len() as f64)).abs() < 1e-9);
}

#[test]
fn model_file_rejects_other_versions() {
    let samples = fixture();
    let out = train(&spec(ModelSpec::mlp_default()), &samples).unwrap();
    let text = out.model.to_json().replacen("\"format_version\": 1", "\"format_version\": 99", 1);
    assert!(ModelFile::from_json(&text).is_err());
    assert!(ModelFile::from_json("{").is_err());
}
