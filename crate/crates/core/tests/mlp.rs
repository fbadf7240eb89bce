use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use ukm_core::argmax;
use ukm_core::data::{binarize, EncodedSample, KnowledgeLevel, RawSample};
use ukm_core::mlp::{logsig, tansig, train_backprop, Activation, Batch, Loss, MlpConfig, MlpModel};

const ACTIVATIONS: [Activation; 3] = [Activation::Tansig, Activation::Logsig, Activation::Linear];

fn random_batch(rng: &mut ChaCha8Rng, n: usize, one_hot: bool) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let x = (0..n).map(|_| (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let t = (0..n)
        .map(|_| {
            if one_hot {
                let k = rng.gen_range(0..4);
                (0..4).map(|c| if c == k { 1.0 } else { 0.0 }).collect()
            } else {
                (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect()
            }
        })
        .collect();
    (x, t)
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for draw in 0..150u64 {
        let hidden = ACTIVATIONS[draw as usize % 3];
        let (output, loss) = match draw % 4 {
            0 => (Activation::Logsig, Loss::CrossEntropy),
            1 => (Activation::Logsig, Loss::Mse),
            2 => (Activation::Tansig, Loss::Mse),
            _ => (Activation::Linear, Loss::Mse),
        };
        let model = MlpModel::new(&[5, 3, 4], &[hidden, output], draw).unwrap();
        let (x, t) = random_batch(&mut rng, 4, loss == Loss::CrossEntropy);
        let grad = model.gradient(&x, &t, loss).unwrap();
        let h = 1e-6;
        let probe = |l: usize, i: usize, j: Option<usize>, delta: f64| {
            let mut m = model.clone();
            match j {
                Some(j) => m.layers[l].weights[i][j] += delta,
                None => m.layers[l].biases[i] += delta,
            }
            m.loss(&x, &t, loss).unwrap()
        };
        let check = |analytic: f64, numeric: f64, what: &str| {
            let scale = analytic.abs().max(numeric.abs());
            assert!(
                (analytic - numeric).abs() <= 1e-4 * scale + 1e-9,
                "draw {draw} {what}: analytic {analytic} numeric {numeric}"
            );
        };
        for l in 0..2 {
            for i in 0..model.layers[l].weights.len() {
                for j in 0..model.layers[l].weights[i].len() {
                    let numeric = (probe(l, i, Some(j), h) - probe(l, i, Some(j), -h)) / (2.0 * h);
                    check(grad.weights[l][i][j], numeric, &format!("w[{l}][{i}][{j}]"));
                }
                let numeric = (probe(l, i, None, h) - probe(l, i, None, -h)) / (2.0 * h);
                check(grad.biases[l][i], numeric, &format!("b[{l}][{i}]"));
            }
        }
    }
}

fn separable_samples() -> Vec<EncodedSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let raw: Vec<RawSample> = (0..60)
        .map(|i| {
            let level = i % 4;
            RawSample {
                stg: rng.gen_range(0.0..1.0),
                scg: rng.gen_range(0.0..1.0),
                str_: rng.gen_range(0.0..1.0),
                lpr: if level % 2 == 1 { 0.9 } else { 0.1 },
                peg: if level >= 2 { 0.9 } else { 0.1 },
                uns: KnowledgeLevel::from_index(level).unwrap(),
            }
        })
        .collect();
    binarize(&raw, 0.5).unwrap()
}

fn train_accuracy(model: &MlpModel, samples: &[EncodedSample]) -> f64 {
    let correct = samples
        .iter()
        .filter(|s| model.predict(&s.features).unwrap().0 == s.class_index)
        .count();
    correct as f64 / samples.len() as f64
}

#[test]
fn separable_toy_reaches_full_train_accuracy() {
    let samples = separable_samples();
    for (hidden, output, batch) in [
        (Activation::Tansig, Activation::Logsig, Batch::Stochastic),
        (Activation::Logsig, Activation::Logsig, Batch::Stochastic),
        (Activation::Tansig, Activation::Tansig, Batch::Full),
    ] {
        let model = MlpModel::classifier(5, 8, hidden, output, 3).unwrap();
        let config = MlpConfig {
            epochs: 500,
            learn_rate: if batch == Batch::Full { 0.5 } else { 0.1 },
            batch,
            ..MlpConfig::default()
        };
        let (trained, _) = train_backprop(model, &samples, &config).unwrap();
        assert_eq!(train_accuracy(&trained, &samples), 1.0, "{hidden:?}/{output:?}/{batch:?}");
    }
}

#[test]
fn full_batch_small_steps_never_increase_loss() {
    let samples = separable_samples();
    for (hidden, output, loss) in [
        (Activation::Tansig, Activation::Logsig, Loss::Mse),
        (Activation::Logsig, Activation::Tansig, Loss::Mse),
        (Activation::Tansig, Activation::Logsig, Loss::CrossEntropy),
    ] {
        let model = MlpModel::classifier(5, 6, hidden, output, 4).unwrap();
        let inputs: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
        let targets: Vec<Vec<f64>> = samples.iter().map(|s| model.encode_target(&s.oaa_targets)).collect();
        let initial = model.loss(&inputs, &targets, loss).unwrap();
        let config = MlpConfig {
            epochs: 200,
            learn_rate: 1e-4,
            batch: Batch::Full,
            loss,
            ..MlpConfig::default()
        };
        let (_, trace) = train_backprop(model, &samples, &config).unwrap();
        assert!(trace[0] <= initial);
        for pair in trace.windows(2) {
            assert!(pair[1] <= pair[0], "{pair:?}");
        }
    }
}

#[test]
fn training_is_deterministic_per_seed() {
    let samples = separable_samples();
    let config = MlpConfig {
        epochs: 30,
        seed: 9,
        ..MlpConfig::default()
    };
    let run = || {
        let model = MlpModel::classifier(5, 7, Activation::Tansig, Activation::Logsig, 9).unwrap();
        train_backprop(model, &samples, &config).unwrap()
    };
    let (a, ta) = run();
    let (b, tb) = run();
    assert_eq!(ta, tb);
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());

    let other = MlpConfig { seed: 10, ..config.clone() };
    let model = MlpModel::classifier(5, 7, Activation::Tansig, Activation::Logsig, 9).unwrap();
    let (_, tc) = train_backprop(model, &samples, &other).unwrap();
    assert_ne!(ta, tc);
}

#[test]
fn zero_learn_rate_leaves_weights_unchanged() {
    let samples = separable_samples();
    let model = MlpModel::classifier(5, 4, Activation::Tansig, Activation::Logsig, 5).unwrap();
    for batch in [Batch::Full, Batch::Stochastic] {
        let config = MlpConfig {
            epochs: 3,
            learn_rate: 0.0,
            batch,
            ..MlpConfig::default()
        };
        let (trained, trace) = train_backprop(model.clone(), &samples, &config).unwrap();
        assert_eq!(trained, model);
        assert!(trace.windows(2).all(|w| w[0] == w[1]));
    }
}

#[test]
fn cross_entropy_requires_logsig_output() {
    let samples = separable_samples();
    let model = MlpModel::classifier(5, 4, Activation::Tansig, Activation::Tansig, 5).unwrap();
    let config = MlpConfig {
        loss: Loss::CrossEntropy,
        ..MlpConfig::default()
    };
    assert!(train_backprop(model, &samples, &config).is_err());
    let model = MlpModel::classifier(5, 4, Activation::Tansig, Activation::Logsig, 5).unwrap();
    assert!(train_backprop(model, &[], &MlpConfig::default()).is_err());
}

proptest! {
    #[test]
    fn activation_ranges(x in -700.0f64..700.0) {
        let t = tansig(x);
        let l = logsig(x);
        prop_assert!((-1.0..=1.0).contains(&t));
        prop_assert!((0.0..=1.0).contains(&l));
        if x.abs() < 15.0 {
            prop_assert!(t > -1.0 && t < 1.0);
            prop_assert!(l > 0.0 && l < 1.0);
        }
    }

    #[test]
    fn argmax_ignores_common_offsets(scores in prop::collection::vec(-10.0f64..10.0, 4), c in -100.0f64..100.0) {
        let shifted: Vec<f64> = scores.iter().map(|s| s + c).collect();
        let k = argmax(&scores);
        let ks = argmax(&shifted);
        // rounding can only merge near-ties, never reorder distinct scores
        prop_assert!(ks == k || (scores[k] - scores[ks]).abs() < 1e-12);
    }

    #[test]
    fn scores_are_in_unit_interval(seed in 0u64..5000, x in prop::collection::vec(-1.0f64..1.0, 5), tansig_out in any::<bool>()) {
        let out = if tansig_out { Activation::Tansig } else { Activation::Logsig };
        let model = MlpModel::classifier(5, 6, Activation::Tansig, out, seed).unwrap();
        let (class, scores) = model.predict(&x).unwrap();
        prop_assert!(class < 4);
        prop_assert!(scores.iter().all(|s| (0.0..=1.0).contains(s)));
        prop_assert_eq!(class, argmax(&scores));
    }
}
