//! Feed-forward backpropagation network used as the baseline classifier.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EncodedSample, NUM_CLASSES};

#[derive(Debug, Error)]
pub enum MlpError {
    #[error("network needs at least an input and an output layer, got sizes {0:?}")]
    BadLayout(Vec<usize>),
    #[error("{layers} weight layers but {activations} activations")]
    ActivationCount { layers: usize, activations: usize },
    #[error("layer {layer}: expected a {rows}x{cols} weight matrix")]
    ShapeMismatch { layer: usize, rows: usize, cols: usize },
    #[error("expected {expected} inputs, got {got}")]
    InputMismatch { expected: usize, got: usize },
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training diverged: {0}")]
    NonFinite(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tansig,
    Logsig,
    Linear,
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tansig" | "tanh" => Ok(Activation::Tansig),
            "logsig" | "sigmoid" => Ok(Activation::Logsig),
            "linear" | "purelin" => Ok(Activation::Linear),
            other => Err(format!("unknown activation {other:?}")),
        }
    }
}

/// `2 / (1 + exp(-2x)) - 1`, numerically the hyperbolic tangent.
pub fn tansig(x: f64) -> f64 {
    x.tanh()
}

pub fn logsig(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tansig => tansig(x),
            Activation::Logsig => logsig(x),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation's own output.
    fn derivative_from_output(self, out: f64) -> f64 {
        match self {
            Activation::Tansig => 1.0 - out * out,
            Activation::Logsig => out * (1.0 - out),
            Activation::Linear => 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    /// `outputs x inputs`
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(row, b)| {
                let z = b + row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>();
                self.activation.apply(z)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    /// `1/(2N) * sum_k sum_c (o - t)^2`
    #[default]
    Mse,
    /// Mean over samples of the summed per-output binary cross-entropy; logsig output only.
    CrossEntropy,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Batch {
    Full,
    #[default]
    Stochastic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpConfig {
    pub epochs: usize,
    pub learn_rate: f64,
    pub seed: u64,
    pub batch: Batch,
    pub loss: Loss,
}

impl Default for MlpConfig {
    fn default() -> Self {
        MlpConfig {
            epochs: 200,
            learn_rate: 0.1,
            seed: 0,
            batch: Batch::Stochastic,
            loss: Loss::Mse,
        }
    }
}

/// Per-layer weight and bias gradients, shaped like [`MlpModel::layers`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
}

impl MlpModel {
    /// Weights and biases drawn uniformly from `[-0.5, 0.5]`.
    pub fn new(layer_sizes: &[usize], activations: &[Activation], seed: u64) -> Result<Self, MlpError> {
        if layer_sizes.len() < 2 || layer_sizes.contains(&0) {
            return Err(MlpError::BadLayout(layer_sizes.to_vec()));
        }
        if activations.len() != layer_sizes.len() - 1 {
            return Err(MlpError::ActivationCount {
                layers: layer_sizes.len() - 1,
                activations: activations.len(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .zip(activations)
            .map(|(pair, &activation)| {
                let (n_in, n_out) = (pair[0], pair[1]);
                let weights = (0..n_out)
                    .map(|_| (0..n_in).map(|_| rng.gen_range(-0.5..=0.5)).collect())
                    .collect();
                let biases = (0..n_out).map(|_| rng.gen_range(-0.5..=0.5)).collect();
                Layer {
                    weights,
                    biases,
                    activation,
                }
            })
            .collect();
        Ok(MlpModel {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            seed,
        })
    }

    /// The `[inputs, hidden, classes]` network used for the knowledge classifier.
    pub fn classifier(inputs: usize, hidden: usize, hidden_act: Activation, output_act: Activation, seed: u64) -> Result<Self, MlpError> {
        Self::new(&[inputs, hidden, NUM_CLASSES], &[hidden_act, output_act], seed)
    }

    pub fn validate(&self) -> Result<(), MlpError> {
        if self.layer_sizes.len() < 2 || self.layer_sizes.contains(&0) {
            return Err(MlpError::BadLayout(self.layer_sizes.clone()));
        }
        if self.layers.len() != self.layer_sizes.len() - 1 {
            return Err(MlpError::ActivationCount {
                layers: self.layer_sizes.len() - 1,
                activations: self.layers.len(),
            });
        }
        for (l, (layer, pair)) in self.layers.iter().zip(self.layer_sizes.windows(2)).enumerate() {
            let (cols, rows) = (pair[0], pair[1]);
            let bad = layer.weights.len() != rows
                || layer.biases.len() != rows
                || layer.weights.iter().any(|r| r.len() != cols);
            if bad {
                return Err(MlpError::ShapeMismatch { layer: l, rows, cols });
            }
        }
        Ok(())
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().expect("validated model has layers").activation
    }

    fn activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>, MlpError> {
        if x.len() != self.layer_sizes[0] {
            return Err(MlpError::InputMismatch {
                expected: self.layer_sizes[0],
                got: x.len(),
            });
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        for layer in &self.layers {
            let next = layer.forward(acts.last().unwrap());
            acts.push(next);
        }
        Ok(acts)
    }

    /// Raw output-layer values.
    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        Ok(self.activations(x)?.pop().unwrap())
    }

    /// Per-class scores in `(0,1)`; tansig outputs are mapped through `(s + 1) / 2`.
    pub fn scores(&self, x: &[f64]) -> Result<Vec<f64>, MlpError> {
        let out = self.forward(x)?;
        Ok(match self.output_activation() {
            Activation::Tansig => out.into_iter().map(|s| (s + 1.0) / 2.0).collect(),
            _ => out,
        })
    }

    pub fn predict(&self, x: &[f64]) -> Result<(usize, Vec<f64>), MlpError> {
        let scores = self.scores(x)?;
        Ok((crate::argmax(&scores), scores))
    }

    /// Training target for a one-hot row; tansig outputs train towards `{-1, +1}`.
    pub fn encode_target(&self, one_hot: &[f64]) -> Vec<f64> {
        match self.output_activation() {
            Activation::Tansig => one_hot.iter().map(|t| 2.0 * t - 1.0).collect(),
            _ => one_hot.to_vec(),
        }
    }

    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>], loss: Loss) -> Result<f64, MlpError> {
        if inputs.is_empty() {
            return Err(MlpError::EmptyTrainingSet);
        }
        let mut total = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            let out = self.forward(x)?;
            total += match loss {
                Loss::Mse => 0.5 * out.iter().zip(t).map(|(o, t)| (o - t).powi(2)).sum::<f64>(),
                Loss::CrossEntropy => out
                    .iter()
                    .zip(t)
                    .map(|(&o, &t)| {
                        let o = o.clamp(1e-15, 1.0 - 1e-15);
                        -(t * o.ln() + (1.0 - t) * (1.0 - o).ln())
                    })
                    .sum::<f64>(),
            };
        }
        Ok(total / inputs.len() as f64)
    }

    /// Backpropagated gradient of [`Self::loss`] averaged over the given samples.
    pub fn gradient(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>], loss: Loss) -> Result<Gradients, MlpError> {
        if inputs.is_empty() {
            return Err(MlpError::EmptyTrainingSet);
        }
        let mut grad = Gradients {
            weights: self
                .layers
                .iter()
                .map(|l| vec![vec![0.0; l.weights[0].len()]; l.weights.len()])
                .collect(),
            biases: self.layers.iter().map(|l| vec![0.0; l.biases.len()]).collect(),
        };
        let scale = 1.0 / inputs.len() as f64;
        for (x, t) in inputs.iter().zip(targets) {
            let acts = self.activations(x)?;
            let out = acts.last().unwrap();
            let out_act = self.output_activation();
            // delta = d loss / d pre-activation
            let mut delta: Vec<f64> = out
                .iter()
                .zip(t)
                .map(|(&o, &t)| match (loss, out_act) {
                    (Loss::CrossEntropy, Activation::Logsig) => o - t,
                    _ => (o - t) * out_act.derivative_from_output(o),
                })
                .collect();
            for l in (0..self.layers.len()).rev() {
                let input = &acts[l];
                for (i, d) in delta.iter().enumerate() {
                    grad.biases[l][i] += scale * d;
                    for (g, a) in grad.weights[l][i].iter_mut().zip(input) {
                        *g += scale * d * a;
                    }
                }
                if l > 0 {
                    let prev_act = self.layers[l - 1].activation;
                    delta = (0..input.len())
                        .map(|j| {
                            let back: f64 = self.layers[l].weights.iter().zip(&delta).map(|(row, d)| row[j] * d).sum();
                            back * prev_act.derivative_from_output(input[j])
                        })
                        .collect();
                }
            }
        }
        Ok(grad)
    }

    fn apply(&mut self, grad: &Gradients, learn_rate: f64) {
        for (layer, (gw, gb)) in self.layers.iter_mut().zip(grad.weights.iter().zip(&grad.biases)) {
            for (row, grow) in layer.weights.iter_mut().zip(gw) {
                for (w, g) in row.iter_mut().zip(grow) {
                    *w -= learn_rate * g;
                }
            }
            for (b, g) in layer.biases.iter_mut().zip(gb) {
                *b -= learn_rate * g;
            }
        }
    }
}

impl MlpConfig {
    pub fn validate(&self, model: &MlpModel) -> Result<(), MlpError> {
        if self.epochs < 1 {
            return Err(MlpError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learn_rate >= 0.0 && self.learn_rate.is_finite()) {
            return Err(MlpError::InvalidConfig(format!("learn_rate must be non-negative, got {}", self.learn_rate)));
        }
        if self.loss == Loss::CrossEntropy && model.output_activation() != Activation::Logsig {
            return Err(MlpError::InvalidConfig("cross-entropy loss needs a logsig output layer".into()));
        }
        Ok(())
    }
}

/// Gradient descent on one-hot targets. Returns the model and the loss
/// measured on the full training set after every epoch.
pub fn train_backprop(mut model: MlpModel, train: &[EncodedSample], config: &MlpConfig) -> Result<(MlpModel, Vec<f64>), MlpError> {
    model.validate()?;
    config.validate(&model)?;
    if train.is_empty() {
        return Err(MlpError::EmptyTrainingSet);
    }
    let inputs: Vec<Vec<f64>> = train.iter().map(|s| s.features.clone()).collect();
    let targets: Vec<Vec<f64>> = train.iter().map(|s| model.encode_target(&s.oaa_targets)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..inputs.len()).collect();
    let mut trace = Vec::with_capacity(config.epochs);

    for _ in 0..config.epochs {
        match config.batch {
            Batch::Full => {
                let g = model.gradient(&inputs, &targets, config.loss)?;
                model.apply(&g, config.learn_rate);
            }
            Batch::Stochastic => {
                order.shuffle(&mut rng);
                for &i in &order {
                    let g = model.gradient(
                        std::slice::from_ref(&inputs[i]),
                        std::slice::from_ref(&targets[i]),
                        config.loss,
                    )?;
                    model.apply(&g, config.learn_rate);
                }
            }
        }
        let l = model.loss(&inputs, &targets, config.loss)?;
        if !l.is_finite() {
            return Err(MlpError::NonFinite(format!("training loss became {l}")));
        }
        trace.push(l);
    }
    Ok((model, trace))
}
