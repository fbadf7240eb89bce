//! Grid-partitioned ANFIS with hybrid learning.
//!
//! The network has four layers: fuzzification, product firing,
//! normalization, and a fused consequent-evaluation + summation layer.
//! Training alternates a least-squares solve of all consequent coefficients
//! (premises fixed) with one gradient-descent step on the premise
//! membership parameters (consequents fixed).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{EncodedSample, NUM_CLASSES};
use crate::fuzzy::{self, FuzzyError, MembershipFunction, MfBank, MfShape, SugenoRule};
use crate::linalg::{ridge_least_squares, Matrix, SolveError};

/// Floor applied to widths and slopes after a premise update.
pub const MIN_WIDTH: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum AnfisError {
    #[error("need at least 2 membership functions per input, got {0}")]
    TooFewMfs(usize),
    #[error("input range must satisfy lo < hi, got [{0}, {1}]")]
    InvalidRange(f64, f64),
    #[error("model has no inputs")]
    NoInputs,
    #[error("training set is empty")]
    EmptyTrainingSet,
    #[error("{inputs} inputs but {targets} targets")]
    TargetMismatch { inputs: usize, targets: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Fuzzy(#[from] FuzzyError),
    #[error("consequent solve failed: {0}")]
    Solve(#[from] SolveError),
    #[error("training diverged: {0}")]
    NonFinite(String),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConsequentOrder {
    Zero,
    #[default]
    First,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnfisModel {
    pub input_dim: usize,
    pub mfs_per_input: usize,
    pub mf_shape: MfShape,
    pub order: ConsequentOrder,
    pub input_range: (f64, f64),
    pub seed: u64,
    pub mf_bank: MfBank,
    pub rules: Vec<SugenoRule>,
}

/// Intermediate outputs of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct LayerOutputs {
    pub firing: Vec<f64>,
    pub normalized: Vec<f64>,
    /// `normalized[i] * f_i(x)`; these sum to the output.
    pub contributions: Vec<f64>,
    pub degenerate: bool,
}

fn grid_mf(shape: MfShape, center: f64, spacing: f64) -> Result<MembershipFunction, FuzzyError> {
    let half = spacing / 2.0;
    match shape {
        // |(x - c) / a| = 1 at the midpoint gives degree 0.5 for any slope
        MfShape::Gbell => MembershipFunction::gbell(half, 2.0, center),
        MfShape::Gauss2 => {
            let sigma = half / (2.0 * std::f64::consts::LN_2).sqrt();
            MembershipFunction::gauss2(sigma, center, sigma, center)
        }
        MfShape::Triangular => MembershipFunction::triangular(center - spacing, center, center + spacing),
    }
}

impl AnfisModel {
    /// Builds the full grid: `mfs_per_input` evenly spaced sets per input,
    /// neighbours crossing at degree 0.5, one rule per grid cell in
    /// lexicographic antecedent order, all consequents zero.
    pub fn build_grid(
        mf_shape: MfShape,
        mfs_per_input: usize,
        input_dim: usize,
        input_range: (f64, f64),
        order: ConsequentOrder,
        seed: u64,
    ) -> Result<Self, AnfisError> {
        if mfs_per_input < 2 {
            return Err(AnfisError::TooFewMfs(mfs_per_input));
        }
        if input_dim == 0 {
            return Err(AnfisError::NoInputs);
        }
        let (lo, hi) = input_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(AnfisError::InvalidRange(lo, hi));
        }
        let spacing = (hi - lo) / (mfs_per_input - 1) as f64;
        let row = (0..mfs_per_input)
            .map(|k| grid_mf(mf_shape, lo + k as f64 * spacing, spacing))
            .collect::<Result<Vec<_>, _>>()?;
        let mf_bank = vec![row; input_dim];

        let n_coef = match order {
            ConsequentOrder::Zero => 1,
            ConsequentOrder::First => input_dim + 1,
        };
        let n_rules = mfs_per_input.pow(input_dim as u32);
        let rules = (0..n_rules)
            .map(|mut cell| {
                let mut antecedent = vec![0; input_dim];
                for slot in antecedent.iter_mut().rev() {
                    *slot = cell % mfs_per_input;
                    cell /= mfs_per_input;
                }
                SugenoRule {
                    antecedent,
                    consequent: vec![0.0; n_coef],
                }
            })
            .collect();

        Ok(AnfisModel {
            input_dim,
            mfs_per_input,
            mf_shape,
            order,
            input_range,
            seed,
            mf_bank,
            rules,
        })
    }

    pub fn validate(&self) -> Result<(), AnfisError> {
        if self.mfs_per_input < 2 {
            return Err(AnfisError::TooFewMfs(self.mfs_per_input));
        }
        if self.mf_bank.len() != self.input_dim {
            return Err(FuzzyError::DimensionMismatch {
                expected: self.input_dim,
                got: self.mf_bank.len(),
            }
            .into());
        }
        for mfs in &self.mf_bank {
            if mfs.len() != self.mfs_per_input {
                return Err(FuzzyError::InvalidParameter(format!(
                    "expected {} membership functions per input, found {}",
                    self.mfs_per_input,
                    mfs.len()
                ))
                .into());
            }
            for mf in mfs {
                mf.validate()?;
            }
        }
        let n_coef = self.coefficients_per_rule();
        if self.rules.len() != self.mfs_per_input.pow(self.input_dim as u32) {
            return Err(FuzzyError::InvalidParameter(format!("rule grid has {} rules", self.rules.len())).into());
        }
        for (r, rule) in self.rules.iter().enumerate() {
            if rule.antecedent.len() != self.input_dim || rule.consequent.len() != n_coef {
                return Err(FuzzyError::InvalidParameter(format!("rule {r} has the wrong shape")).into());
            }
            if let Some((input, &index)) = rule.antecedent.iter().enumerate().find(|(_, &m)| m >= self.mfs_per_input) {
                return Err(FuzzyError::AntecedentOutOfRange { rule: r, input, index }.into());
            }
        }
        Ok(())
    }

    pub fn coefficients_per_rule(&self) -> usize {
        match self.order {
            ConsequentOrder::Zero => 1,
            ConsequentOrder::First => self.input_dim + 1,
        }
    }

    pub fn forward(&self, x: &[f64]) -> Result<(f64, LayerOutputs), AnfisError> {
        let firing = fuzzy::firing_strengths(&self.rules, &self.mf_bank, x)?;
        let fuzzy::Normalized { weights, degenerate } = fuzzy::normalize_weights(&firing)?;
        debug_assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let contributions: Vec<f64> = self
            .rules
            .iter()
            .zip(&weights)
            .map(|(rule, w)| w * rule.output(x))
            .collect();
        let y = contributions.iter().sum();
        Ok((
            y,
            LayerOutputs {
                firing,
                normalized: weights,
                contributions,
                degenerate,
            },
        ))
    }

    pub fn output(&self, x: &[f64]) -> Result<f64, AnfisError> {
        Ok(self.forward(x)?.0)
    }

    /// Row of the consequent design matrix for one input: for each rule,
    /// `w̄_i * [1, x_1, .., x_n]` (or just `w̄_i` in zero-order mode).
    pub fn design_row(&self, x: &[f64]) -> Result<Vec<f64>, AnfisError> {
        let (_, layers) = self.forward(x)?;
        let n_coef = self.coefficients_per_rule();
        let mut row = Vec::with_capacity(self.rules.len() * n_coef);
        for w in layers.normalized {
            row.push(w);
            if n_coef > 1 {
                row.extend(x.iter().map(|xi| w * xi));
            }
        }
        Ok(row)
    }

    pub fn design_matrix(&self, inputs: &[Vec<f64>]) -> Result<Matrix, AnfisError> {
        let cols = self.rules.len() * self.coefficients_per_rule();
        let mut a = Matrix::zeros(inputs.len(), cols);
        for (r, x) in inputs.iter().enumerate() {
            a.row_mut(r).copy_from_slice(&self.design_row(x)?);
        }
        Ok(a)
    }

    pub fn consequents(&self) -> Vec<f64> {
        self.rules.iter().flat_map(|r| r.consequent.iter().copied()).collect()
    }

    pub fn set_consequents(&mut self, p: &[f64]) {
        let n_coef = self.coefficients_per_rule();
        for (rule, chunk) in self.rules.iter_mut().zip(p.chunks(n_coef)) {
            rule.consequent.copy_from_slice(chunk);
        }
    }

    pub fn rmse(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64, AnfisError> {
        check_targets(inputs, targets)?;
        let mut sse = 0.0;
        for (x, t) in inputs.iter().zip(targets) {
            sse += (self.output(x)? - t).powi(2);
        }
        Ok((sse / inputs.len() as f64).sqrt())
    }

    /// Half mean squared error, the loss the premise step descends.
    pub fn loss(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<f64, AnfisError> {
        let rmse = self.rmse(inputs, targets)?;
        Ok(0.5 * rmse * rmse)
    }

    /// Least-squares solve of every consequent coefficient jointly with the
    /// premises held fixed. Returns the training RMSE after the update.
    pub fn lse_consequents(&mut self, inputs: &[Vec<f64>], targets: &[f64], ridge: f64) -> Result<f64, AnfisError> {
        check_targets(inputs, targets)?;
        let a = self.design_matrix(inputs)?;
        let p = ridge_least_squares(&a, targets, ridge)?;
        if p.iter().any(|v| !v.is_finite()) {
            return Err(AnfisError::NonFinite("consequent solve produced non-finite coefficients".into()));
        }
        self.set_consequents(&p);
        let fitted = a.mul_vec(&p);
        let sse: f64 = fitted.iter().zip(targets).map(|(y, t)| (y - t).powi(2)).sum();
        Ok((sse / inputs.len() as f64).sqrt())
    }

    /// Gradient of [`Self::loss`] with respect to every premise parameter,
    /// indexed `[input][mf][param]`.
    pub fn premise_gradient(&self, inputs: &[Vec<f64>], targets: &[f64]) -> Result<Vec<Vec<Vec<f64>>>, AnfisError> {
        check_targets(inputs, targets)?;
        let mut grad: Vec<Vec<Vec<f64>>> = self
            .mf_bank
            .iter()
            .map(|mfs| mfs.iter().map(|mf| vec![0.0; mf.params().len()]).collect())
            .collect();
        let n = inputs.len() as f64;

        for (x, &t) in inputs.iter().zip(targets) {
            if x.len() != self.input_dim {
                return Err(FuzzyError::DimensionMismatch {
                    expected: self.input_dim,
                    got: x.len(),
                }
                .into());
            }
            let degrees: Vec<Vec<f64>> = self
                .mf_bank
                .iter()
                .zip(x)
                .map(|(mfs, &xj)| mfs.iter().map(|mf| mf.degree(xj)).collect())
                .collect();
            let firing: Vec<f64> = self
                .rules
                .iter()
                .map(|r| r.antecedent.iter().enumerate().map(|(j, &m)| degrees[j][m]).product())
                .collect();
            let total: f64 = firing.iter().sum();
            if total <= 0.0 {
                // uniform fallback does not depend on the premises
                continue;
            }
            let outputs: Vec<f64> = self.rules.iter().map(|r| r.output(x)).collect();
            let y: f64 = firing.iter().zip(&outputs).map(|(w, f)| w * f).sum::<f64>() / total;
            let err = (y - t) / n;

            // d loss / d mu_{j,m}, accumulated over the rules that use (j, m)
            let mut d_mu: Vec<Vec<f64>> = degrees.iter().map(|d| vec![0.0; d.len()]).collect();
            for (rule, f) in self.rules.iter().zip(&outputs) {
                let dy_dw = (f - y) / total;
                for (j, &m) in rule.antecedent.iter().enumerate() {
                    let others: f64 = rule
                        .antecedent
                        .iter()
                        .enumerate()
                        .filter(|&(l, _)| l != j)
                        .map(|(l, &ml)| degrees[l][ml])
                        .product();
                    d_mu[j][m] += err * dy_dw * others;
                }
            }
            for (j, mfs) in self.mf_bank.iter().enumerate() {
                for (m, mf) in mfs.iter().enumerate() {
                    if d_mu[j][m] == 0.0 {
                        continue;
                    }
                    for (g, dp) in grad[j][m].iter_mut().zip(mf.param_gradient(x[j])) {
                        *g += d_mu[j][m] * dp;
                    }
                }
            }
        }
        Ok(grad)
    }

    /// One gradient-descent step on the premise parameters. Triangular
    /// premises are not differentiable at their vertices and stay frozen.
    pub fn premise_gradient_step(&mut self, inputs: &[Vec<f64>], targets: &[f64], learn_rate: f64) -> Result<(), AnfisError> {
        if !self.mf_shape.is_differentiable() || learn_rate == 0.0 {
            return Ok(());
        }
        let grad = self.premise_gradient(inputs, targets)?;
        for (mfs, gj) in self.mf_bank.iter_mut().zip(&grad) {
            for (mf, g) in mfs.iter_mut().zip(gj) {
                let updated: Vec<f64> = mf.params().iter().zip(g).map(|(p, d)| p - learn_rate * d).collect();
                if updated.iter().any(|v| !v.is_finite()) {
                    return Err(AnfisError::NonFinite("premise update produced non-finite parameters".into()));
                }
                mf.set_params(&updated);
                mf.clamp(MIN_WIDTH);
            }
        }
        Ok(())
    }
}

fn check_targets(inputs: &[Vec<f64>], targets: &[f64]) -> Result<(), AnfisError> {
    if inputs.is_empty() {
        return Err(AnfisError::EmptyTrainingSet);
    }
    if inputs.len() != targets.len() {
        return Err(AnfisError::TargetMismatch {
            inputs: inputs.len(),
            targets: targets.len(),
        });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub epochs: usize,
    pub learn_rate: f64,
    pub ridge: f64,
    pub seed: u64,
    pub early_stop_rmse: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            epochs: 100,
            learn_rate: 0.01,
            ridge: 1e-8,
            seed: 0,
            early_stop_rmse: 0.0,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<(), AnfisError> {
        if self.epochs < 1 {
            return Err(AnfisError::InvalidConfig("epochs must be at least 1".into()));
        }
        if !(self.learn_rate > 0.0 && self.learn_rate.is_finite()) {
            return Err(AnfisError::InvalidConfig(format!("learn_rate must be positive, got {}", self.learn_rate)));
        }
        if !(self.ridge >= 0.0 && self.ridge.is_finite()) {
            return Err(AnfisError::InvalidConfig(format!("ridge must be non-negative, got {}", self.ridge)));
        }
        if !(self.early_stop_rmse >= 0.0) {
            return Err(AnfisError::InvalidConfig(format!(
                "early_stop_rmse must be non-negative, got {}",
                self.early_stop_rmse
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingTrace {
    pub train_rmse: Vec<f64>,
    pub test_rmse: Option<f64>,
    pub epochs_run: usize,
}

/// Hybrid learning: each epoch solves the consequents by least squares and
/// then takes one premise gradient step. RMSE is recorded after the step.
pub fn train_hybrid(
    mut model: AnfisModel,
    train: (&[Vec<f64>], &[f64]),
    test: Option<(&[Vec<f64>], &[f64])>,
    config: &TrainingConfig,
) -> Result<(AnfisModel, TrainingTrace), AnfisError> {
    config.validate()?;
    let (inputs, targets) = train;
    check_targets(inputs, targets)?;
    let mut trace = TrainingTrace::default();
    for _ in 0..config.epochs {
        model.lse_consequents(inputs, targets, config.ridge)?;
        model.premise_gradient_step(inputs, targets, config.learn_rate)?;
        let rmse = model.rmse(inputs, targets)?;
        if !rmse.is_finite() {
            return Err(AnfisError::NonFinite(format!("train RMSE became {rmse}")));
        }
        trace.train_rmse.push(rmse);
        trace.epochs_run += 1;
        if rmse <= config.early_stop_rmse {
            break;
        }
    }
    if let Some((ti, tt)) = test {
        trace.test_rmse = Some(model.rmse(ti, tt)?);
    }
    Ok((model, trace))
}

/// Rounds half away from zero, clamps to `[1, 4]` and shifts to a class index.
pub fn predict_class_from_output(y: f64) -> usize {
    let level = y.round().clamp(1.0, NUM_CLASSES as f64);
    if level.is_nan() {
        0
    } else {
        level as usize - 1
    }
}

/// Binary OAA decision; a score of exactly 0.5 counts as positive.
pub fn binary_decision(score: f64) -> bool {
    score >= 0.5
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMode {
    /// One model regressing `class_index + 1`.
    Single,
    /// One binary model per class.
    Oaa,
}

impl std::str::FromStr for OutputMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "single" => Ok(OutputMode::Single),
            "oaa" => Ok(OutputMode::Oaa),
            other => Err(format!("unknown output mode {other:?}")),
        }
    }
}

/// A trained knowledge-level classifier: one single-output model or four OAA models.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnfisClassifier {
    pub output_mode: OutputMode,
    pub models: Vec<AnfisModel>,
    pub config: TrainingConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnfisTraceSet {
    pub output_mode: OutputMode,
    pub traces: Vec<TrainingTrace>,
}

fn split_samples(samples: &[EncodedSample]) -> Vec<Vec<f64>> {
    samples.iter().map(|s| s.features.clone()).collect()
}

impl AnfisClassifier {
    /// Trains from an untrained template. OAA models train on separate threads.
    pub fn train(
        template: &AnfisModel,
        output_mode: OutputMode,
        train: &[EncodedSample],
        test: &[EncodedSample],
        config: &TrainingConfig,
    ) -> Result<(Self, AnfisTraceSet), AnfisError> {
        if train.is_empty() {
            return Err(AnfisError::EmptyTrainingSet);
        }
        let train_x = split_samples(train);
        let test_x = split_samples(test);
        let targets_for = |samples: &[EncodedSample], class: Option<usize>| -> Vec<f64> {
            samples
                .iter()
                .map(|s| match class {
                    None => s.class_value,
                    Some(k) => s.oaa_targets[k],
                })
                .collect()
        };
        let run = |class: Option<usize>| {
            let train_t = targets_for(train, class);
            let test_t = targets_for(test, class);
            let test_pair = (!test.is_empty()).then_some((test_x.as_slice(), test_t.as_slice()));
            train_hybrid(template.clone(), (&train_x, &train_t), test_pair, config)
        };

        let results: Vec<Result<(AnfisModel, TrainingTrace), AnfisError>> = match output_mode {
            OutputMode::Single => vec![run(None)],
            OutputMode::Oaa => std::thread::scope(|scope| {
                let handles: Vec<_> = (0..NUM_CLASSES).map(|k| scope.spawn(move || run(Some(k)))).collect();
                handles.into_iter().map(|h| h.join().expect("training thread panicked")).collect()
            }),
        };
        let mut models = Vec::with_capacity(results.len());
        let mut traces = Vec::with_capacity(results.len());
        for r in results {
            let (m, t) = r?;
            models.push(m);
            traces.push(t);
        }
        Ok((
            AnfisClassifier {
                output_mode,
                models,
                config: config.clone(),
            },
            AnfisTraceSet { output_mode, traces },
        ))
    }

    pub fn validate(&self) -> Result<(), AnfisError> {
        let expected = match self.output_mode {
            OutputMode::Single => 1,
            OutputMode::Oaa => NUM_CLASSES,
        };
        if self.models.len() != expected {
            return Err(AnfisError::InvalidConfig(format!(
                "{:?} mode needs {expected} models, found {}",
                self.output_mode,
                self.models.len()
            )));
        }
        self.models.iter().try_for_each(AnfisModel::validate)
    }

    /// Per-class scores. OAA mode returns the raw Sugeno outputs. Single mode
    /// scores class `k` by `-|y - (k + 1)|`, so the closest level ranks first.
    pub fn scores(&self, x: &[f64]) -> Result<[f64; NUM_CLASSES], AnfisError> {
        let mut out = [0.0; NUM_CLASSES];
        match self.output_mode {
            OutputMode::Single => {
                let y = self.models[0].output(x)?;
                for (k, s) in out.iter_mut().enumerate() {
                    *s = -(y - (k + 1) as f64).abs();
                }
            }
            OutputMode::Oaa => {
                for (s, m) in out.iter_mut().zip(&self.models) {
                    *s = m.output(x)?;
                }
            }
        }
        Ok(out)
    }

    pub fn predict_class(&self, x: &[f64]) -> Result<usize, AnfisError> {
        match self.output_mode {
            OutputMode::Single => Ok(predict_class_from_output(self.models[0].output(x)?)),
            OutputMode::Oaa => Ok(crate::argmax(&self.scores(x)?)),
        }
    }

    /// Raw OAA score of class `k`.
    pub fn predict_score(&self, x: &[f64], k: usize) -> Result<f64, AnfisError> {
        Ok(self.scores(x)?[k])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn toy(shape: MfShape, mfs: usize, dim: usize) -> AnfisModel {
        AnfisModel::build_grid(shape, mfs, dim, (-1.0, 1.0), ConsequentOrder::First, 0).unwrap()
    }

    #[test]
    fn grid_sizes_and_centers() {
        let m = toy(MfShape::Gbell, 2, 5);
        assert_eq!(m.rules.len(), 32);
        m.validate().unwrap();
        let m = toy(MfShape::Gbell, 3, 2);
        assert_eq!(m.rules.len(), 9);
        for mfs in &m.mf_bank {
            let centers: Vec<f64> = mfs.iter().map(|mf| mf.params()[2]).collect();
            assert_eq!(centers, vec![-1.0, 0.0, 1.0]);
        }
        assert_eq!(m.rules[0].antecedent, vec![0, 0]);
        assert_eq!(m.rules[1].antecedent, vec![0, 1]);
        assert_eq!(m.rules[8].antecedent, vec![2, 2]);
        assert!(m.consequents().iter().all(|&p| p == 0.0));
        assert_eq!(
            toy(MfShape::Gauss2, 2, 5),
            AnfisModel::build_grid(MfShape::Gauss2, 2, 5, (-1.0, 1.0), ConsequentOrder::First, 0).unwrap()
        );
        assert!(matches!(
            AnfisModel::build_grid(MfShape::Gbell, 1, 5, (-1.0, 1.0), ConsequentOrder::First, 0),
            Err(AnfisError::TooFewMfs(1))
        ));
    }

    #[test]
    fn neighbours_cross_at_half() {
        for shape in [MfShape::Gbell, MfShape::Gauss2, MfShape::Triangular] {
            let m = toy(shape, 2, 1);
            assert_abs_diff_eq!(m.mf_bank[0][0].degree(0.0), 0.5, epsilon = 1e-12);
            assert_abs_diff_eq!(m.mf_bank[0][1].degree(0.0), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn forward_with_constant_consequents() {
        let mut m = toy(MfShape::Gauss2, 2, 5);
        for r in &mut m.rules {
            r.consequent[0] = 2.0;
        }
        let (y, layers) = m.forward(&[0.3, -1.0, 1.0, 0.2, -0.7]).unwrap();
        assert_abs_diff_eq!(y, 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(layers.normalized.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(layers.contributions.iter().sum::<f64>(), y, epsilon = 1e-12);
    }

    #[test]
    fn grid_center_fires_matching_rule_most() {
        let m = toy(MfShape::Gbell, 3, 2);
        let (_, layers) = m.forward(&[0.0, 1.0]).unwrap();
        let best = crate::argmax(&layers.normalized);
        assert_eq!(m.rules[best].antecedent, vec![1, 2]);
    }

    #[test]
    fn lse_single_rule_single_sample_is_exact() {
        let mut m = AnfisModel::build_grid(MfShape::Gbell, 2, 1, (-1.0, 1.0), ConsequentOrder::Zero, 0).unwrap();
        // keep one rule so the model has one unknown
        m.rules.truncate(1);
        m.mf_bank[0].truncate(1);
        let rmse = m.lse_consequents(&[vec![0.3]], &[2.5], 0.0).unwrap();
        assert!(rmse < 1e-12);
        assert_abs_diff_eq!(m.output(&[0.3]).unwrap(), 2.5, epsilon = 1e-12);
    }

    #[test]
    fn lse_recovers_representable_targets() {
        let mut truth = toy(MfShape::Gbell, 2, 2);
        let coefs: Vec<f64> = (0..truth.consequents().len()).map(|i| (i as f64 * 0.37).sin()).collect();
        truth.set_consequents(&coefs);
        let inputs: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![((i * 7) % 11) as f64 / 5.0 - 1.0, ((i * 3) % 13) as f64 / 6.0 - 1.0])
            .collect();
        let targets: Vec<f64> = inputs.iter().map(|x| truth.output(x).unwrap()).collect();
        let mut fit = toy(MfShape::Gbell, 2, 2);
        let rmse = fit.lse_consequents(&inputs, &targets, 1e-8).unwrap();
        assert!(rmse <= 1e-8, "residual {rmse}");
    }

    #[test]
    fn zero_learn_rate_leaves_premises() {
        let mut m = toy(MfShape::Gauss2, 2, 2);
        let before = m.clone();
        m.premise_gradient_step(&[vec![0.1, 0.2]], &[1.0], 0.0).unwrap();
        assert_eq!(m, before);
    }

    #[test]
    fn triangular_premises_are_frozen() {
        let mut m = toy(MfShape::Triangular, 2, 2);
        let inputs = vec![vec![0.1, 0.2], vec![-0.5, 0.9]];
        m.lse_consequents(&inputs, &[1.0, 3.0], 1e-8).unwrap();
        let bank = m.mf_bank.clone();
        m.premise_gradient_step(&inputs, &[1.0, 2.0], 0.5).unwrap();
        assert_eq!(m.mf_bank, bank);
    }

    #[test]
    fn predict_class_rounding() {
        assert_eq!(predict_class_from_output(1.3), 0);
        assert_eq!(predict_class_from_output(4.7), 3);
        assert_eq!(predict_class_from_output(2.5), 2);
        assert_eq!(predict_class_from_output(1.5), 1);
        assert_eq!(predict_class_from_output(3.4999), 2);
        assert_eq!(predict_class_from_output(-7.0), 0);
        assert!(binary_decision(0.5));
        assert!(!binary_decision(0.4999));
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        let bad = TrainingConfig {
            epochs: 0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainingConfig {
            learn_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
