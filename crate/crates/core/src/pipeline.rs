//! End-to-end experiments: encode, split, train, evaluate, and the model
//! file format shared by the command-line tool.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anfis::{AnfisClassifier, AnfisError, AnfisModel, AnfisTraceSet, ConsequentOrder, OutputMode, TrainingConfig};
use crate::data::{self, DataError, DatasetSplit, EncodedSample, Encoding, NUM_CLASSES};
use crate::fuzzy::MfShape;
use crate::metrics::{self, MetricError, OaaRow};
use crate::mlp::{self, Activation, MlpConfig, MlpError, MlpModel};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Anfis(#[from] AnfisError),
    #[error(transparent)]
    Mlp(#[from] MlpError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("invalid experiment: {0}")]
    Config(String),
    #[error("model file: {0}")]
    Format(String),
}

impl PipelineError {
    /// True for failures of the numerical procedures rather than of the inputs.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            PipelineError::Anfis(AnfisError::Solve(_) | AnfisError::NonFinite(_))
                | PipelineError::Mlp(MlpError::NonFinite(_))
                | PipelineError::Metric(_)
        )
    }

    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::Anfis(AnfisError::InvalidConfig(_) | AnfisError::TooFewMfs(_) | AnfisError::InvalidRange(..))
                | PipelineError::Mlp(MlpError::InvalidConfig(_) | MlpError::BadLayout(_) | MlpError::ActivationCount { .. })
                | PipelineError::Data(
                    DataError::InvalidRatio(_)
                        | DataError::InvalidThreshold(_)
                        | DataError::InvalidFolds { .. }
                        | DataError::TooFewForPredefined { .. }
                )
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum SplitSpec {
    Ratio { ratio: f64, seed: u64 },
    Predefined { train_rows: usize },
    Kfold { k: usize, fold: usize, seed: u64 },
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec::Ratio { ratio: 0.8, seed: 0 }
    }
}

impl SplitSpec {
    /// The split a single train/evaluate run uses.
    pub fn apply(&self, samples: &[EncodedSample]) -> Result<DatasetSplit, PipelineError> {
        match *self {
            SplitSpec::Ratio { ratio, seed } => Ok(data::split_stratified(samples, ratio, seed)?),
            SplitSpec::Predefined { train_rows } => Ok(data::split_predefined(samples, train_rows)?),
            SplitSpec::Kfold { k, fold, seed } => {
                if fold >= k {
                    return Err(PipelineError::Config(format!("fold {fold} is outside 0..{k}")));
                }
                Ok(data::kfold(samples, k, seed)?.swap_remove(fold))
            }
        }
    }

    /// Every run of the protocol: all folds for k-fold, otherwise the single split.
    pub fn all(&self, samples: &[EncodedSample]) -> Result<Vec<DatasetSplit>, PipelineError> {
        match *self {
            SplitSpec::Kfold { k, seed, .. } => Ok(data::kfold(samples, k, seed)?),
            _ => Ok(vec![self.apply(samples)?]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum HiddenSpec {
    Fixed { size: usize },
    /// Picks the size with the best accuracy on a held-out part of the
    /// training set, then retrains on the whole training set.
    Sweep { min: usize, max: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpec {
    Anfis {
        mf_shape: MfShape,
        mfs_per_input: usize,
        output_mode: OutputMode,
        order: ConsequentOrder,
        training: TrainingConfig,
    },
    Mlp {
        hidden: HiddenSpec,
        hidden_activation: Activation,
        output_activation: Activation,
        training: MlpConfig,
    },
}

impl ModelSpec {
    pub fn anfis_default() -> Self {
        ModelSpec::Anfis {
            mf_shape: MfShape::Gauss2,
            mfs_per_input: 2,
            output_mode: OutputMode::Single,
            order: ConsequentOrder::First,
            training: TrainingConfig::default(),
        }
    }

    pub fn mlp_default() -> Self {
        ModelSpec::Mlp {
            hidden: HiddenSpec::Fixed { size: 10 },
            hidden_activation: Activation::Tansig,
            output_activation: Activation::Logsig,
            training: MlpConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub encoding: Encoding,
    pub split: SplitSpec,
    pub model: ModelSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classifier {
    Anfis(AnfisClassifier),
    Mlp(MlpModel),
}

impl Classifier {
    pub fn kind(&self) -> &'static str {
        match self {
            Classifier::Anfis(_) => "anfis",
            Classifier::Mlp(_) => "mlp",
        }
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize, PipelineError> {
        match self {
            Classifier::Anfis(c) => Ok(c.predict_class(x)?),
            Classifier::Mlp(m) => Ok(m.predict(x)?.0),
        }
    }

    pub fn scores(&self, x: &[f64]) -> Result<[f64; NUM_CLASSES], PipelineError> {
        match self {
            Classifier::Anfis(c) => Ok(c.scores(x)?),
            Classifier::Mlp(m) => {
                let s = m.scores(x)?;
                let mut out = [0.0; NUM_CLASSES];
                out.copy_from_slice(&s[..NUM_CLASSES]);
                Ok(out)
            }
        }
    }

    /// Root mean squared error against the training targets: class values
    /// for single-output ANFIS, one-hot rows otherwise.
    pub fn rmse(&self, samples: &[EncodedSample]) -> Result<f64, PipelineError> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut sse = 0.0;
        let mut count = 0usize;
        for s in samples {
            match self {
                Classifier::Anfis(c) if c.output_mode == OutputMode::Single => {
                    sse += (c.models[0].output(&s.features)? - s.class_value).powi(2);
                    count += 1;
                }
                Classifier::Anfis(c) => {
                    for (m, t) in c.models.iter().zip(&s.oaa_targets) {
                        sse += (m.output(&s.features)? - t).powi(2);
                        count += 1;
                    }
                }
                Classifier::Mlp(m) => {
                    let target = m.encode_target(&s.oaa_targets);
                    for (o, t) in m.forward(&s.features)?.iter().zip(&target) {
                        sse += (o - t).powi(2);
                        count += 1;
                    }
                }
            }
        }
        Ok((sse / count as f64).sqrt())
    }

    pub fn accuracy(&self, samples: &[EncodedSample]) -> Result<f64, PipelineError> {
        if samples.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for s in samples {
            if self.predict(&s.features)? == s.class_index {
                correct += 1;
            }
        }
        Ok(correct as f64 / samples.len() as f64)
    }

    fn validate(&self) -> Result<(), PipelineError> {
        match self {
            Classifier::Anfis(c) => Ok(c.validate()?),
            Classifier::Mlp(m) => {
                m.validate()?;
                if m.layer_sizes.last() != Some(&NUM_CLASSES) {
                    return Err(PipelineError::Format(format!("MLP must have {NUM_CLASSES} outputs")));
                }
                Ok(())
            }
        }
    }
}

/// Everything needed to reproduce and reuse a trained model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub experiment: ExperimentSpec,
    pub classifier: Classifier,
}

impl ModelFile {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, PipelineError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PipelineError::Format(format!("not valid JSON: {e}")))?;
        match value.get("format_version").and_then(|v| v.as_u64()) {
            Some(v) if v == FORMAT_VERSION as u64 => {}
            Some(v) => {
                return Err(PipelineError::Format(format!(
                    "format version {v} is not supported (expected {FORMAT_VERSION})"
                )))
            }
            None => return Err(PipelineError::Format("missing format_version".into())),
        }
        let file: ModelFile = serde_json::from_value(value).map_err(|e| PipelineError::Format(e.to_string()))?;
        file.classifier.validate()?;
        Ok(file)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub hidden: usize,
    pub validation_accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainTrace {
    Anfis(AnfisTraceSet),
    Mlp {
        hidden: usize,
        sweep: Vec<SweepEntry>,
        loss: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainSummary {
    pub train_size: usize,
    pub test_size: usize,
    pub train_rmse: f64,
    pub test_rmse: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub model: ModelFile,
    pub trace: TrainTrace,
    pub summary: TrainSummary,
}

pub fn train(spec: &ExperimentSpec, samples: &[EncodedSample]) -> Result<TrainOutcome, PipelineError> {
    let split = spec.split.apply(samples)?;
    train_on_split(spec, &split)
}

pub fn train_on_split(spec: &ExperimentSpec, split: &DatasetSplit) -> Result<TrainOutcome, PipelineError> {
    let input_dim = split
        .train
        .first()
        .map(|s| s.features.len())
        .ok_or(PipelineError::Data(DataError::EmptyClass))?;
    let (classifier, trace) = match &spec.model {
        ModelSpec::Anfis {
            mf_shape,
            mfs_per_input,
            output_mode,
            order,
            training,
        } => {
            let template = AnfisModel::build_grid(
                *mf_shape,
                *mfs_per_input,
                input_dim,
                spec.encoding.input_range(),
                *order,
                training.seed,
            )?;
            let (c, t) = AnfisClassifier::train(&template, *output_mode, &split.train, &split.test, training)?;
            (Classifier::Anfis(c), TrainTrace::Anfis(t))
        }
        ModelSpec::Mlp {
            hidden,
            hidden_activation,
            output_activation,
            training,
        } => {
            let (hidden, sweep) = match *hidden {
                HiddenSpec::Fixed { size } => (size, Vec::new()),
                HiddenSpec::Sweep { min, max } => {
                    sweep_hidden(&split.train, min, max, *hidden_activation, *output_activation, training)?
                }
            };
            let model = MlpModel::classifier(input_dim, hidden, *hidden_activation, *output_activation, training.seed)?;
            let (model, loss) = mlp::train_backprop(model, &split.train, training)?;
            (Classifier::Mlp(model), TrainTrace::Mlp { hidden, sweep, loss })
        }
    };
    let summary = TrainSummary {
        train_size: split.train.len(),
        test_size: split.test.len(),
        train_rmse: classifier.rmse(&split.train)?,
        test_rmse: classifier.rmse(&split.test)?,
        train_accuracy: classifier.accuracy(&split.train)?,
        test_accuracy: classifier.accuracy(&split.test)?,
    };
    Ok(TrainOutcome {
        model: ModelFile {
            format_version: FORMAT_VERSION,
            experiment: spec.clone(),
            classifier,
        },
        trace,
        summary,
    })
}

/// Trial-and-error hidden size selection on an inner stratified 80/20 split
/// of the training set. Ties keep the smaller network.
pub fn sweep_hidden(
    train: &[EncodedSample],
    min: usize,
    max: usize,
    hidden_activation: Activation,
    output_activation: Activation,
    config: &MlpConfig,
) -> Result<(usize, Vec<SweepEntry>), PipelineError> {
    if min == 0 || min > max {
        return Err(PipelineError::Config(format!("hidden sweep range {min}..={max} is empty")));
    }
    let inner = data::split_stratified(train, 0.8, config.seed)?;
    let input_dim = train[0].features.len();
    let mut entries = Vec::new();
    for hidden in min..=max {
        let model = MlpModel::classifier(input_dim, hidden, hidden_activation, output_activation, config.seed)?;
        let (model, _) = mlp::train_backprop(model, &inner.train, config)?;
        let acc = Classifier::Mlp(model).accuracy(&inner.test)?;
        entries.push(SweepEntry {
            hidden,
            validation_accuracy: acc,
        });
    }
    let best = entries
        .iter()
        .fold(&entries[0], |best, e| if e.validation_accuracy > best.validation_accuracy { e } else { best });
    Ok((best.hidden, entries))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model_kind: String,
    pub output_mode: Option<OutputMode>,
    pub test_size: usize,
    pub accuracy: f64,
    pub wrong: usize,
    pub mwcs: f64,
    pub cap: f64,
    /// `confusion[true][predicted]`
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub classes: Vec<OaaRow>,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

pub fn evaluate(classifier: &Classifier, test: &[EncodedSample]) -> Result<EvalReport, PipelineError> {
    let truth: Vec<usize> = test.iter().map(|s| s.class_index).collect();
    let mut predicted = Vec::with_capacity(test.len());
    let mut scores = Vec::with_capacity(test.len());
    for s in test {
        predicted.push(classifier.predict(&s.features)?);
        scores.push(classifier.scores(&s.features)?);
    }
    let mut eval = metrics::evaluate_multiclass(&truth, &predicted)?;
    eval.attach_auc(&truth, &scores)?;
    let summary = metrics::mwcs_cap(&[eval.wrong], eval.total)?;
    Ok(EvalReport {
        model_kind: classifier.kind().to_string(),
        output_mode: match classifier {
            Classifier::Anfis(c) => Some(c.output_mode),
            Classifier::Mlp(_) => None,
        },
        test_size: eval.total,
        accuracy: eval.accuracy,
        wrong: eval.wrong,
        mwcs: summary.mwcs,
        cap: summary.cap,
        confusion: eval.confusion,
        classes: eval.rows,
    })
}

/// Scores and binary labels for class `k`, ready for [`metrics::roc_curve`].
pub fn class_scores(
    classifier: &Classifier,
    test: &[EncodedSample],
    k: usize,
) -> Result<(Vec<f64>, Vec<bool>), PipelineError> {
    if k >= NUM_CLASSES {
        return Err(PipelineError::Config(format!("class {k} is outside 0..{NUM_CLASSES}")));
    }
    let mut scores = Vec::with_capacity(test.len());
    for s in test {
        scores.push(classifier.scores(&s.features)?[k]);
    }
    Ok((scores, test.iter().map(|s| s.class_index == k).collect()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub test_size: usize,
    pub wrong: usize,
    pub cap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProtocolSummary {
    pub runs: Vec<RunResult>,
    pub mwcs: f64,
    /// From the mean wrong count when every run has the same test size,
    /// otherwise the pooled accuracy over all test samples.
    pub cap: f64,
    pub mean_cap: f64,
    pub max_cap: f64,
}

/// Trains and evaluates every run of the experiment's split protocol.
pub fn run_protocol(spec: &ExperimentSpec, samples: &[EncodedSample]) -> Result<ProtocolSummary, PipelineError> {
    let mut runs = Vec::new();
    for split in spec.split.all(samples)? {
        let outcome = train_on_split(spec, &split)?;
        let report = evaluate(&outcome.model.classifier, &split.test)?;
        runs.push(RunResult {
            test_size: report.test_size,
            wrong: report.wrong,
            cap: report.cap,
        });
    }
    let wrong: Vec<usize> = runs.iter().map(|r| r.wrong).collect();
    let same_size = runs.windows(2).all(|w| w[0].test_size == w[1].test_size);
    let (mwcs, cap) = if same_size {
        let m = metrics::mwcs_cap(&wrong, runs[0].test_size)?;
        (m.mwcs, m.cap)
    } else {
        let total: usize = runs.iter().map(|r| r.test_size).sum();
        let mwcs = wrong.iter().sum::<usize>() as f64 / runs.len() as f64;
        (mwcs, 100.0 * (1.0 - wrong.iter().sum::<usize>() as f64 / total as f64))
    };
    let mean_cap = runs.iter().map(|r| r.cap).sum::<f64>() / runs.len() as f64;
    let max_cap = runs.iter().map(|r| r.cap).fold(f64::NEG_INFINITY, f64::max);
    Ok(ProtocolSummary {
        runs,
        mwcs,
        cap,
        mean_cap,
        max_cap,
    })
}
