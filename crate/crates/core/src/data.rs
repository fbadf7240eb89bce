//! Loading, encoding and partitioning of the user knowledge dataset.
//!
//! The CSV carries five attribute degrees in `[0,1]` (`STG`, `SCG`, `STR`,
//! `LPR`, `PEG`) and a knowledge-level label (`UNS`). Columns are located by
//! header name, so any column order loads.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Attribute column names in feature order.
pub const ATTRIBUTES: [&str; 5] = ["STG", "SCG", "STR", "LPR", "PEG"];
pub const LABEL_COLUMN: &str = "UNS";
pub const NUM_FEATURES: usize = 5;
pub const NUM_CLASSES: usize = 4;

/// Rows used for training by the predefined split of the UCI export.
pub const PREDEFINED_TRAIN_ROWS: usize = 258;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read dataset: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("header is missing column {0}")]
    MissingColumn(&'static str),
    #[error("row {row}, column {column}: value {value:?} is not a number")]
    NonNumeric {
        row: usize,
        column: &'static str,
        value: String,
    },
    #[error("row {row}, column {column}: value {value} is outside [0, 1]")]
    OutOfRange {
        row: usize,
        column: &'static str,
        value: f64,
    },
    #[error("row {row}, column UNS: unknown knowledge level {value:?}")]
    UnknownLabel { row: usize, value: String },
    #[error("binarization threshold must lie strictly inside (0, 1), got {0}")]
    InvalidThreshold(f64),
    #[error("split ratio must lie strictly inside (0, 1), got {0}")]
    InvalidRatio(f64),
    #[error("cannot split an empty sample set")]
    EmptyClass,
    #[error("k-fold needs k >= 2 and at most the smallest class count ({smallest}), got k = {k}")]
    InvalidFolds { k: usize, smallest: usize },
    #[error("predefined split needs more than {train_rows} samples, dataset has {len}")]
    TooFewForPredefined { train_rows: usize, len: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnowledgeLevel {
    VeryLow,
    Low,
    Middle,
    High,
}

impl KnowledgeLevel {
    pub const ALL: [KnowledgeLevel; NUM_CLASSES] = [
        KnowledgeLevel::VeryLow,
        KnowledgeLevel::Low,
        KnowledgeLevel::Middle,
        KnowledgeLevel::High,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    /// Case-insensitive parse that ignores `_`, `-` and whitespace, so
    /// `very_low`, `Very Low` and `VERYLOW` all match.
    pub fn parse(text: &str) -> Option<Self> {
        let key: String = text
            .chars()
            .filter(|c| !matches!(c, '_' | '-' | ' ' | '\t'))
            .flat_map(char::to_lowercase)
            .collect();
        match key.as_str() {
            "verylow" => Some(KnowledgeLevel::VeryLow),
            "low" => Some(KnowledgeLevel::Low),
            "middle" => Some(KnowledgeLevel::Middle),
            "high" => Some(KnowledgeLevel::High),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KnowledgeLevel::VeryLow => "very_low",
            KnowledgeLevel::Low => "low",
            KnowledgeLevel::Middle => "middle",
            KnowledgeLevel::High => "high",
        }
    }
}

/// One student record as read from the CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub stg: f64,
    pub scg: f64,
    pub str_: f64,
    pub lpr: f64,
    pub peg: f64,
    pub uns: KnowledgeLevel,
}

impl RawSample {
    /// Attributes in [`ATTRIBUTES`] order.
    pub fn attributes(&self) -> [f64; NUM_FEATURES] {
        [self.stg, self.scg, self.str_, self.lpr, self.peg]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncodedSample {
    pub features: Vec<f64>,
    pub class_index: usize,
    /// Single-output regression target, `class_index + 1`.
    pub class_value: f64,
    pub oaa_targets: [f64; NUM_CLASSES],
}

impl EncodedSample {
    fn new(features: Vec<f64>, level: KnowledgeLevel) -> Self {
        let class_index = level.index();
        let mut oaa_targets = [0.0; NUM_CLASSES];
        oaa_targets[class_index] = 1.0;
        EncodedSample {
            features,
            class_index,
            class_value: (class_index + 1) as f64,
            oaa_targets,
        }
    }
}

/// How raw attribute degrees become classifier inputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Encoding {
    Binarize { threshold: f64 },
    Passthrough,
}

impl Default for Encoding {
    fn default() -> Self {
        Encoding::Binarize { threshold: 0.5 }
    }
}

impl Encoding {
    pub fn apply(&self, samples: &[RawSample]) -> Result<Vec<EncodedSample>, DataError> {
        match *self {
            Encoding::Binarize { threshold } => binarize(samples, threshold),
            Encoding::Passthrough => Ok(passthrough(samples)),
        }
    }

    /// Range the encoded features live in.
    pub fn input_range(&self) -> (f64, f64) {
        match self {
            Encoding::Binarize { .. } => (-1.0, 1.0),
            Encoding::Passthrough => (0.0, 1.0),
        }
    }
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<RawSample>, DataError> {
    let file = std::fs::File::open(path)?;
    read_dataset(file)
}

/// Parses a dataset from any reader; see [`load_dataset`].
pub fn read_dataset<R: Read>(reader: R) -> Result<Vec<RawSample>, DataError> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header: HashMap<String, usize> = csv
        .headers()?
        .iter()
        .enumerate()
        .map(|(i, name)| (name.trim().to_ascii_uppercase(), i))
        .collect();
    let column = |name: &'static str| header.get(name).copied().ok_or(DataError::MissingColumn(name));
    let mut attr_cols = [0usize; NUM_FEATURES];
    for (slot, name) in attr_cols.iter_mut().zip(ATTRIBUTES) {
        *slot = column(name)?;
    }
    let label_col = column(LABEL_COLUMN)?;

    let mut samples = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let mut values = [0.0; NUM_FEATURES];
        for ((value, &col), name) in values.iter_mut().zip(&attr_cols).zip(ATTRIBUTES) {
            let text = record.get(col).unwrap_or("");
            let parsed: f64 = text.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: name,
                value: text.to_string(),
            })?;
            if !(0.0..=1.0).contains(&parsed) {
                return Err(DataError::OutOfRange {
                    row,
                    column: name,
                    value: parsed,
                });
            }
            *value = parsed;
        }
        let label_text = record.get(label_col).unwrap_or("");
        let uns = KnowledgeLevel::parse(label_text).ok_or_else(|| DataError::UnknownLabel {
            row,
            value: label_text.to_string(),
        })?;
        let [stg, scg, str_, lpr, peg] = values;
        samples.push(RawSample {
            stg,
            scg,
            str_,
            lpr,
            peg,
            uns,
        });
    }
    Ok(samples)
}

/// Maps every attribute to `+1` when it is at or above `threshold`, `-1` otherwise.
pub fn binarize(samples: &[RawSample], threshold: f64) -> Result<Vec<EncodedSample>, DataError> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(DataError::InvalidThreshold(threshold));
    }
    Ok(samples
        .iter()
        .map(|s| {
            let features = s
                .attributes()
                .iter()
                .map(|&v| if v >= threshold { 1.0 } else { -1.0 })
                .collect();
            EncodedSample::new(features, s.uns)
        })
        .collect())
}

/// Keeps the raw `[0,1]` degrees as features.
pub fn passthrough(samples: &[RawSample]) -> Vec<EncodedSample> {
    samples
        .iter()
        .map(|s| EncodedSample::new(s.attributes().to_vec(), s.uns))
        .collect()
}

pub fn class_distribution(samples: &[EncodedSample]) -> [usize; NUM_CLASSES] {
    let mut counts = [0; NUM_CLASSES];
    for s in samples {
        counts[s.class_index] += 1;
    }
    counts
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub train: Vec<EncodedSample>,
    pub test: Vec<EncodedSample>,
    /// Positions of the train samples in the source list, ascending.
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
    pub seed: u64,
    pub ratio: f64,
}

/// Serialized form of a split: indices only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    pub seed: u64,
    pub ratio: f64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

impl DatasetSplit {
    fn from_indices(
        samples: &[EncodedSample],
        mut train_indices: Vec<usize>,
        mut test_indices: Vec<usize>,
        seed: u64,
        ratio: f64,
    ) -> Self {
        train_indices.sort_unstable();
        test_indices.sort_unstable();
        DatasetSplit {
            train: train_indices.iter().map(|&i| samples[i].clone()).collect(),
            test: test_indices.iter().map(|&i| samples[i].clone()).collect(),
            train_indices,
            test_indices,
            seed,
            ratio,
        }
    }

    pub fn record(&self) -> SplitRecord {
        SplitRecord {
            seed: self.seed,
            ratio: self.ratio,
            train: self.train_indices.clone(),
            test: self.test_indices.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.record()).expect("split record serializes")
    }
}

fn shuffled_class_members(samples: &[EncodedSample], seed: u64) -> Vec<Vec<usize>> {
    let mut members = vec![Vec::new(); NUM_CLASSES];
    for (i, s) in samples.iter().enumerate() {
        members[s.class_index].push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for m in &mut members {
        m.shuffle(&mut rng);
    }
    members
}

/// Per-class random split with `round(ratio * class_total)` training samples.
/// Classes absent from `samples` are skipped.
pub fn split_stratified(
    samples: &[EncodedSample],
    ratio: f64,
    seed: u64,
) -> Result<DatasetSplit, DataError> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(DataError::InvalidRatio(ratio));
    }
    if samples.is_empty() {
        return Err(DataError::EmptyClass);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for members in shuffled_class_members(samples, seed) {
        let n_train = (ratio * members.len() as f64).round() as usize;
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    Ok(DatasetSplit::from_indices(samples, train, test, seed, ratio))
}

/// First `train_rows` samples train, the rest test (the UCI file's own layout).
pub fn split_predefined(
    samples: &[EncodedSample],
    train_rows: usize,
) -> Result<DatasetSplit, DataError> {
    if samples.len() <= train_rows || train_rows == 0 {
        return Err(DataError::TooFewForPredefined {
            train_rows,
            len: samples.len(),
        });
    }
    let ratio = train_rows as f64 / samples.len() as f64;
    Ok(DatasetSplit::from_indices(
        samples,
        (0..train_rows).collect(),
        (train_rows..samples.len()).collect(),
        0,
        ratio,
    ))
}

/// Stratified k-fold partition; split `i` tests on fold `i` and trains on the rest.
pub fn kfold(samples: &[EncodedSample], k: usize, seed: u64) -> Result<Vec<DatasetSplit>, DataError> {
    if samples.is_empty() {
        return Err(DataError::EmptyClass);
    }
    let members = shuffled_class_members(samples, seed);
    let smallest = members
        .iter()
        .filter(|m| !m.is_empty())
        .map(Vec::len)
        .min()
        .unwrap_or(0);
    if k < 2 || k > smallest {
        return Err(DataError::InvalidFolds { k, smallest });
    }
    let mut fold_of = vec![0usize; samples.len()];
    // dealing continues across classes so fold sizes differ by at most one
    let mut next = 0;
    for m in &members {
        for &i in m {
            fold_of[i] = next % k;
            next += 1;
        }
    }
    let ratio = (k - 1) as f64 / k as f64;
    Ok((0..k)
        .map(|fold| {
            let (test, train): (Vec<usize>, Vec<usize>) =
                (0..samples.len()).partition(|&i| fold_of[i] == fold);
            DatasetSplit::from_indices(samples, train, test, seed, ratio)
        })
        .collect())
}
