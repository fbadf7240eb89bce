//! One-against-all confusion statistics, Cohen's kappa, ROC/AUC and the
//! mean-wrong-count / accuracy-percentage pair used in comparison tables.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::NUM_CLASSES;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("kappa is undefined when random accuracy is 1")]
    UndefinedKappa,
    #[error("ROC needs at least one positive and one negative label")]
    SingleClass,
    #[error("wrong count {count} exceeds test size {test_size}")]
    CountExceedsTestSize { count: usize, test_size: usize },
    #[error("class index {0} is outside 0..4")]
    BadClass(usize),
    #[error("score is not a finite number")]
    NonFiniteScore,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryConfusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl BinaryConfusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Same counts with the positive and negative roles exchanged.
    pub fn swapped(&self) -> Self {
        BinaryConfusion {
            tp: self.tn,
            tn: self.tp,
            fp: self.fn_,
            fn_: self.fp,
        }
    }

    fn nonempty_total(&self) -> Result<f64, MetricError> {
        match self.total() {
            0 => Err(MetricError::Empty),
            n => Ok(n as f64),
        }
    }
}

fn check_lengths(truth: &[usize], predicted: &[usize]) -> Result<(), MetricError> {
    if truth.len() != predicted.len() {
        return Err(MetricError::LengthMismatch {
            truth: truth.len(),
            predicted: predicted.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(())
}

/// Class `k` positive, every other class negative.
pub fn oaa_confusion(truth: &[usize], predicted: &[usize], k: usize) -> Result<BinaryConfusion, MetricError> {
    check_lengths(truth, predicted)?;
    let mut c = BinaryConfusion::default();
    for (&t, &p) in truth.iter().zip(predicted) {
        match (t == k, p == k) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

pub fn total_accuracy(c: &BinaryConfusion) -> Result<f64, MetricError> {
    Ok((c.tp + c.tn) as f64 / c.nonempty_total()?)
}

/// Chance agreement of the row and column marginals.
pub fn random_accuracy(c: &BinaryConfusion) -> Result<f64, MetricError> {
    let total = c.nonempty_total()?;
    let (tp, fp, tn, fn_) = (c.tp as f64, c.fp as f64, c.tn as f64, c.fn_ as f64);
    Ok(((tn + fp) * (tn + fn_) + (tp + fn_) * (tp + fp)) / (total * total))
}

/// `(total_accuracy - random_accuracy) / (1 - random_accuracy)`
pub fn cohen_kappa(c: &BinaryConfusion) -> Result<f64, MetricError> {
    let acc = total_accuracy(c)?;
    let chance = random_accuracy(c)?;
    if chance >= 1.0 {
        return Err(MetricError::UndefinedKappa);
    }
    Ok((acc - chance) / (1.0 - chance))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    /// Scores at or above this value are called positive.
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
}

impl RocCurve {
    /// `threshold,fpr,tpr` rows; the starting sentinel prints as `inf`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("threshold,fpr,tpr\n");
        for p in &self.points {
            out.push_str(&format!("{},{},{}\n", p.threshold, p.fpr, p.tpr));
        }
        out
    }
}

/// Sweeps thresholds over the distinct scores in descending order, starting
/// from a `+inf` sentinel at `(0,0)`. Tied scores move the curve in one step.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<RocCurve, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch {
            truth: labels.len(),
            predicted: scores.len(),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(MetricError::NonFiniteScore);
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MetricError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        while i < order.len() && scores[order[i]] == threshold {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            threshold,
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
        });
    }
    Ok(RocCurve { points })
}

/// Trapezoidal area under the curve.
pub fn auc(curve: &RocCurve) -> f64 {
    curve
        .points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MwcsCap {
    pub mwcs: f64,
    pub cap: f64,
}

/// Mean wrong count across runs and the matching accuracy percentage.
pub fn mwcs_cap(wrong_counts: &[usize], test_size: usize) -> Result<MwcsCap, MetricError> {
    if wrong_counts.is_empty() || test_size == 0 {
        return Err(MetricError::Empty);
    }
    if let Some(&count) = wrong_counts.iter().find(|&&c| c > test_size) {
        return Err(MetricError::CountExceedsTestSize { count, test_size });
    }
    let mwcs = wrong_counts.iter().sum::<usize>() as f64 / wrong_counts.len() as f64;
    Ok(MwcsCap {
        mwcs,
        cap: 100.0 * (1.0 - mwcs / test_size as f64),
    })
}

/// Whether a printed accuracy percentage follows from `mwcs` and `test_size`:
/// the exact value must round or truncate to the printed digits.
pub fn cap_consistent(mwcs: f64, printed_cap: &str, test_size: usize) -> bool {
    let Ok(printed) = printed_cap.trim().parse::<f64>() else {
        return false;
    };
    let decimals = printed_cap.trim().split_once('.').map_or(0, |(_, frac)| frac.len()) as i32;
    let exact = 100.0 * (1.0 - mwcs / test_size as f64);
    let scale = 10f64.powi(decimals);
    let eps = 1e-9;
    let rounded = (exact * scale).round() / scale;
    let truncated = (exact * scale + eps).floor() / scale;
    (rounded - printed).abs() < eps || (truncated - printed).abs() < eps
}

/// One OAA row in table column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OaaRow {
    pub class: usize,
    pub confusion: BinaryConfusion,
    pub tpr: Option<f64>,
    pub fpr: Option<f64>,
    pub tnr: Option<f64>,
    pub fnr: Option<f64>,
    pub total_accuracy: f64,
    pub random_accuracy: f64,
    pub kappa: Option<f64>,
    pub auc: Option<f64>,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl OaaRow {
    pub fn from_confusion(class: usize, c: BinaryConfusion) -> Result<Self, MetricError> {
        let pos = c.tp + c.fn_;
        let neg = c.fp + c.tn;
        Ok(OaaRow {
            class,
            confusion: c,
            tpr: ratio(c.tp, pos),
            fnr: ratio(c.fn_, pos),
            fpr: ratio(c.fp, neg),
            tnr: ratio(c.tn, neg),
            total_accuracy: total_accuracy(&c)?,
            random_accuracy: random_accuracy(&c)?,
            kappa: cohen_kappa(&c).ok(),
            auc: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MulticlassEval {
    /// `confusion[true][predicted]`
    pub confusion: [[usize; NUM_CLASSES]; NUM_CLASSES],
    pub accuracy: f64,
    pub wrong: usize,
    pub total: usize,
    pub rows: Vec<OaaRow>,
}

pub fn evaluate_multiclass(truth: &[usize], predicted: &[usize]) -> Result<MulticlassEval, MetricError> {
    check_lengths(truth, predicted)?;
    let mut confusion = [[0usize; NUM_CLASSES]; NUM_CLASSES];
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= NUM_CLASSES {
            return Err(MetricError::BadClass(t));
        }
        if p >= NUM_CLASSES {
            return Err(MetricError::BadClass(p));
        }
        confusion[t][p] += 1;
    }
    let correct: usize = (0..NUM_CLASSES).map(|k| confusion[k][k]).sum();
    let rows = (0..NUM_CLASSES)
        .map(|k| OaaRow::from_confusion(k, oaa_confusion(truth, predicted, k)?))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MulticlassEval {
        confusion,
        accuracy: correct as f64 / truth.len() as f64,
        wrong: truth.len() - correct,
        total: truth.len(),
        rows,
    })
}

impl MulticlassEval {
    /// Fills each row's AUC from per-sample class scores. Classes missing
    /// from `truth`, or present in every sample, keep `auc = None`.
    pub fn attach_auc(&mut self, truth: &[usize], scores: &[[f64; NUM_CLASSES]]) -> Result<(), MetricError> {
        if truth.len() != scores.len() {
            return Err(MetricError::LengthMismatch {
                truth: truth.len(),
                predicted: scores.len(),
            });
        }
        for row in &mut self.rows {
            let labels: Vec<bool> = truth.iter().map(|&t| t == row.class).collect();
            let s: Vec<f64> = scores.iter().map(|r| r[row.class]).collect();
            row.auc = match roc_curve(&s, &labels) {
                Ok(curve) => Some(auc(&curve)),
                Err(MetricError::SingleClass) => None,
                Err(e) => return Err(e),
            };
        }
        Ok(())
    }
}
