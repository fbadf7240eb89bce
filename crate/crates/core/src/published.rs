//! Published reference figures, loaded from a JSON data file.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::cap_consistent;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedRow {
    pub method: String,
    pub family: String,
    pub mwcs: f64,
    /// Kept as printed so the number of decimals is known.
    pub cap: String,
    #[serde(default)]
    pub citation: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PublishedOaaRow {
    pub class: usize,
    pub variant: String,
    pub tpr: f64,
    pub fpr: f64,
    pub tnr: f64,
    pub fnr: f64,
    pub total_accuracy: f64,
    pub random_accuracy: f64,
    pub kappa: f64,
    pub auc: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub very_low: usize,
    pub low: usize,
    pub middle: usize,
    pub high: usize,
}

impl ClassCounts {
    pub fn as_array(&self) -> [usize; 4] {
        [self.very_low, self.low, self.middle, self.high]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Published {
    pub source: String,
    pub class_distribution: ClassCounts,
    pub reported_sample_count: usize,
    pub comparison: Vec<PublishedRow>,
    #[serde(default)]
    pub oaa_ann: Vec<PublishedOaaRow>,
    #[serde(default)]
    pub oaa_anfis: Vec<PublishedOaaRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyCheck {
    pub method: String,
    pub mwcs: f64,
    pub printed_cap: String,
    pub implied_cap: f64,
    pub consistent: bool,
}

impl Published {
    pub fn load(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))
    }

    /// Checks every comparison row's (MWCS, CAP) pair against `test_size`.
    pub fn consistency(&self, test_size: usize) -> Vec<ConsistencyCheck> {
        self.comparison
            .iter()
            .map(|r| ConsistencyCheck {
                method: r.method.clone(),
                mwcs: r.mwcs,
                printed_cap: r.cap.clone(),
                implied_cap: 100.0 * (1.0 - r.mwcs / test_size as f64),
                consistent: cap_consistent(r.mwcs, &r.cap, test_size),
            })
            .collect()
    }
}
