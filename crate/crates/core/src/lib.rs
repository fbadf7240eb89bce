//! Knowledge-level classification of students with a grid-partitioned ANFIS
//! and an MLP baseline, plus the one-against-all evaluation toolkit.

pub mod anfis;
pub mod data;
pub mod fuzzy;
pub mod linalg;
pub mod metrics;
pub mod mlp;
pub mod pipeline;
pub mod published;

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
