//! Membership functions and first/zero-order Sugeno inference.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum FuzzyError {
    #[error("invalid membership function: {0}")]
    InvalidParameter(String),
    #[error("expected {expected} inputs, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("rule {rule} refers to membership function {index} of input {input}, which does not exist")]
    AntecedentOutOfRange {
        rule: usize,
        input: usize,
        index: usize,
    },
    #[error("firing strength {index} is negative ({value})")]
    NegativeWeight { index: usize, value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MfShape {
    Gbell,
    Gauss2,
    Triangular,
}

impl MfShape {
    pub fn is_differentiable(self) -> bool {
        !matches!(self, MfShape::Triangular)
    }
}

impl std::str::FromStr for MfShape {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "gbell" | "gbellmf" => Ok(MfShape::Gbell),
            "gauss2" | "gauss2mf" => Ok(MfShape::Gauss2),
            "triangular" | "trimf" => Ok(MfShape::Triangular),
            other => Err(format!("unknown membership shape {other:?}")),
        }
    }
}

/// A parametric fuzzy set.
///
/// Parameter vectors (see [`MembershipFunction::params`]) are ordered
/// `[a, b, c]`, `[sigma_left, c_left, sigma_right, c_right]` and
/// `[left, peak, right]` respectively.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum MembershipFunction {
    /// `1 / (1 + |(x - c) / a|^(2b))`
    GeneralizedBell { a: f64, b: f64, c: f64 },
    /// Gaussian shoulders around a flat top on `[c_left, c_right]`.
    TwoSidedGaussian {
        sigma_left: f64,
        c_left: f64,
        sigma_right: f64,
        c_right: f64,
    },
    Triangular { left: f64, peak: f64, right: f64 },
}

fn invalid(msg: String) -> FuzzyError {
    FuzzyError::InvalidParameter(msg)
}

impl MembershipFunction {
    pub fn gbell(a: f64, b: f64, c: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::GeneralizedBell { a, b, c };
        mf.validate()?;
        Ok(mf)
    }

    pub fn gauss2(sigma_left: f64, c_left: f64, sigma_right: f64, c_right: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::TwoSidedGaussian {
            sigma_left,
            c_left,
            sigma_right,
            c_right,
        };
        mf.validate()?;
        Ok(mf)
    }

    pub fn triangular(left: f64, peak: f64, right: f64) -> Result<Self, FuzzyError> {
        let mf = MembershipFunction::Triangular { left, peak, right };
        mf.validate()?;
        Ok(mf)
    }

    pub fn shape(&self) -> MfShape {
        match self {
            MembershipFunction::GeneralizedBell { .. } => MfShape::Gbell,
            MembershipFunction::TwoSidedGaussian { .. } => MfShape::Gauss2,
            MembershipFunction::Triangular { .. } => MfShape::Triangular,
        }
    }

    pub fn validate(&self) -> Result<(), FuzzyError> {
        if self.params().iter().any(|p| !p.is_finite()) {
            return Err(invalid(format!("non-finite parameter in {self:?}")));
        }
        match *self {
            MembershipFunction::GeneralizedBell { a, b, .. } => {
                if a <= 0.0 || b <= 0.0 {
                    return Err(invalid(format!("bell needs a > 0 and b > 0, got a={a}, b={b}")));
                }
            }
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => {
                if sigma_left <= 0.0 || sigma_right <= 0.0 {
                    return Err(invalid(format!(
                        "gauss2 needs positive sigmas, got {sigma_left} and {sigma_right}"
                    )));
                }
                if c_left > c_right {
                    return Err(invalid(format!(
                        "gauss2 needs c_left <= c_right, got {c_left} > {c_right}"
                    )));
                }
            }
            MembershipFunction::Triangular { left, peak, right } => {
                if !(left < peak && peak < right) {
                    return Err(invalid(format!(
                        "triangle needs left < peak < right, got {left}, {peak}, {right}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn degree(&self, x: f64) -> f64 {
        match *self {
            MembershipFunction::GeneralizedBell { a, b, c } => eval_gbell(a, b, c, x),
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => eval_gauss2(sigma_left, c_left, sigma_right, c_right, x),
            MembershipFunction::Triangular { left, peak, right } => eval_triangular(left, peak, right, x),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            MembershipFunction::GeneralizedBell { a, b, c } => vec![a, b, c],
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => vec![sigma_left, c_left, sigma_right, c_right],
            MembershipFunction::Triangular { left, peak, right } => vec![left, peak, right],
        }
    }

    /// Overwrites the parameters without validation; pair with [`Self::clamp`].
    pub fn set_params(&mut self, p: &[f64]) {
        match self {
            MembershipFunction::GeneralizedBell { a, b, c } => {
                (*a, *b, *c) = (p[0], p[1], p[2]);
            }
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => {
                (*sigma_left, *c_left, *sigma_right, *c_right) = (p[0], p[1], p[2], p[3]);
            }
            MembershipFunction::Triangular { left, peak, right } => {
                (*left, *peak, *right) = (p[0], p[1], p[2]);
            }
        }
    }

    /// Restores parameter invariants after an unconstrained update:
    /// widths and slopes are floored at `min_width`, and a gauss2 plateau
    /// whose ends crossed is swapped back into order.
    pub fn clamp(&mut self, min_width: f64) {
        match self {
            MembershipFunction::GeneralizedBell { a, b, .. } => {
                *a = a.max(min_width);
                *b = b.max(min_width);
            }
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => {
                *sigma_left = sigma_left.max(min_width);
                *sigma_right = sigma_right.max(min_width);
                if *c_left > *c_right {
                    std::mem::swap(c_left, c_right);
                }
            }
            MembershipFunction::Triangular { .. } => {}
        }
    }

    /// Partial derivatives of the degree at `x` with respect to each parameter,
    /// in [`Self::params`] order. Triangles have kinks and return zeros.
    pub fn param_gradient(&self, x: f64) -> Vec<f64> {
        match *self {
            MembershipFunction::GeneralizedBell { a, b, c } => {
                let d = x - c;
                let u2 = (d / a) * (d / a);
                if u2 == 0.0 {
                    return vec![0.0, 0.0, 0.0];
                }
                let z = u2.powf(b);
                let mu = 1.0 / (1.0 + z);
                // mu^2 * z == mu * (1 - mu), written to survive z = inf
                let one_minus = if z.is_infinite() { 1.0 } else { z / (1.0 + z) };
                let core = mu * one_minus;
                vec![2.0 * b * core / a, -core * u2.ln(), 2.0 * b * core / d]
            }
            MembershipFunction::TwoSidedGaussian {
                sigma_left,
                c_left,
                sigma_right,
                c_right,
            } => {
                let mut g = vec![0.0; 4];
                if x < c_left {
                    let d = x - c_left;
                    let mu = (-d * d / (2.0 * sigma_left * sigma_left)).exp();
                    g[0] = mu * d * d / sigma_left.powi(3);
                    g[1] = mu * d / (sigma_left * sigma_left);
                } else if x > c_right {
                    let d = x - c_right;
                    let mu = (-d * d / (2.0 * sigma_right * sigma_right)).exp();
                    g[2] = mu * d * d / sigma_right.powi(3);
                    g[3] = mu * d / (sigma_right * sigma_right);
                }
                g
            }
            MembershipFunction::Triangular { .. } => vec![0.0; 3],
        }
    }
}

pub fn eval_gbell(a: f64, b: f64, c: f64, x: f64) -> f64 {
    let u2 = ((x - c) / a).powi(2);
    1.0 / (1.0 + u2.powf(b))
}

pub fn eval_gauss2(sigma_left: f64, c_left: f64, sigma_right: f64, c_right: f64, x: f64) -> f64 {
    if x < c_left {
        (-(x - c_left).powi(2) / (2.0 * sigma_left * sigma_left)).exp()
    } else if x > c_right {
        (-(x - c_right).powi(2) / (2.0 * sigma_right * sigma_right)).exp()
    } else {
        1.0
    }
}

pub fn eval_triangular(left: f64, peak: f64, right: f64, x: f64) -> f64 {
    if x <= left || x >= right {
        0.0
    } else if x <= peak {
        (x - left) / (peak - left)
    } else {
        (right - x) / (right - peak)
    }
}

/// Per-input lists of membership functions.
pub type MfBank = Vec<Vec<MembershipFunction>>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SugenoRule {
    /// Index into `mf_bank[j]` for every input `j`.
    pub antecedent: Vec<usize>,
    /// `[p0]` (constant) or `[p0, p1, .., pn]` for `p0 + sum(p_j * x_j)`.
    pub consequent: Vec<f64>,
}

impl SugenoRule {
    pub fn output(&self, x: &[f64]) -> f64 {
        let (p0, slopes) = self.consequent.split_first().expect("consequent has a constant term");
        p0 + slopes.iter().zip(x).map(|(p, xi)| p * xi).sum::<f64>()
    }
}

fn check_input(mf_bank: &MfBank, x: &[f64]) -> Result<(), FuzzyError> {
    if x.len() != mf_bank.len() {
        return Err(FuzzyError::DimensionMismatch {
            expected: mf_bank.len(),
            got: x.len(),
        });
    }
    Ok(())
}

/// Product T-norm of each rule's antecedent degrees.
pub fn firing_strengths(rules: &[SugenoRule], mf_bank: &MfBank, x: &[f64]) -> Result<Vec<f64>, FuzzyError> {
    check_input(mf_bank, x)?;
    let degrees: Vec<Vec<f64>> = mf_bank
        .iter()
        .zip(x)
        .map(|(mfs, &xj)| mfs.iter().map(|mf| mf.degree(xj)).collect())
        .collect();
    rules
        .iter()
        .enumerate()
        .map(|(r, rule)| {
            if rule.antecedent.len() != x.len() {
                return Err(FuzzyError::DimensionMismatch {
                    expected: x.len(),
                    got: rule.antecedent.len(),
                });
            }
            rule.antecedent
                .iter()
                .enumerate()
                .try_fold(1.0, |w, (j, &m)| {
                    degrees[j].get(m).map(|d| w * d).ok_or(FuzzyError::AntecedentOutOfRange {
                        rule: r,
                        input: j,
                        index: m,
                    })
                })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized {
    pub weights: Vec<f64>,
    /// Set when every firing strength was zero and uniform weights were used.
    pub degenerate: bool,
}

pub fn normalize_weights(w: &[f64]) -> Result<Normalized, FuzzyError> {
    if let Some((index, &value)) = w.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
        return Err(FuzzyError::NegativeWeight { index, value });
    }
    let total: f64 = w.iter().sum();
    if total > 0.0 {
        Ok(Normalized {
            weights: w.iter().map(|v| v / total).collect(),
            degenerate: false,
        })
    } else {
        let uniform = 1.0 / w.len().max(1) as f64;
        Ok(Normalized {
            weights: vec![uniform; w.len()],
            degenerate: true,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Inference {
    pub output: f64,
    pub normalized: Normalized,
}

pub fn sugeno_infer(rules: &[SugenoRule], mf_bank: &MfBank, x: &[f64]) -> Result<Inference, FuzzyError> {
    let w = firing_strengths(rules, mf_bank, x)?;
    let normalized = normalize_weights(&w)?;
    let output = rules
        .iter()
        .zip(&normalized.weights)
        .map(|(rule, wn)| wn * rule.output(x))
        .sum();
    Ok(Inference { output, normalized })
}
