//! Confusion matrices, precision/recall/F-scores and Cohen's kappa.
//!
//! Any ratio whose denominator is zero is reported as 0, so a detector that
//! never fires scores precision 0, recall 0 and F1 0 rather than NaN.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    /// Count one instance.
    pub fn record(&mut self, predicted: bool, actual: bool) {
        match (actual, predicted) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (true, false) => self.fn_ += 1,
            (false, false) => self.tn += 1,
        }
    }

    /// The same matrix with the negative class treated as positive.
    pub fn flipped(&self) -> Self {
        Self {
            tp: self.tn,
            fp: self.fn_,
            fn_: self.fp,
            tn: self.tp,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub f1_positive: f64,
    pub f1_negative: f64,
    pub f_beta: f64,
    pub beta: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fp)
}

pub fn recall(cm: &ConfusionMatrix) -> f64 {
    ratio(cm.tp, cm.tp + cm.fn_)
}

pub fn confusion_from(verdicts: &[bool], labels: &[bool]) -> Result<ConfusionMatrix> {
    if verdicts.len() != labels.len() {
        return Err(Error::LengthMismatch {
            verdicts: verdicts.len(),
            labels: labels.len(),
        });
    }
    if verdicts.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut cm = ConfusionMatrix::default();
    for (&v, &l) in verdicts.iter().zip(labels) {
        cm.record(v, l);
    }
    Ok(cm)
}

/// `(1 + β²)·P·R / (β²·P + R)`, or 0 when the denominator vanishes.
pub fn f_beta_from(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

/// Harmonic mean of precision and recall.
pub fn f1_from(precision: f64, recall: f64) -> f64 {
    let den = precision + recall;
    if den == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / den
    }
}

pub fn compute_metrics(cm: &ConfusionMatrix, beta: f64) -> Result<MetricsReport> {
    if cm.total() == 0 {
        return Err(Error::EmptyInput);
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let p = precision(cm);
    let r = recall(cm);
    let f1 = f1_from(p, r);
    let neg = cm.flipped();
    Ok(MetricsReport {
        precision: p,
        recall: r,
        f1,
        f1_positive: f1,
        f1_negative: f1_from(precision(&neg), recall(&neg)),
        f_beta: f_beta_from(p, r, beta),
        beta,
    })
}

/// Cross-tabulation of two raters' binary labels over the same items.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementMatrix {
    pub both_pos: u64,
    pub r1pos_r2neg: u64,
    pub r1neg_r2pos: u64,
    pub both_neg: u64,
}

impl AgreementMatrix {
    pub fn new(both_pos: u64, r1pos_r2neg: u64, r1neg_r2pos: u64, both_neg: u64) -> Self {
        Self {
            both_pos,
            r1pos_r2neg,
            r1neg_r2pos,
            both_neg,
        }
    }

    pub fn record(&mut self, rater1: bool, rater2: bool) {
        match (rater1, rater2) {
            (true, true) => self.both_pos += 1,
            (true, false) => self.r1pos_r2neg += 1,
            (false, true) => self.r1neg_r2pos += 1,
            (false, false) => self.both_neg += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.both_pos + self.r1pos_r2neg + self.r1neg_r2pos + self.both_neg
    }

    pub fn disagreements(&self) -> u64 {
        self.r1pos_r2neg + self.r1neg_r2pos
    }

    /// Swap the raters.
    pub fn transpose(&self) -> Self {
        Self {
            both_pos: self.both_pos,
            r1pos_r2neg: self.r1neg_r2pos,
            r1neg_r2pos: self.r1pos_r2neg,
            both_neg: self.both_neg,
        }
    }
}

/// `(p_o - p_e) / (1 - p_e)`; 1 when chance agreement is already total.
pub fn cohen_kappa(m: &AgreementMatrix) -> Result<f64> {
    let n = m.total();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    let n = n as f64;
    let observed = (m.both_pos + m.both_neg) as f64 / n;
    let r1_pos = (m.both_pos + m.r1pos_r2neg) as f64 / n;
    let r2_pos = (m.both_pos + m.r1neg_r2pos) as f64 / n;
    let expected = r1_pos * r2_pos + (1.0 - r1_pos) * (1.0 - r2_pos);
    if expected >= 1.0 {
        return Ok(1.0);
    }
    Ok((observed - expected) / (1.0 - expected))
}
