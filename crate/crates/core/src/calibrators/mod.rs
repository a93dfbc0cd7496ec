//! Scoring heads that turn a length-K activation vector into K + 1
//! probabilities, the last slot being "unknown".

mod metamax;
mod openmax;
mod softmax;

use serde::{Deserialize, Serialize};

use crate::activation::{argmax, ActivationSet};
use crate::error::{Error, Result};

pub use metamax::{nonmatch_scores, MetaMaxCalibrator, DEFAULT_Q};
pub use openmax::{DistanceKind, OpenMaxCalibrator, DEFAULT_ETA};
pub use softmax::{softmax_predict, SoftMaxCalibrator};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibratedOutput {
    /// K + 1 probabilities; index K is the unknown class.
    pub probabilities: Vec<f64>,
    /// Winning index in `0..=K`.
    pub predicted: usize,
    pub rejected: bool,
    pub revised_activations: Vec<f64>,
    pub unknown_activation: f64,
}

impl CalibratedOutput {
    pub fn num_classes(&self) -> usize {
        self.revised_activations.len()
    }

    /// Softmax over `revised ⧺ [unknown]`, prediction by argmax.
    pub(crate) fn from_logits(revised: Vec<f64>, unknown: f64) -> Self {
        let mut logits = revised.clone();
        logits.push(unknown);
        let probabilities = softmax(&logits);
        let predicted = argmax(&probabilities);
        Self {
            rejected: predicted == revised.len(),
            probabilities,
            predicted,
            revised_activations: revised,
            unknown_activation: unknown,
        }
    }
}

/// Softmax with the maximum subtracted before exponentiation.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&v| (v - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Indices sorted by descending activation, ties by ascending index.
pub(crate) fn descending_ranks(a: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..a.len()).collect();
    idx.sort_by(|&x, &y| a[y].total_cmp(&a[x]));
    idx
}

pub(crate) fn check_query(a: &[f64], k: usize) -> Result<()> {
    if a.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: a.len(),
        });
    }
    if let Some(i) = a.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite activation at index {i}"
        )));
    }
    Ok(())
}

/// Common contract of the three heads.
pub trait OpenSetCalibrator {
    fn num_classes(&self) -> usize;

    fn predict(&self, activations: &[f64]) -> Result<CalibratedOutput>;

    fn predict_set(&self, set: &ActivationSet) -> Result<Vec<CalibratedOutput>> {
        if set.num_classes() != self.num_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.num_classes(),
                actual: set.num_classes(),
            });
        }
        (0..set.len())
            .map(|i| self.predict(&set.row_f64(i)))
            .collect()
    }
}

/// How many training rows survived the correctly-classified filter.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterReport {
    pub total_rows: usize,
    pub known_rows: usize,
    pub correct_rows: usize,
    pub per_class_correct: Vec<usize>,
}

/// Keep known rows whose argmax equals their label.
pub fn correctly_classified(
    train: &ActivationSet,
) -> Result<(Option<ActivationSet>, FilterReport)> {
    train.check_labels_in_range()?;
    let k = train.num_classes();
    let mut report = FilterReport {
        total_rows: train.len(),
        known_rows: train.labels().iter().filter(|&&l| l >= 0).count(),
        correct_rows: 0,
        per_class_correct: vec![0; k],
    };
    let kept = train.filter(|row, label| {
        let ok = label >= 0 && argmax(row) == label as usize;
        if ok {
            report.per_class_correct[label as usize] += 1;
        }
        ok
    });
    report.correct_rows = report.per_class_correct.iter().sum();
    Ok((kept, report))
}

/// Any of the three heads, as stored in a calibrator file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum Calibrator {
    Softmax(SoftMaxCalibrator),
    Openmax(OpenMaxCalibrator),
    Metamax(MetaMaxCalibrator),
}

impl Calibrator {
    pub fn method_name(&self) -> &'static str {
        match self {
            Calibrator::Softmax(_) => "softmax",
            Calibrator::Openmax(_) => "openmax",
            Calibrator::Metamax(_) => "metamax",
        }
    }

    fn inner(&self) -> &dyn OpenSetCalibrator {
        match self {
            Calibrator::Softmax(c) => c,
            Calibrator::Openmax(c) => c,
            Calibrator::Metamax(c) => c,
        }
    }
}

impl OpenSetCalibrator for Calibrator {
    fn num_classes(&self) -> usize {
        self.inner().num_classes()
    }

    fn predict(&self, activations: &[f64]) -> Result<CalibratedOutput> {
        self.inner().predict(activations)
    }
}
