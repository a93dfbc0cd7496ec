//! Open-set evaluation metrics.
//!
//! Unknown detection is scored as a binary problem with the unknown class as
//! the positive label. Closed-set quality is summarized by a macro-F1 over
//! all K + 1 labels (the K known classes and "unknown").

use serde::{Deserialize, Serialize};

use crate::activation::ActivationSet;
use crate::calibrators::CalibratedOutput;
use crate::error::{Error, Result};

/// Which class a ROC curve scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RocTarget {
    Class(usize),
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub target: RocTarget,
    /// Descending; the first entry is `+inf` for the (0, 0) corner.
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

fn check_binary(scores: &[f64], positives: &[bool]) -> Result<(usize, usize)> {
    if scores.len() != positives.len() {
        return Err(Error::LengthMismatch {
            left: scores.len(),
            right: positives.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument("NaN score".into()));
    }
    let pos = positives.iter().filter(|&&p| p).count();
    let neg = positives.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::SingleClass);
    }
    Ok((pos, neg))
}

/// Rank-based AUROC (Mann–Whitney U / (n_pos * n_neg)), ties counted half.
pub fn auroc(scores: &[f64], positives: &[bool]) -> Result<f64> {
    let (n_pos, n_neg) = check_binary(scores, positives)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Sum of mid-ranks (1-based) of the positives.
    let mut rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let mid_rank = (start + 1 + end) as f64 / 2.0;
        let tied_pos = order[start..end].iter().filter(|&&i| positives[i]).count();
        rank_sum += mid_rank * tied_pos as f64;
        start = end;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

/// Step ROC curve over the distinct score values; samples sharing a score
/// switch together.
pub fn roc_curve(scores: &[f64], positives: &[bool]) -> Result<RocCurve> {
    let (n_pos, n_neg) = check_binary(scores, positives)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut thresholds = vec![f64::INFINITY];
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut auc = 0.0;
    let mut start = 0;
    while start < order.len() {
        let threshold = scores[order[start]];
        let mut end = start;
        while end < order.len() && scores[order[end]] == threshold {
            if positives[order[end]] {
                tp += 1;
            } else {
                fp += 1;
            }
            end += 1;
        }
        let (x, y) = (fp as f64 / n_neg as f64, tp as f64 / n_pos as f64);
        let (px, py) = (*fpr.last().unwrap(), *tpr.last().unwrap());
        auc += (x - px) * (y + py) / 2.0;
        thresholds.push(threshold);
        fpr.push(x);
        tpr.push(y);
        start = end;
    }
    Ok(RocCurve {
        target: RocTarget::Unknown,
        thresholds,
        fpr,
        tpr,
        auc,
    })
}

/// Score used for the unknown-detection ROC.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownScore {
    /// `probabilities[K]`.
    #[default]
    UnknownProbability,
    /// `1 - max known probability`; for heads whose unknown slot is always 0.
    OneMinusMaxKnown,
}

impl UnknownScore {
    pub fn score(self, out: &CalibratedOutput) -> f64 {
        let k = out.num_classes();
        match self {
            UnknownScore::UnknownProbability => out.probabilities[k],
            UnknownScore::OneMinusMaxKnown => {
                1.0 - out.probabilities[..k]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Absent when the labels contain no unknowns (or only unknowns).
    pub auroc_unknown: Option<f64>,
    pub macro_f1: f64,
    /// K + 1 entries, unknown last.
    pub per_class_f1: Vec<f64>,
    /// Classes that never occur in either predictions or truth; their F1 is
    /// reported as 0.
    pub undefined_f1: Vec<usize>,
    /// One-vs-rest curves for every label that has both positives and
    /// negatives, unknown last.
    pub roc_curves: Vec<RocCurve>,
    /// Rows are true labels, columns predictions; index K is unknown.
    pub confusion: Vec<Vec<usize>>,
    pub n_known: usize,
    pub n_unknown: usize,
}

/// Per-class F1 from a confusion matrix (rows truth, columns predicted).
/// Returns the scores and the indices whose F1 is undefined.
pub fn f1_scores(confusion: &[Vec<usize>]) -> (Vec<f64>, Vec<usize>) {
    let n = confusion.len();
    let mut scores = Vec::with_capacity(n);
    let mut undefined = Vec::new();
    for (c, row) in confusion.iter().enumerate() {
        let tp = row[c];
        let fn_ = row.iter().sum::<usize>() - tp;
        let fp = confusion.iter().map(|r| r[c]).sum::<usize>() - tp;
        let denom = 2 * tp + fp + fn_;
        if denom == 0 {
            undefined.push(c);
            scores.push(0.0);
        } else {
            scores.push(2.0 * tp as f64 / denom as f64);
        }
    }
    (scores, undefined)
}

pub fn evaluate(outputs: &[CalibratedOutput], true_labels: &[i32]) -> Result<EvaluationReport> {
    evaluate_with(outputs, true_labels, UnknownScore::UnknownProbability)
}

pub fn evaluate_with(
    outputs: &[CalibratedOutput],
    true_labels: &[i32],
    unknown_score: UnknownScore,
) -> Result<EvaluationReport> {
    if outputs.len() != true_labels.len() {
        return Err(Error::LengthMismatch {
            left: outputs.len(),
            right: true_labels.len(),
        });
    }
    let Some(first) = outputs.first() else {
        return Err(Error::InvalidArgument("nothing to evaluate".into()));
    };
    let k = first.num_classes();
    if let Some(bad) = outputs.iter().find(|o| o.num_classes() != k) {
        return Err(Error::DimensionMismatch {
            expected: k,
            actual: bad.num_classes(),
        });
    }
    let truth: Vec<usize> = true_labels
        .iter()
        .enumerate()
        .map(|(row, &l)| match l {
            -1 => Ok(k),
            l if l >= 0 && (l as usize) < k => Ok(l as usize),
            label => Err(Error::LabelOutOfRange { row, label }),
        })
        .collect::<Result<_>>()?;

    let mut confusion = vec![vec![0usize; k + 1]; k + 1];
    for (out, &t) in outputs.iter().zip(&truth) {
        confusion[t][out.predicted] += 1;
    }
    let (per_class_f1, undefined_f1) = f1_scores(&confusion);
    let macro_f1 = per_class_f1.iter().sum::<f64>() / per_class_f1.len() as f64;

    let mut roc_curves = Vec::new();
    let mut auroc_unknown = None;
    for class in 0..=k {
        let positives: Vec<bool> = truth.iter().map(|&t| t == class).collect();
        let scores: Vec<f64> = if class == k {
            outputs.iter().map(|o| unknown_score.score(o)).collect()
        } else {
            outputs.iter().map(|o| o.probabilities[class]).collect()
        };
        match roc_curve(&scores, &positives) {
            Ok(mut curve) => {
                if class == k {
                    auroc_unknown = Some(curve.auc);
                } else {
                    curve.target = RocTarget::Class(class);
                }
                roc_curves.push(curve);
            }
            Err(Error::SingleClass) => {}
            Err(e) => return Err(e),
        }
    }

    let n_unknown = truth.iter().filter(|&&t| t == k).count();
    Ok(EvaluationReport {
        auroc_unknown,
        macro_f1,
        per_class_f1,
        undefined_f1,
        roc_curves,
        confusion,
        n_known: truth.len() - n_unknown,
        n_unknown,
    })
}

/// Paired columns behind [`activation_distance_correlation`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationDistance {
    pub correlation: f64,
    /// Activation at the probe column, one per target-class row.
    pub activation: Vec<f64>,
    /// Euclidean distance of the row to the target-class MAV.
    pub distance: Vec<f64>,
}

/// Pearson correlation between the `probe` activation and the distance to
/// the `target` class mean, over the rows labelled `target`.
pub fn activation_distance_correlation(
    train: &ActivationSet,
    target: usize,
    probe: usize,
) -> Result<ActivationDistance> {
    let k = train.num_classes();
    for c in [target, probe] {
        if c >= k {
            return Err(Error::InvalidArgument(format!(
                "class {c} out of range for K = {k}"
            )));
        }
    }
    let rows: Vec<Vec<f64>> = train
        .class_rows(target)
        .map(|r| r.iter().map(|&v| f64::from(v)).collect())
        .collect();
    if rows.len() < 3 {
        return Err(Error::InsufficientData {
            class: Some(target),
            needed: 3,
            available: rows.len(),
        });
    }
    let n = rows.len() as f64;
    let mut mav = vec![0.0; k];
    for r in &rows {
        for (m, v) in mav.iter_mut().zip(r) {
            *m += v / n;
        }
    }
    let activation: Vec<f64> = rows.iter().map(|r| r[probe]).collect();
    let distance: Vec<f64> = rows
        .iter()
        .map(|r| {
            r.iter()
                .zip(&mav)
                .map(|(x, m)| (x - m).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let correlation = pearson(&activation, &distance)?;
    Ok(ActivationDistance {
        correlation,
        activation,
        distance,
    })
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("probe activation"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("distance to class mean"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}
