use serde::{Deserialize, Serialize};

use super::{check_query, softmax, CalibratedOutput, OpenSetCalibrator};
use crate::activation::argmax;
use crate::error::{Error, Result};

/// Maximum-softmax-probability baseline: rejects when the top probability
/// falls below `threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftMaxCalibrator {
    pub num_classes: usize,
    pub threshold: f64,
}

impl SoftMaxCalibrator {
    pub fn new(num_classes: usize, threshold: f64) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        if !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must lie in [0, 1], got {threshold}"
            )));
        }
        Ok(Self {
            num_classes,
            threshold,
        })
    }
}

impl OpenSetCalibrator for SoftMaxCalibrator {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn predict(&self, activations: &[f64]) -> Result<CalibratedOutput> {
        check_query(activations, self.num_classes)?;
        Ok(softmax_predict(activations, self.threshold))
    }
}

/// Softmax over the K known classes; the unknown slot gets probability 0.
pub fn softmax_predict(activations: &[f64], threshold: f64) -> CalibratedOutput {
    let k = activations.len();
    let mut probabilities = softmax(activations);
    let best = argmax(&probabilities);
    let rejected = probabilities[best] < threshold;
    probabilities.push(0.0);
    CalibratedOutput {
        probabilities,
        predicted: if rejected { k } else { best },
        rejected,
        revised_activations: activations.to_vec(),
        unknown_activation: 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_logits() {
        let out = SoftMaxCalibrator::new(3, 0.0)
            .unwrap()
            .predict(&[0.0; 3])
            .unwrap();
        for p in &out.probabilities[..3] {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        assert_eq!(out.probabilities[3], 0.0);
        assert!(!out.rejected);
        assert_eq!(out.predicted, 0);
    }

    #[test]
    fn matches_direct_arithmetic() {
        let e = std::f64::consts::E;
        let z = e * e + 2.0 * e;
        let out = softmax_predict(&[2.0, 1.0, 1.0], 0.0);
        let expected = [e * e / z, e / z, e / z, 0.0];
        for (p, q) in out.probabilities.iter().zip(expected) {
            assert!((p - q).abs() < 1e-15);
        }
        assert!((out.probabilities[0] - 0.5761).abs() < 1e-4);
        assert!((out.probabilities[1] - 0.2119).abs() < 1e-4);
    }

    #[test]
    fn huge_logit_does_not_overflow() {
        let out = softmax_predict(&[1000.0, 0.0], 0.0);
        assert!((out.probabilities[0] - 1.0).abs() < 1e-15);
        assert!(out.probabilities[1] < 1e-300);
        assert_eq!(out.probabilities[2], 0.0);
    }

    #[test]
    fn threshold_rejects() {
        let out = softmax_predict(&[0.0, 0.0, 0.0], 0.5);
        assert!(out.rejected);
        assert_eq!(out.predicted, 3);
    }

    #[test]
    fn wrong_length() {
        let cal = SoftMaxCalibrator::new(3, 0.0).unwrap();
        assert!(matches!(
            cal.predict(&[1.0, 2.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 2
            })
        ));
        assert!(SoftMaxCalibrator::new(3, 1.5).is_err());
    }
}
