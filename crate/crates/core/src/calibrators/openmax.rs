use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{
    check_query, correctly_classified, descending_ranks, CalibratedOutput, FilterReport,
    OpenSetCalibrator,
};
use crate::activation::ActivationSet;
use crate::error::{Error, Result};
use crate::weibull::{fit_high, WeibullModel};

/// Default distance tail size.
pub const DEFAULT_ETA: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceKind {
    #[default]
    Euclidean,
    /// `1 - cos(a, mav)`.
    Cosine,
    /// `0.5 * (euclidean / class_scale + cosine)`.
    EuclideanCosineBlend,
}

impl fmt::Display for DistanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceKind::Euclidean => "euclidean",
            DistanceKind::Cosine => "cosine",
            DistanceKind::EuclideanCosineBlend => "euclidean_cosine_blend",
        })
    }
}

impl FromStr for DistanceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euclidean" => Ok(DistanceKind::Euclidean),
            "cosine" => Ok(DistanceKind::Cosine),
            "euclidean_cosine_blend" | "eucos" => Ok(DistanceKind::EuclideanCosineBlend),
            other => Err(Error::InvalidArgument(format!(
                "unknown distance kind {other:?}"
            ))),
        }
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Cosine distance; 1 when either vector is zero.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        1.0
    } else {
        1.0 - dot / (na * nb)
    }
}

/// Per-class Weibull models of the largest distances to the class mean
/// activation vector (MAV).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpenMaxCalibrator {
    pub mavs: Vec<Vec<f64>>,
    pub class_models: Vec<WeibullModel>,
    /// Number of top ranks revised, `1..=K`.
    pub alpha: usize,
    pub eta: usize,
    pub distance_kind: DistanceKind,
    /// Mean euclidean distance of each class's training rows to its MAV;
    /// normalizes the euclidean part of the blended distance.
    pub class_scales: Vec<f64>,
    pub filter: FilterReport,
}

impl OpenMaxCalibrator {
    /// Fit on the correctly classified rows of `train`, revising all
    /// `alpha = K` ranks.
    pub fn build(train: &ActivationSet, eta: usize, distance_kind: DistanceKind) -> Result<Self> {
        let k = train.num_classes();
        let (kept, filter) = correctly_classified(train)?;
        let needed = eta.max(2);
        let mut mavs = Vec::with_capacity(k);
        let mut class_models = Vec::with_capacity(k);
        let mut class_scales = Vec::with_capacity(k);
        for class in 0..k {
            let rows: Vec<Vec<f64>> = kept
                .iter()
                .flat_map(|set| set.class_rows(class))
                .map(|r| r.iter().map(|&v| f64::from(v)).collect())
                .collect();
            if rows.len() < needed {
                return Err(Error::InsufficientData {
                    class: Some(class),
                    needed,
                    available: rows.len(),
                });
            }
            let mav = mean_vector(&rows);
            let eu: Vec<f64> = rows.iter().map(|r| euclidean(r, &mav)).collect();
            let scale = eu.iter().sum::<f64>() / eu.len() as f64;
            let scale = if scale > 0.0 { scale } else { 1.0 };
            let distances: Vec<f64> = match distance_kind {
                DistanceKind::Euclidean => eu,
                DistanceKind::Cosine => rows.iter().map(|r| cosine(r, &mav)).collect(),
                DistanceKind::EuclideanCosineBlend => rows
                    .iter()
                    .zip(&eu)
                    .map(|(r, d)| 0.5 * (d / scale + cosine(r, &mav)))
                    .collect(),
            };
            class_models.push(fit_high(&distances, eta).map_err(|e| e.for_class(class))?);
            mavs.push(mav);
            class_scales.push(scale);
        }
        Ok(Self {
            mavs,
            class_models,
            alpha: k,
            eta,
            distance_kind,
            class_scales,
            filter,
        })
    }

    pub fn with_alpha(mut self, alpha: usize) -> Result<Self> {
        if alpha == 0 || alpha > self.mavs.len() {
            return Err(Error::InvalidArgument(format!(
                "alpha must lie in [1, {}], got {alpha}",
                self.mavs.len()
            )));
        }
        self.alpha = alpha;
        Ok(self)
    }

    /// Distance from `a` to the MAV of `class` under the configured kind.
    pub fn distance(&self, a: &[f64], class: usize) -> f64 {
        let mav = &self.mavs[class];
        match self.distance_kind {
            DistanceKind::Euclidean => euclidean(a, mav),
            DistanceKind::Cosine => cosine(a, mav),
            DistanceKind::EuclideanCosineBlend => {
                0.5 * (euclidean(a, mav) / self.class_scales[class] + cosine(a, mav))
            }
        }
    }

    /// Revision weights: `1 - ((alpha - i + 1) / alpha) * cdf(distance)` at
    /// the top `alpha` ranks, 1 elsewhere.
    pub fn weights(&self, a: &[f64]) -> Result<Vec<f64>> {
        check_query(a, self.mavs.len())?;
        let alpha = self.alpha as f64;
        let mut w = vec![1.0; a.len()];
        for (rank, &class) in descending_ranks(a).iter().take(self.alpha).enumerate() {
            let cdf = self.class_models[class].cdf(self.distance(a, class));
            w[class] = 1.0 - ((alpha - rank as f64) / alpha) * cdf;
        }
        Ok(w)
    }
}

fn mean_vector(rows: &[Vec<f64>]) -> Vec<f64> {
    let mut mean = vec![0.0; rows[0].len()];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    let n = rows.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    mean
}

impl OpenSetCalibrator for OpenMaxCalibrator {
    fn num_classes(&self) -> usize {
        self.mavs.len()
    }

    fn predict(&self, a: &[f64]) -> Result<CalibratedOutput> {
        let w = self.weights(a)?;
        let revised: Vec<f64> = a.iter().zip(&w).map(|(x, w)| x * w).collect();
        let unknown = a.iter().zip(&w).map(|(x, w)| x * (1.0 - w)).sum();
        Ok(CalibratedOutput::from_logits(revised, unknown))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibrators::softmax;

    fn set(rows: &[Vec<f64>], labels: Vec<i32>) -> ActivationSet {
        ActivationSet::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn symmetric_pair_is_degenerate() {
        let train = set(
            &[
                vec![1.0, 0.0],
                vec![3.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 2.0],
                vec![1.0, 5.0],
            ],
            vec![0, 0, 1, 1, 1],
        );
        match OpenMaxCalibrator::build(&train, 2, DistanceKind::Euclidean) {
            Err(Error::DegenerateData { class: Some(0) }) => {}
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn mav_and_distances() {
        let rows = vec![vec![0.0, 0.0], vec![0.0, 4.0], vec![3.0, 0.0]];
        let mav = mean_vector(&rows);
        assert!((mav[0] - 1.0).abs() < 1e-15 && (mav[1] - 4.0 / 3.0).abs() < 1e-15);
        let d: Vec<f64> = rows.iter().map(|r| euclidean(r, &mav)).collect();
        let expected = [5.0 / 3.0, 73f64.sqrt() / 3.0, 52f64.sqrt() / 3.0];
        for (x, e) in d.iter().zip(expected) {
            assert!((x - e).abs() < 1e-12);
        }
    }

    #[test]
    fn single_row_class_is_insufficient() {
        let train = set(
            &[
                vec![2.0, 0.0],
                vec![0.0, 1.0],
                vec![0.0, 2.0],
                vec![1.0, 5.0],
            ],
            vec![0, 1, 1, 1],
        );
        assert!(matches!(
            OpenMaxCalibrator::build(&train, 2, DistanceKind::Euclidean),
            Err(Error::InsufficientData {
                class: Some(0),
                needed: 2,
                available: 1
            })
        ));
    }

    fn fitted() -> OpenMaxCalibrator {
        let train = set(
            &[
                vec![4.0, 0.5],
                vec![5.0, 1.0],
                vec![6.0, 0.0],
                vec![5.5, 0.2],
                vec![0.0, 4.0],
                vec![1.0, 5.0],
                vec![0.3, 6.5],
                vec![0.1, 5.2],
            ],
            vec![0, 0, 0, 0, 1, 1, 1, 1],
        );
        OpenMaxCalibrator::build(&train, 3, DistanceKind::Euclidean).unwrap()
    }

    #[test]
    fn query_inside_every_tail_support_is_plain_softmax() {
        let cal = fitted();
        // The fitted tails start at rho = 0, so distance 0 gives cdf 0.
        let a = cal.mavs[0].clone();
        assert_eq!(cal.class_models[0].cdf(0.0), 0.0);
        let w = cal.weights(&a).unwrap();
        assert_eq!(w[0], 1.0);
        let out = cal.predict(&a).unwrap();
        assert_eq!(out.predicted, 0);
        assert!(!out.rejected);
    }

    #[test]
    fn zero_cdf_limit_matches_softmax_with_zero_logit() {
        let mut cal = fitted();
        for m in &mut cal.class_models {
            m.rho = 1e6;
        }
        let a = [2.0, -1.0];
        let out = cal.predict(&a).unwrap();
        assert_eq!(out.unknown_activation, 0.0);
        let expected = softmax(&[2.0, -1.0, 0.0]);
        for (p, e) in out.probabilities.iter().zip(expected) {
            assert!((p - e).abs() < 1e-15);
        }
    }

    #[test]
    fn far_query_moves_mass_to_unknown() {
        let cal = fitted();
        let out = cal.predict(&[40.0, 39.0]).unwrap();
        assert!(out.unknown_activation > 0.0);
        assert!(out.rejected);
        assert_eq!(out.predicted, 2);
    }

    #[test]
    fn alpha_limits_revised_ranks() {
        let cal = fitted().with_alpha(1).unwrap();
        let w = cal.weights(&[40.0, 39.0]).unwrap();
        assert!(w[0] < 1.0);
        assert_eq!(w[1], 1.0);
        assert!(fitted().with_alpha(0).is_err());
        assert!(fitted().with_alpha(3).is_err());
    }

    #[test]
    fn distance_kinds() {
        let mut cal = fitted();
        cal.mavs[0] = vec![1.0, 0.0];
        cal.class_scales[0] = 2.0;
        cal.distance_kind = DistanceKind::Cosine;
        assert!((cal.distance(&[0.0, 3.0], 0) - 1.0).abs() < 1e-15);
        assert!(cal.distance(&[2.0, 0.0], 0).abs() < 1e-15);
        assert_eq!(cal.distance(&[0.0, 0.0], 0), 1.0);
        cal.distance_kind = DistanceKind::EuclideanCosineBlend;
        let expected = 0.5 * (10f64.sqrt() / 2.0 + 1.0);
        assert!((cal.distance(&[0.0, 3.0], 0) - expected).abs() < 1e-15);
        assert_eq!(
            "eucos".parse::<DistanceKind>().unwrap(),
            DistanceKind::EuclideanCosineBlend
        );
        assert!("manhattan".parse::<DistanceKind>().is_err());
    }
}
