use serde::{Deserialize, Serialize};

use super::{
    check_query, correctly_classified, descending_ranks, CalibratedOutput, FilterReport,
    OpenSetCalibrator,
};
use crate::activation::{argmax, ActivationSet};
use crate::error::{Error, Result};
use crate::weibull::{fit_high, WeibullModel};

/// Default number of top non-match activations fitted per class.
pub const DEFAULT_Q: usize = 20;

/// Per-class Weibull models of the upper tail of *non-match* activations.
///
/// Model `j` is fitted on every activation of class-`j` training rows except
/// column `j`, i.e. `N_j * (K - 1)` values per class, keeping the `q` largest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetaMaxCalibrator {
    pub class_models: Vec<WeibullModel>,
    pub q: usize,
    /// Number of ranks visited during revision, `0..=K`.
    pub beta: usize,
    pub apply_translation: bool,
    pub filter: FilterReport,
}

/// The non-match scores of class `class`: its rows with column `class`
/// removed, concatenated row by row.
pub fn nonmatch_scores(set: &ActivationSet, class: usize) -> Vec<f64> {
    set.class_rows(class)
        .flat_map(|row| {
            row.iter()
                .enumerate()
                .filter(move |&(c, _)| c != class)
                .map(|(_, &v)| f64::from(v))
        })
        .collect()
}

impl MetaMaxCalibrator {
    /// Fit one model per class on the correctly classified rows of `train`.
    /// Revision depth defaults to `beta = K` with translation applied.
    pub fn build(train: &ActivationSet, q: usize) -> Result<Self> {
        let k = train.num_classes();
        let (kept, filter) = correctly_classified(train)?;
        let mut class_models = Vec::with_capacity(k);
        for class in 0..k {
            let pooled = kept
                .as_ref()
                .map(|set| nonmatch_scores(set, class))
                .unwrap_or_default();
            if pooled.len() < q.max(2) {
                return Err(Error::InsufficientData {
                    class: Some(class),
                    needed: q.max(2),
                    available: pooled.len(),
                });
            }
            class_models.push(fit_high(&pooled, q).map_err(|e| e.for_class(class))?);
        }
        Ok(Self {
            class_models,
            q,
            beta: k,
            apply_translation: true,
            filter,
        })
    }

    pub fn with_beta(mut self, beta: usize) -> Result<Self> {
        if beta > self.class_models.len() {
            return Err(Error::InvalidArgument(format!(
                "beta must lie in [0, {}], got {beta}",
                self.class_models.len()
            )));
        }
        self.beta = beta;
        Ok(self)
    }

    pub fn with_translation(mut self, apply: bool) -> Self {
        self.apply_translation = apply;
        self
    }

    /// Modulation vector `m` for a query: ones except at the non-argmax
    /// classes among the top `beta` ranks, where
    /// `m = 1 - ((beta - i) / beta) * survival(a)` for rank `i` (1-based).
    pub fn modulation(&self, a: &[f64]) -> Result<Vec<f64>> {
        check_query(a, self.class_models.len())?;
        let mut m = vec![1.0; a.len()];
        let winner = argmax(a);
        let beta = self.beta as f64;
        for (rank, &class) in descending_ranks(a).iter().take(self.beta).enumerate() {
            if class == winner {
                continue;
            }
            let model = &self.class_models[class];
            let survival = if self.apply_translation {
                model.survival(a[class])
            } else {
                model.survival_untranslated(a[class])
            };
            let weight = (beta - (rank + 1) as f64) / beta;
            m[class] = 1.0 - weight * survival;
        }
        Ok(m)
    }
}

impl OpenSetCalibrator for MetaMaxCalibrator {
    fn num_classes(&self) -> usize {
        self.class_models.len()
    }

    fn predict(&self, a: &[f64]) -> Result<CalibratedOutput> {
        let m = self.modulation(a)?;
        let revised: Vec<f64> = a.iter().zip(&m).map(|(x, w)| x * w).collect();
        let unknown = a.iter().zip(&revised).map(|(x, r)| x - r).sum();
        Ok(CalibratedOutput::from_logits(revised, unknown))
    }
}
