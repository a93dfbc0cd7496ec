use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::activation::{ActivationSet, UNKNOWN_LABEL};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Which original classes are known and how they map to `0..K`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpenSplit {
    /// Ascending original ids; position is the new label.
    pub known_classes: Vec<i32>,
    pub unknown_classes: Vec<i32>,
    pub seed: u64,
}

impl OpenSplit {
    pub fn num_known(&self) -> usize {
        self.known_classes.len()
    }

    pub fn relabel_map(&self) -> BTreeMap<i32, usize> {
        self.known_classes
            .iter()
            .enumerate()
            .map(|(new, &orig)| (orig, new))
            .collect()
    }

    /// New label for an original label: `0..K` for known classes, `-1` for
    /// unknown classes (and for rows already marked unknown).
    pub fn relabel(&self, original: i32) -> Result<i32> {
        if original == UNKNOWN_LABEL {
            return Ok(UNKNOWN_LABEL);
        }
        if let Ok(pos) = self.known_classes.binary_search(&original) {
            return Ok(pos as i32);
        }
        if self.unknown_classes.contains(&original) {
            return Ok(UNKNOWN_LABEL);
        }
        Err(Error::UnknownLabel(original))
    }
}

/// Choose `num_known` of `num_total` classes uniformly without replacement.
///
/// Draw order: a partial Fisher–Yates shuffle of `0..num_total`; for
/// `i = 0..num_known`, swap position `i` with `i + below(num_total - i)`.
/// The first `num_known` entries, sorted, are the known classes.
pub fn make_open_split(num_total: usize, num_known: usize, seed: u64) -> Result<OpenSplit> {
    if num_known < 2 || num_known >= num_total {
        return Err(Error::InvalidSplit(format!(
            "need 2 <= known < total, got known = {num_known}, total = {num_total}"
        )));
    }
    let mut ids: Vec<i32> = (0..num_total as i32).collect();
    let mut rng = SplitMix64::new(seed);
    for i in 0..num_known {
        let j = i + rng.below((num_total - i) as u64) as usize;
        ids.swap(i, j);
    }
    let mut known_classes = ids[..num_known].to_vec();
    let mut unknown_classes = ids[num_known..].to_vec();
    known_classes.sort_unstable();
    unknown_classes.sort_unstable();
    Ok(OpenSplit {
        known_classes,
        unknown_classes,
        seed,
    })
}

/// Relabel rows by `split`; the activation matrix is left untouched.
pub fn apply_split(set: &ActivationSet, split: &OpenSplit) -> Result<ActivationSet> {
    let labels = set
        .labels()
        .iter()
        .map(|&l| split.relabel(l))
        .collect::<Result<Vec<_>>>()?;
    set.with_labels(labels)
}
