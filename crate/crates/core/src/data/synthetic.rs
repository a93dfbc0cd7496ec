use serde::{Deserialize, Serialize};

use super::split::OpenSplit;
use crate::activation::{ActivationSet, UNKNOWN_LABEL};
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// Gaussian activation clusters standing in for a trained K-way classifier.
///
/// Known class `j` is centred at `class_separation * e_j`. Each unknown
/// cluster is centred at `unknown_offset * d` for a random unit direction `d`
/// with no component above `1/sqrt(2)`, i.e. at least 45 degrees away from
/// every class axis. Noise is isotropic with standard deviation
/// `noise_sigma`. Activation dimensionality is always `num_known`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_known: usize,
    /// Rows per known class in each of train and test, and per unknown
    /// cluster in test.
    pub samples_per_class: usize,
    pub class_separation: f64,
    pub noise_sigma: f64,
    pub unknown_count: usize,
    pub unknown_offset: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_known: 6,
            samples_per_class: 500,
            class_separation: 10.0,
            noise_sigma: 1.0,
            unknown_count: 4,
            unknown_offset: 15.0,
            seed: 0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.num_known < 2 {
            return bad(format!(
                "num_known must be at least 2, got {}",
                self.num_known
            ));
        }
        if self.samples_per_class == 0 {
            return bad("samples_per_class must be positive".into());
        }
        if self.unknown_count == 0 {
            return bad("unknown_count must be positive".into());
        }
        if !(self.class_separation > 0.0 && self.class_separation.is_finite()) {
            return bad(format!(
                "class_separation must be positive, got {}",
                self.class_separation
            ));
        }
        if !(self.noise_sigma > 0.0 && self.noise_sigma.is_finite()) {
            return bad(format!(
                "noise_sigma must be positive, got {}",
                self.noise_sigma
            ));
        }
        if !self.unknown_offset.is_finite() {
            return bad("unknown_offset must be finite".into());
        }
        Ok(())
    }
}

/// Labels: known rows carry their class, unknown rows `K + cluster`.
fn generate_raw(spec: &SyntheticSpec) -> Result<(ActivationSet, Vec<f32>, Vec<usize>)> {
    spec.validate()?;
    let k = spec.num_known;
    let n = spec.samples_per_class;
    let mut rng = SplitMix64::new(spec.seed);

    let draw_rows = |center: &[f64], values: &mut Vec<f32>, rng: &mut SplitMix64| {
        for _ in 0..n {
            for &c in center {
                values.push((c + spec.noise_sigma * rng.normal()) as f32);
            }
        }
    };

    let class_center = |j: usize| {
        let mut c = vec![0.0; k];
        c[j] = spec.class_separation;
        c
    };

    let mut train = Vec::with_capacity(k * n * k);
    let mut train_labels = Vec::with_capacity(k * n);
    for j in 0..k {
        draw_rows(&class_center(j), &mut train, &mut rng);
        train_labels.extend(std::iter::repeat_n(j as i32, n));
    }

    let mut test = Vec::with_capacity((k + spec.unknown_count) * n * k);
    let mut groups = Vec::with_capacity((k + spec.unknown_count) * n);
    for j in 0..k {
        draw_rows(&class_center(j), &mut test, &mut rng);
        groups.extend(std::iter::repeat_n(j, n));
    }
    let cap = std::f64::consts::FRAC_1_SQRT_2;
    for u in 0..spec.unknown_count {
        let direction = loop {
            let d: Vec<f64> = (0..k).map(|_| rng.normal()).collect();
            let norm = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                continue;
            }
            let d: Vec<f64> = d.iter().map(|x| x / norm).collect();
            if d.iter().all(|&x| x <= cap) {
                break d;
            }
        };
        let center: Vec<f64> = direction.iter().map(|x| spec.unknown_offset * x).collect();
        draw_rows(&center, &mut test, &mut rng);
        groups.extend(std::iter::repeat_n(k + u, n));
    }

    let train = ActivationSet::new(train, train_labels, k)?;
    Ok((train, test, groups))
}

/// Train (known classes only, labels `0..K`) and test (known classes plus
/// unknown clusters labelled `-1`) sets. Deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<(ActivationSet, ActivationSet)> {
    let (train, test, groups) = generate_raw(spec)?;
    let k = spec.num_known;
    let labels = groups
        .iter()
        .map(|&g| if g < k { g as i32 } else { UNKNOWN_LABEL })
        .collect();
    Ok((train, ActivationSet::new(test, labels, k)?))
}

/// Like [`generate_synthetic`] but labelled with original class ids: known
/// class `j` becomes `split.known_classes[j]` and unknown cluster `u`
/// becomes `split.unknown_classes[u mod |unknown|]`.
pub fn generate_synthetic_split(
    spec: &SyntheticSpec,
    split: &OpenSplit,
) -> Result<(ActivationSet, ActivationSet)> {
    if split.num_known() != spec.num_known || split.unknown_classes.is_empty() {
        return Err(Error::InvalidSplit(format!(
            "split has {} known / {} unknown classes, spec needs {} known",
            split.num_known(),
            split.unknown_classes.len(),
            spec.num_known
        )));
    }
    let (train, test, groups) = generate_raw(spec)?;
    let k = spec.num_known;
    let original = |g: usize| {
        if g < k {
            split.known_classes[g]
        } else {
            split.unknown_classes[(g - k) % split.unknown_classes.len()]
        }
    };
    let train_labels = train
        .labels()
        .iter()
        .map(|&l| original(l as usize))
        .collect();
    let test_labels = groups.iter().map(|&g| original(g)).collect();
    Ok((
        train.with_labels(train_labels)?,
        ActivationSet::new(test, test_labels, k)?,
    ))
}
