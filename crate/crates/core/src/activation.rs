use crate::error::{Error, Result};

/// Label marking a row from a class not seen during training.
pub const UNKNOWN_LABEL: i32 = -1;

/// An N x K matrix of classifier activations with one integer label per row.
///
/// Activations are stored as `f32`, row-major, exactly as they appear in an
/// OSAV file. Labels are `-1` for unknown rows; otherwise they are class ids,
/// which are `< K` once a split has been applied but may be original dataset
/// ids before that.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationSet {
    activations: Vec<f32>,
    labels: Vec<i32>,
    num_classes: usize,
}

impl ActivationSet {
    pub fn new(activations: Vec<f32>, labels: Vec<i32>, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::InvalidArgument(format!(
                "activation sets need at least 2 columns, got {num_classes}"
            )));
        }
        if labels.is_empty() {
            return Err(Error::InvalidArgument("activation set has no rows".into()));
        }
        if activations.len() != labels.len() * num_classes {
            return Err(Error::DimensionMismatch {
                expected: labels.len() * num_classes,
                actual: activations.len(),
            });
        }
        if let Some(i) = activations.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue {
                row: i / num_classes,
                col: i % num_classes,
            });
        }
        if let Some(row) = labels.iter().position(|&l| l < UNKNOWN_LABEL) {
            return Err(Error::LabelOutOfRange {
                row,
                label: labels[row],
            });
        }
        Ok(Self {
            activations,
            labels,
            num_classes,
        })
    }

    /// Build from f64 rows (rounded to f32).
    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<i32>) -> Result<Self> {
        let k = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != k) {
            return Err(Error::DimensionMismatch {
                expected: k,
                actual: bad.len(),
            });
        }
        let flat = rows.iter().flatten().map(|&v| v as f32).collect();
        Self::new(flat, labels, k)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn labels(&self) -> &[i32] {
        &self.labels
    }

    pub fn raw(&self) -> &[f32] {
        &self.activations
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.activations[i * self.num_classes..(i + 1) * self.num_classes]
    }

    pub fn row_f64(&self, i: usize) -> Vec<f64> {
        self.row(i).iter().map(|&v| f64::from(v)).collect()
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.activations.chunks_exact(self.num_classes)
    }

    /// Rows labelled `class`.
    pub fn class_rows(&self, class: usize) -> impl Iterator<Item = &[f32]> {
        self.rows()
            .zip(&self.labels)
            .filter(move |(_, &l)| l >= 0 && l as usize == class)
            .map(|(r, _)| r)
    }

    /// Same activations, new labels.
    pub fn with_labels(&self, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: labels.len(),
            });
        }
        Self::new(self.activations.clone(), labels, self.num_classes)
    }

    /// Fails unless every label is `-1` or a valid column index.
    pub fn check_labels_in_range(&self) -> Result<()> {
        match self
            .labels
            .iter()
            .position(|&l| l >= 0 && l as usize >= self.num_classes)
        {
            Some(row) => Err(Error::LabelOutOfRange {
                row,
                label: self.labels[row],
            }),
            None => Ok(()),
        }
    }

    /// Keep the rows for which `keep(row, label)` holds.
    pub fn filter(&self, mut keep: impl FnMut(&[f32], i32) -> bool) -> Option<Self> {
        let mut activations = Vec::new();
        let mut labels = Vec::new();
        for (row, &label) in self.rows().zip(&self.labels) {
            if keep(row, label) {
                activations.extend_from_slice(row);
                labels.push(label);
            }
        }
        (!labels.is_empty()).then_some(Self {
            activations,
            labels,
            num_classes: self.num_classes,
        })
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax<T: PartialOrd + Copy>(values: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}
