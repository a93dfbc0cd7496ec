//! Open-set recognition for closed-set classifiers.
//!
//! Raw activation vectors of a K-way classifier are recalibrated into K + 1
//! probabilities (the extra slot is "unknown") by one of three heads:
//!
//! * [`MetaMaxCalibrator`]: per-class Weibull models fitted on the upper
//!   tail of pooled *non-match* activations.
//! * [`OpenMaxCalibrator`]: per-class Weibull models fitted on the largest
//!   distances to class mean activation vectors.
//! * [`SoftMaxCalibrator`]: thresholded maximum softmax probability.
//!
//! The [`eval`] module scores calibrated outputs (unknown-detection AUROC,
//! macro-F1, one-vs-rest ROC curves), [`data`] handles the OSAV activation
//! file format, open-set splits and a synthetic activation generator, and
//! [`experiment`] drives the `metamax` command-line tool.

pub mod activation;
pub mod calibrators;
pub mod data;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod rng;
pub mod weibull;

pub use activation::ActivationSet;
pub use calibrators::{
    CalibratedOutput, Calibrator, DistanceKind, FilterReport, MetaMaxCalibrator, OpenMaxCalibrator,
    OpenSetCalibrator, SoftMaxCalibrator,
};
pub use error::{Error, Result};
pub use weibull::WeibullModel;
