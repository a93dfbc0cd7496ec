//! Translated two-parameter Weibull distribution and upper-tail fitting.
//!
//! A [`WeibullModel`] describes `x - rho ~ Weibull(kappa, lambda)`:
//!
//! ```text
//! cdf(x) = 1 - exp(-((x - rho) / lambda)^kappa)    for x > rho, else 0
//! ```
//!
//! [`fit_high`] keeps the `q` largest samples, translates them so they are
//! strictly positive, and returns the maximum-likelihood shape and scale of
//! the translated tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const SHAPE_LO: f64 = 1e-3;
const SHAPE_HI: f64 = 1e3;
const MAX_ITERATIONS: usize = 200;
const SCORE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullModel {
    /// Translation (location) in score units.
    pub rho: f64,
    /// Shape.
    pub kappa: f64,
    /// Scale.
    pub lambda: f64,
    /// Number of tail samples the model was fitted on.
    pub tail_size: usize,
}

impl WeibullModel {
    /// Validating constructor.
    pub fn new(rho: f64, kappa: f64, lambda: f64, tail_size: usize) -> Result<Self> {
        let model = Self {
            rho,
            kappa,
            lambda,
            tail_size,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.rho.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "rho must be finite, got {}",
                self.rho
            )));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be positive, got {}",
                self.kappa
            )));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.tail_size < 2 {
            return Err(Error::InvalidArgument(format!(
                "tail_size must be at least 2, got {}",
                self.tail_size
            )));
        }
        Ok(())
    }

    /// `((x - rho) / lambda)^kappa` on the support, `None` off it.
    fn hazard_integral(&self, x: f64) -> Option<f64> {
        let shifted = x - self.rho;
        (shifted > 0.0).then(|| (shifted / self.lambda).powf(self.kappa))
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self.hazard_integral(x) {
            Some(h) => -(-h).exp_m1(),
            None => 0.0,
        }
    }

    pub fn survival(&self, x: f64) -> f64 {
        match self.hazard_integral(x) {
            Some(h) => (-h).exp(),
            None => 1.0,
        }
    }

    /// Survival with the translation ignored: `exp(-(x / lambda)^kappa)` for
    /// `x > 0`, 1 otherwise.
    pub fn survival_untranslated(&self, x: f64) -> f64 {
        if x > 0.0 {
            (-(x / self.lambda).powf(self.kappa)).exp()
        } else {
            1.0
        }
    }

    /// Log-density at `x`; `-inf` off the support.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        let shifted = x - self.rho;
        if shifted <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let z = shifted / self.lambda;
        self.kappa.ln() - self.lambda.ln() + (self.kappa - 1.0) * z.ln() - z.powf(self.kappa)
    }

    pub fn log_likelihood(&self, samples: &[f64]) -> f64 {
        samples.iter().map(|&x| self.ln_pdf(x)).sum()
    }
}

/// The `q` largest values of `samples` in descending order. Ties at the
/// cut-off keep their input order.
pub fn select_tail(samples: &[f64], q: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..samples.len()).collect();
    order.sort_by(|&a, &b| samples[b].total_cmp(&samples[a]));
    order.truncate(q);
    order.into_iter().map(|i| samples[i]).collect()
}

/// Translation that makes every value of `tail` strictly positive: zero when
/// the tail already is, otherwise `min - eps` with
/// `eps = max(1e-6, 1e-6 * |min|)`.
pub fn translation_for(tail: &[f64]) -> f64 {
    let min = tail.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        0.0
    } else {
        min - f64::max(1e-6, 1e-6 * min.abs())
    }
}

/// Fit a Weibull model to the `q` largest values of `samples`.
pub fn fit_high(samples: &[f64], q: usize) -> Result<WeibullModel> {
    if q < 2 || samples.len() < q {
        return Err(Error::InsufficientData {
            class: None,
            needed: q.max(2),
            available: samples.len(),
        });
    }
    if let Some(bad) = samples.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "non-finite sample at index {bad}"
        )));
    }

    let tail = select_tail(samples, q);
    if tail[0] == tail[q - 1] {
        return Err(Error::DegenerateData { class: None });
    }
    let rho = translation_for(&tail);
    let shifted: Vec<f64> = tail.iter().map(|x| x - rho).collect();
    let (kappa, lambda) = fit_two_parameter(&shifted)?;
    Ok(WeibullModel {
        rho,
        kappa,
        lambda,
        tail_size: q,
    })
}

/// Two-parameter MLE for strictly positive, non-constant data.
///
/// The profile score in the shape,
/// `g(k) = sum(x^k ln x) / sum(x^k) - 1/k - mean(ln x)`,
/// is strictly increasing, so its root is bracketed on `[1e-3, 1e3]` and
/// found by bisection; the scale then follows in closed form. Values are
/// divided by their maximum first so `x^k` stays in (0, 1].
fn fit_two_parameter(xs: &[f64]) -> Result<(f64, f64)> {
    let scale = xs.iter().copied().fold(0.0, f64::max);
    let logs: Vec<f64> = xs.iter().map(|x| (x / scale).ln()).collect();
    let mean_log = logs.iter().sum::<f64>() / logs.len() as f64;

    let score = |k: f64| {
        let (mut num, mut den) = (0.0, 0.0);
        for &l in &logs {
            let w = (k * l).exp();
            num += w * l;
            den += w;
        }
        num / den - 1.0 / k - mean_log
    };

    let (mut lo, mut hi) = (SHAPE_LO, SHAPE_HI);
    if score(lo) > 0.0 {
        return Err(Error::NoConvergence {
            class: None,
            reason: "shape root lies below 1e-3",
        });
    }
    if score(hi) < 0.0 {
        return Err(Error::NoConvergence {
            class: None,
            reason: "shape root lies above 1e3",
        });
    }

    let mut kappa = None;
    for _ in 0..MAX_ITERATIONS {
        let mid = 0.5 * (lo + hi);
        let g = score(mid);
        if g.abs() < SCORE_TOLERANCE || hi - lo <= f64::EPSILON * mid {
            kappa = Some(mid);
            break;
        }
        if g < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let kappa = kappa.ok_or(Error::NoConvergence {
        class: None,
        reason: "iteration budget exhausted",
    })?;

    let mean_pow = logs.iter().map(|l| (kappa * l).exp()).sum::<f64>() / logs.len() as f64;
    let lambda = scale * mean_pow.powf(1.0 / kappa);
    Ok((kappa, lambda))
}
