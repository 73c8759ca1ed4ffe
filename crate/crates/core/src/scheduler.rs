//! Dynamic per-attribute loss weights and adaptive decision thresholds.
//!
//! Both are driven by statistics gathered on the whole validation set every
//! P training iterations:
//!
//! - weight update: `lambda_j = |(L_j(t) - L_j(t-1)) / L_j(t-1)|`, the
//!   absolute relative change of the per-attribute validation loss between
//!   consecutive updates. A plateau therefore gets weight zero and a rising
//!   loss is weighted the same as a falling one.
//! - threshold update: `tau_j += gamma * l * (FP_j - FN_j) / V` where `l` is
//!   the current (1-based) epoch and V the validation-set size. An excess of
//!   false positives pushes the threshold up, an excess of false negatives
//!   pulls it down; equal counts are a fixed point.
//!
//! The first evaluation is a baseline: it stores the reference losses and
//! leaves weights at 1 and thresholds at 0.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SchedulerState {
    lambda: Vec<f64>,
    tau: Vec<f64>,
    prev_val_losses: Option<Vec<f64>>,
    /// Number of weight updates performed so far (the baseline is t = 0).
    t: u64,
    /// Current 1-based epoch, supplied by the training loop.
    epoch: u64,
    gamma: f64,
    /// Optional cap on each weight; disabled by default.
    lambda_cap: Option<f64>,
}

impl SchedulerState {
    /// Fresh state: all weights 1, all thresholds 0, no baseline yet.
    pub fn new(attributes: usize, gamma: f64, lambda_cap: Option<f64>) -> Result<Self> {
        if attributes == 0 {
            return Err(Error::InvalidConfig("scheduler needs at least one attribute".into()));
        }
        if gamma < 0.0 || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "threshold step constant must be finite and non-negative, got {gamma}"
            )));
        }
        Ok(SchedulerState {
            lambda: vec![1.0; attributes],
            tau: vec![0.0; attributes],
            prev_val_losses: None,
            t: 0,
            epoch: 1,
            gamma,
            lambda_cap,
        })
    }

    pub fn restore(
        lambda: Vec<f64>,
        tau: Vec<f64>,
        t: u64,
        epoch: u64,
        gamma: f64,
        lambda_cap: Option<f64>,
    ) -> Result<Self> {
        if lambda.len() != tau.len() || lambda.is_empty() {
            return Err(Error::InvalidConfig(
                "weight and threshold vectors must have equal nonzero length".into(),
            ));
        }
        Ok(SchedulerState {
            lambda,
            tau,
            prev_val_losses: None,
            t,
            epoch: epoch.max(1),
            gamma,
            lambda_cap,
        })
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn update_count(&self) -> u64 {
        self.t
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn set_epoch(&mut self, epoch: u64) {
        self.epoch = epoch.max(1);
    }

    pub fn has_baseline(&self) -> bool {
        self.prev_val_losses.is_some()
    }

    /// Records the reference validation losses without touching weights or
    /// thresholds. Used once, before the first real update.
    pub fn record_baseline(&mut self, val_losses: &[f64]) -> Result<()> {
        self.check_losses(val_losses)?;
        self.prev_val_losses = Some(val_losses.to_vec());
        Ok(())
    }

    /// Weight update from fresh whole-validation-set losses. Stores the new
    /// losses as the next reference and advances the update counter.
    ///
    /// A zero reference loss means the attribute is already solved; its
    /// weight is set to 0 rather than dividing by zero.
    pub fn update_weights(&mut self, val_losses: &[f64]) -> Result<&[f64]> {
        self.check_losses(val_losses)?;
        let prev = self.prev_val_losses.as_ref().ok_or_else(|| {
            Error::InvalidValue("weight update requires a recorded baseline loss".into())
        })?;
        for ((lambda, new), old) in self.lambda.iter_mut().zip(val_losses).zip(prev) {
            *lambda = if *old == 0.0 {
                0.0
            } else {
                ((new - old) / old).abs()
            };
            if let Some(cap) = self.lambda_cap {
                *lambda = lambda.min(cap);
            }
        }
        self.prev_val_losses = Some(val_losses.to_vec());
        self.t += 1;
        Ok(&self.lambda)
    }

    /// Threshold update from validation false-positive/false-negative counts
    /// taken at the current thresholds.
    pub fn update_thresholds(&mut self, fp: &[u64], fn_: &[u64], val_size: usize) -> Result<&[f64]> {
        if fp.len() != self.tau.len() || fn_.len() != self.tau.len() {
            return Err(Error::ShapeMismatch {
                context: "threshold update counts".to_string(),
                expected: vec![self.tau.len()],
                actual: vec![fp.len(), fn_.len()],
            });
        }
        if val_size == 0 {
            return Err(Error::InvalidValue("validation set size must be positive".into()));
        }
        let v = val_size as u64;
        if let Some(bad) = fp.iter().chain(fn_).find(|c| **c > v) {
            return Err(Error::InvalidValue(format!(
                "count {bad} exceeds validation size {val_size}"
            )));
        }
        let scale = self.gamma * self.epoch as f64 / val_size as f64;
        for ((tau, &p), &n) in self.tau.iter_mut().zip(fp).zip(fn_) {
            *tau += scale * (p as f64 - n as f64);
        }
        Ok(&self.tau)
    }

    fn check_losses(&self, val_losses: &[f64]) -> Result<()> {
        if val_losses.len() != self.lambda.len() {
            return Err(Error::ShapeMismatch {
                context: "scheduler validation losses".to_string(),
                expected: vec![self.lambda.len()],
                actual: vec![val_losses.len()],
            });
        }
        if let Some(l) = val_losses.iter().find(|l| **l < 0.0 || !l.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "validation losses must be finite and non-negative, got {l}"
            )));
        }
        Ok(())
    }
}

/// Decision rule: +1 iff the raw output exceeds the attribute's threshold,
/// -1 otherwise (an output exactly at the threshold maps to -1).
pub fn predict_labels(outputs: &[Vec<f64>], tau: &[f64]) -> Vec<Vec<f64>> {
    outputs
        .iter()
        .map(|row| {
            row.iter()
                .zip(tau)
                .map(|(o, t)| if o > t { 1.0 } else { -1.0 })
                .collect()
        })
        .collect()
}

/// Per-attribute false-positive and false-negative counts.
pub fn count_fp_fn(predictions: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<(Vec<u64>, Vec<u64>)> {
    if predictions.len() != labels.len() || predictions.is_empty() {
        return Err(Error::ShapeMismatch {
            context: "count_fp_fn".to_string(),
            expected: vec![predictions.len()],
            actual: vec![labels.len()],
        });
    }
    let j = predictions[0].len();
    let mut fp = vec![0u64; j];
    let mut fn_ = vec![0u64; j];
    for (pred, truth) in predictions.iter().zip(labels) {
        if pred.len() != j || truth.len() != j {
            return Err(Error::ShapeMismatch {
                context: "count_fp_fn row".to_string(),
                expected: vec![j],
                actual: vec![pred.len(), truth.len()],
            });
        }
        for jj in 0..j {
            if pred[jj] > 0.0 && truth[jj] < 0.0 {
                fp[jj] += 1;
            } else if pred[jj] < 0.0 && truth[jj] > 0.0 {
                fn_[jj] += 1;
            }
        }
    }
    Ok((fp, fn_))
}
