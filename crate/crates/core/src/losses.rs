//! Mean-squared-error losses for the two tasks and their weighted joint sum.
//!
//! - landmark regression: mean over samples of the squared L2 distance over
//!   the full coordinate vector (no extra division by its dimension);
//! - attribute classification: per-attribute mean over samples of the
//!   squared difference against +/-1 labels;
//! - joint objective: `sum_j lambda_j * fac_j + beta * fld`.

use crate::error::{Error, Result};

/// Per-attribute losses, the landmark loss, and their weighted combination.
#[derive(Debug, Clone)]
pub struct LossReport {
    pub fac_losses: Vec<f64>,
    pub fld_loss: f64,
    pub joint: f64,
    pub beta: f64,
}

impl LossReport {
    pub fn new(fac_losses: Vec<f64>, lambda: &[f64], fld_loss: f64, beta: f64) -> Result<Self> {
        let joint = joint_loss(&fac_losses, lambda, fld_loss, beta)?;
        Ok(LossReport {
            fac_losses,
            fld_loss,
            joint,
            beta,
        })
    }
}

/// Landmark regression loss: `(1/N) * sum_i ||pred_i - truth_i||^2`.
pub fn fld_loss(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<f64> {
    check_matrix_pair(pred, truth, "fld_loss")?;
    let n = pred.len() as f64;
    let mut total = 0.0;
    for (p, t) in pred.iter().zip(truth) {
        let mut sq = 0.0;
        for (a, b) in p.iter().zip(t) {
            let d = a - b;
            sq += d * d;
        }
        total += sq;
    }
    Ok(total / n)
}

/// Gradient of [`fld_loss`] with respect to `pred`: `(2/N) * (pred - truth)`.
pub fn fld_loss_grad(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    check_matrix_pair(pred, truth, "fld_loss_grad")?;
    let scale = 2.0 / pred.len() as f64;
    Ok(pred
        .iter()
        .zip(truth)
        .map(|(p, t)| p.iter().zip(t).map(|(a, b)| scale * (a - b)).collect())
        .collect())
}

/// Per-attribute classification loss: `L_j = (1/N) * sum_i (pred_ij - y_ij)^2`
/// with labels restricted to +1/-1.
pub fn fac_loss_per_attribute(pred: &[Vec<f64>], labels: &[Vec<f64>]) -> Result<Vec<f64>> {
    check_matrix_pair(pred, labels, "fac_loss_per_attribute")?;
    check_labels(labels)?;
    let n = pred.len() as f64;
    let j = pred[0].len();
    let mut losses = vec![0.0; j];
    for (p, y) in pred.iter().zip(labels) {
        for (jj, loss) in losses.iter_mut().enumerate() {
            let d = p[jj] - y[jj];
            *loss += d * d;
        }
    }
    for loss in &mut losses {
        *loss /= n;
    }
    Ok(losses)
}

/// Gradient of the weighted attribute loss `sum_j lambda_j * L_j` with
/// respect to `pred`: `d/d pred_ij = lambda_j * (2/N) * (pred_ij - y_ij)`.
pub fn fac_loss_grad(
    pred: &[Vec<f64>],
    labels: &[Vec<f64>],
    lambda: &[f64],
) -> Result<Vec<Vec<f64>>> {
    check_matrix_pair(pred, labels, "fac_loss_grad")?;
    check_labels(labels)?;
    if lambda.len() != pred[0].len() {
        return Err(Error::ShapeMismatch {
            context: "fac_loss_grad weights".to_string(),
            expected: vec![pred[0].len()],
            actual: vec![lambda.len()],
        });
    }
    check_weights(lambda)?;
    let scale = 2.0 / pred.len() as f64;
    Ok(pred
        .iter()
        .zip(labels)
        .map(|(p, y)| {
            p.iter()
                .zip(y)
                .zip(lambda)
                .map(|((a, b), l)| l * scale * (a - b))
                .collect()
        })
        .collect())
}

/// Weighted joint objective: `sum_j lambda_j * fac_j + beta * fld`.
pub fn joint_loss(fac_losses: &[f64], lambda: &[f64], fld_loss: f64, beta: f64) -> Result<f64> {
    if fac_losses.len() != lambda.len() {
        return Err(Error::ShapeMismatch {
            context: "joint_loss".to_string(),
            expected: vec![fac_losses.len()],
            actual: vec![lambda.len()],
        });
    }
    check_weights(lambda)?;
    if beta < 0.0 {
        return Err(Error::InvalidValue(format!(
            "landmark loss weight must be non-negative, got {beta}"
        )));
    }
    let fac: f64 = fac_losses.iter().zip(lambda).map(|(l, w)| w * l).sum();
    Ok(fac + beta * fld_loss)
}

fn check_weights(lambda: &[f64]) -> Result<()> {
    if let Some(w) = lambda.iter().find(|w| **w < 0.0 || !w.is_finite()) {
        return Err(Error::InvalidValue(format!(
            "attribute loss weights must be finite and non-negative, got {w}"
        )));
    }
    Ok(())
}

fn check_labels(labels: &[Vec<f64>]) -> Result<()> {
    for row in labels {
        if let Some(v) = row.iter().find(|v| **v != 1.0 && **v != -1.0) {
            return Err(Error::InvalidValue(format!(
                "labels must be +1 or -1, got {v}"
            )));
        }
    }
    Ok(())
}

fn check_matrix_pair(a: &[Vec<f64>], b: &[Vec<f64>], context: &str) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput(context.to_string()));
    }
    if a.len() != b.len() {
        return Err(Error::ShapeMismatch {
            context: context.to_string(),
            expected: vec![a.len()],
            actual: vec![b.len()],
        });
    }
    let cols = a[0].len();
    for row in a.iter().chain(b.iter()) {
        if row.len() != cols {
            return Err(Error::ShapeMismatch {
                context: context.to_string(),
                expected: vec![cols],
                actual: vec![row.len()],
            });
        }
    }
    Ok(())
}
