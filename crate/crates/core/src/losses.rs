//! Training-loss math kept as pure functions so it stays verifiable without
//! any learning infrastructure: triplet loss over squared distances,
//! multi-label BCE with its analytic logit gradient, smooth dice, the
//! weighted composite, and a central-difference oracle to check gradients.

use crate::embedding::{squared_l2_distance, Embedding};
use crate::error::{Error, Result};

/// Probabilities are clamped into this open interval before logs so the
/// loss stays bounded under saturated inputs.
const PROB_CLAMP: f64 = 1e-12;

/// Smoothing constant in the dice denominator.
const DICE_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct TripletConfig {
    pub margin: f64,
}

impl TripletConfig {
    pub fn new(margin: f64) -> Result<Self> {
        if !(margin.is_finite() && margin > 0.0) {
            return Err(Error::InvalidArgument(
                "triplet margin must be a positive real".into(),
            ));
        }
        Ok(TripletConfig { margin })
    }
}

impl Default for TripletConfig {
    fn default() -> Self {
        TripletConfig { margin: 0.2 }
    }
}

/// Single-logit linear model `p = sigmoid(w . x + bias)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogitModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LogitModel {
    pub fn new(weights: Vec<f64>, bias: f64) -> Result<Self> {
        if weights.iter().chain(std::iter::once(&bias)).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logit model parameters"));
        }
        Ok(LogitModel { weights, bias })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogitGradient {
    pub weights: Vec<f64>,
    pub bias: f64,
}

/// Non-negative weights for the segmentation terms of the composite loss.
#[derive(Debug, Clone, Copy)]
pub struct CompositeWeights {
    pub alpha: f64,
    pub beta: f64,
}

impl CompositeWeights {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && beta.is_finite() && alpha >= 0.0 && beta >= 0.0) {
            return Err(Error::InvalidArgument(
                "composite weights must be non-negative reals".into(),
            ));
        }
        Ok(CompositeWeights { alpha, beta })
    }
}

/// Term values entering the composite loss. The box term is accepted as an
/// opaque value; nothing here computes it.
#[derive(Debug, Clone, Copy)]
pub struct LossTerms {
    pub class: f64,
    pub bbox: f64,
    pub seg_bce: f64,
    pub seg_dice: f64,
}

/// `max(0, d2(a,p) - d2(a,n) + margin)`: zero exactly when the anchor sits
/// closer to the positive than to the negative by at least the margin.
pub fn triplet_loss(
    anchor: &Embedding,
    positive: &Embedding,
    negative: &Embedding,
    cfg: &TripletConfig,
) -> Result<f64> {
    let d_pos = squared_l2_distance(anchor, positive)?;
    let d_neg = squared_l2_distance(anchor, negative)?;
    Ok((d_pos - d_neg + cfg.margin).max(0.0))
}

fn check_binary_labels(labels: &[f64]) -> Result<()> {
    if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
        return Err(Error::InvalidArgument(
            "labels must be exactly 0 or 1".into(),
        ));
    }
    Ok(())
}

/// Mean binary cross-entropy over per-class probabilities.
pub fn bce_multilabel(probs: &[f64], labels: &[f64]) -> Result<f64> {
    if probs.is_empty() {
        return Err(Error::InvalidArgument("bce over empty input".into()));
    }
    if probs.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            left: probs.len(),
            right: labels.len(),
        });
    }
    check_binary_labels(labels)?;
    let mut total = 0.0;
    for (&p, &y) in probs.iter().zip(labels) {
        if !p.is_finite() {
            return Err(Error::NonFinite("probability"));
        }
        let p = p.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        total += y * p.ln() + (1.0 - y) * (1.0 - p).ln();
    }
    Ok(-total / probs.len() as f64)
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Analytic gradient of the single-sample BCE term through the sigmoid:
/// `d/dw = (p - y) * x` and `d/dbias = (p - y)`.
pub fn bce_logit_gradient(model: &LogitModel, input: &[f64], label: f64) -> Result<LogitGradient> {
    if model.weights.len() != input.len() {
        return Err(Error::DimensionMismatch {
            left: model.weights.len(),
            right: input.len(),
        });
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient input"));
    }
    check_binary_labels(&[label])?;
    let z = crate::kernel::dot_f64(&model.weights, input) + model.bias;
    let residual = sigmoid(z) - label;
    Ok(LogitGradient {
        weights: input.iter().map(|x| residual * x).collect(),
        bias: residual,
    })
}

/// Loss value matching the gradient above, exposed for the oracle checks.
/// Uses the softplus form `softplus(z) - y*z`, which is the same function as
/// the BCE through the sigmoid but stays well conditioned for large |z|
/// where `1 - p` would cancel.
pub fn bce_logit_loss(model: &LogitModel, input: &[f64], label: f64) -> Result<f64> {
    if model.weights.len() != input.len() {
        return Err(Error::DimensionMismatch {
            left: model.weights.len(),
            right: input.len(),
        });
    }
    check_binary_labels(&[label])?;
    let z = crate::kernel::dot_f64(&model.weights, input) + model.bias;
    let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
    Ok(softplus - label * z)
}

/// Smooth dice complement `1 - (2 * overlap + eps) / (mass_pred + mass_gt + eps)`.
pub fn dice_loss(pred: &[f64], gt: &[f64]) -> Result<f64> {
    if pred.is_empty() {
        return Err(Error::InvalidArgument("dice over empty input".into()));
    }
    if pred.len() != gt.len() {
        return Err(Error::DimensionMismatch {
            left: pred.len(),
            right: gt.len(),
        });
    }
    check_binary_labels(gt)?;
    if pred.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::InvalidArgument(
            "dice predictions must lie in [0, 1]".into(),
        ));
    }
    let overlap: f64 = pred.iter().zip(gt).map(|(p, g)| p * g).sum();
    let mass: f64 = pred.iter().sum::<f64>() + gt.iter().sum::<f64>();
    Ok(1.0 - (2.0 * overlap + DICE_EPS) / (mass + DICE_EPS))
}

/// Weighted composite `class + bbox + alpha * seg_bce + beta * seg_dice`.
pub fn total_loss(terms: &LossTerms, weights: &CompositeWeights) -> f64 {
    terms.class + terms.bbox + weights.alpha * terms.seg_bce + weights.beta * terms.seg_dice
}

/// Central finite differences `(f(x + h e_i) - f(x - h e_i)) / 2h` per
/// coordinate; the independent oracle used to audit analytic gradients.
pub fn finite_difference_gradient<F>(f: F, at: &[f64], step: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::InvalidArgument(
            "finite-difference step must be positive".into(),
        ));
    }
    let mut grad = Vec::with_capacity(at.len());
    let mut probe = at.to_vec();
    for i in 0..at.len() {
        probe[i] = at[i] + step;
        let hi = f(&probe);
        probe[i] = at[i] - step;
        let lo = f(&probe);
        probe[i] = at[i];
        if !hi.is_finite() || !lo.is_finite() {
            return Err(Error::NonFinite("finite-difference evaluation"));
        }
        grad.push((hi - lo) / (2.0 * step));
    }
    Ok(grad)
}
