//! Binary cross-entropy with an L2 weight penalty.

use super::tensor::Param;

/// Probabilities are clamped to `[PROB_EPS, 1 − PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-12;

pub const DEFAULT_L2: f64 = 1e-4;

fn clamp(p: f64) -> f64 {
    p.clamp(PROB_EPS, 1.0 - PROB_EPS)
}

/// Mean binary cross-entropy over the `k` outputs.
pub fn bce(p: &[f64], y: &[f64]) -> f64 {
    assert_eq!(p.len(), y.len(), "prediction/target length mismatch");
    let k = p.len() as f64;
    p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            let p = clamp(p);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum::<f64>()
        / k
}

/// `(λ/2) Σ ‖W‖²` over parameters flagged for decay.
pub fn l2_penalty<'a>(params: impl IntoIterator<Item = &'a Param>, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    let sum: f64 = params
        .into_iter()
        .filter(|p| p.decay && p.trainable)
        .map(|p| p.value.iter().map(|w| w * w).sum::<f64>())
        .sum();
    0.5 * lambda * sum
}

pub fn bce_l2_loss<'a>(p: &[f64], y: &[f64], params: impl IntoIterator<Item = &'a Param>, lambda: f64) -> f64 {
    bce(p, y) + l2_penalty(params, lambda)
}

/// `dL/dp` of the mean BCE; zero where the clamp is active.
pub fn bce_grad(p: &[f64], y: &[f64]) -> Vec<f64> {
    let k = p.len() as f64;
    p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
                0.0
            } else {
                (-(y / p) + (1.0 - y) / (1.0 - p)) / k
            }
        })
        .collect()
}

/// `dL/dz` for `p = sigmoid(z)`, i.e. `(p − y)/k` away from the clamp.
pub fn bce_logit_grad(p: &[f64], y: &[f64]) -> Vec<f64> {
    let k = p.len() as f64;
    p.iter()
        .zip(y)
        .map(|(&p, &y)| {
            if !(PROB_EPS..=1.0 - PROB_EPS).contains(&p) {
                0.0
            } else {
                (p - y) / k
            }
        })
        .collect()
}

/// Adds `λ W` to the gradient of every decayed parameter.
pub fn add_l2_grad<'a>(params: impl IntoIterator<Item = &'a mut Param>, lambda: f64) {
    if lambda == 0.0 {
        return;
    }
    for p in params {
        if p.decay && p.trainable {
            p.grad.scaled_add(lambda, &p.value);
        }
    }
}
