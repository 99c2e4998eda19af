//! Scalar and vector activations with their derivatives.

use ndarray::{Array1, ArrayView1};

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

pub fn relu(x: f64) -> f64 {
    x.max(0.0)
}

pub fn relu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        0.0
    }
}

pub fn leaky_relu(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

pub fn leaky_relu_grad(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        slope
    }
}

/// Logistic function, evaluated on the branch that never overflows `exp`.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Softmax shifted by the maximum logit.
pub fn softmax(v: ArrayView1<f64>) -> Array1<f64> {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = v.mapv(|x| (x - max).exp());
    let s = e.sum();
    e / s
}

/// Softmax over positions with `mask[i] != 0`; masked-out positions get 0.
///
/// Returns `None` when every position is masked.
pub fn masked_softmax(v: ArrayView1<f64>, mask: &[u8]) -> Option<Array1<f64>> {
    let max = v
        .iter()
        .zip(mask)
        .filter(|(_, &m)| m != 0)
        .map(|(&x, _)| x)
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return None;
    }
    let e: Array1<f64> = v
        .iter()
        .zip(mask)
        .map(|(&x, &m)| if m != 0 { (x - max).exp() } else { 0.0 })
        .collect();
    let s = e.sum();
    Some(e / s)
}
