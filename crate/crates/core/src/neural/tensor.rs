use ndarray::{Array2, ArrayBase, Data, Dimension};
use rand::Rng;

use crate::error::{Error, Result};

/// Row-major fp64 matrix used for every activation and parameter.
pub type Tensor2D = Array2<f64>;

/// A named trainable tensor together with its gradient buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor2D,
    pub grad: Tensor2D,
    /// Whether the L2 penalty applies (weights yes, biases no).
    pub decay: bool,
    /// Frozen parameters receive no gradient and are skipped by the optimizer.
    pub trainable: bool,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor2D, decay: bool) -> Self {
        let grad = Array2::zeros(value.raw_dim());
        Param { name: name.into(), value, grad, decay, trainable: true }
    }

    pub fn weight(name: impl Into<String>, value: Tensor2D) -> Self {
        Self::new(name, value, true)
    }

    pub fn bias(name: impl Into<String>, value: Tensor2D) -> Self {
        Self::new(name, value, false)
    }

    pub fn zeros(name: impl Into<String>, rows: usize, cols: usize, decay: bool) -> Self {
        Self::new(name, Array2::zeros((rows, cols)), decay)
    }

    /// Uniform init in `[-limit, limit]`.
    pub fn uniform<R: Rng>(name: impl Into<String>, rows: usize, cols: usize, limit: f64, decay: bool, rng: &mut R) -> Self {
        let value = Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..=limit));
        Self::new(name, value, decay)
    }

    /// Glorot/Xavier uniform limit for a `fan_in -> fan_out` map.
    pub fn glorot_limit(fan_in: usize, fan_out: usize) -> f64 {
        (6.0 / (fan_in + fan_out) as f64).sqrt()
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.value.dim()
    }
}

/// Fails with [`Error::NonFinite`] if any entry is NaN or infinite.
pub fn ensure_finite<S, D>(op: &'static str, a: &ArrayBase<S, D>) -> Result<()>
where
    S: Data<Elem = f64>,
    D: Dimension,
{
    if a.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFinite(op))
    }
}
