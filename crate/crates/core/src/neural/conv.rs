use ndarray::{s, Array2, ArrayView2, Axis};
use rand::Rng;

use super::tensor::{ensure_finite, Param};
use crate::error::{Error, Result};

/// Valid (unpadded) 1-D cross-correlation along the sequence axis.
///
/// Filters of logical shape `K × C_in × C_out` are stored flattened as a
/// `(K·C_in) × C_out` matrix: row `k·C_in + c` holds tap `k` of input channel `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv1d {
    pub weight: Param,
    pub bias: Param,
    pub kernel: usize,
    pub in_channels: usize,
}

impl Conv1d {
    pub fn new<R: Rng>(name: &str, in_channels: usize, filters: usize, kernel: usize, rng: &mut R) -> Self {
        let limit = Param::glorot_limit(kernel * in_channels, kernel * filters);
        Conv1d {
            weight: Param::uniform(format!("{name}.weight"), kernel * in_channels, filters, limit, true, rng),
            bias: Param::zeros(format!("{name}.bias"), 1, filters, false),
            kernel,
            in_channels,
        }
    }

    pub fn zeros(name: &str, in_channels: usize, filters: usize, kernel: usize) -> Self {
        Conv1d {
            weight: Param::zeros(format!("{name}.weight"), kernel * in_channels, filters, true),
            bias: Param::zeros(format!("{name}.bias"), 1, filters, false),
            kernel,
            in_channels,
        }
    }

    pub fn filters(&self) -> usize {
        self.weight.value.ncols()
    }

    /// Sets filter tap `k`, input channel `c`, output channel `o`.
    pub fn set_tap(&mut self, k: usize, c: usize, o: usize, v: f64) {
        self.weight.value[[k * self.in_channels + c, o]] = v;
    }

    pub fn output_len(&self, len: usize) -> Option<usize> {
        len.checked_sub(self.kernel).map(|r| r + 1)
    }

    /// Sliding windows flattened to rows: `(L−K+1) × (K·C_in)`.
    fn columns(&self, x: ArrayView2<f64>) -> Array2<f64> {
        let out_len = x.nrows() + 1 - self.kernel;
        let width = self.kernel * self.in_channels;
        let mut cols = Array2::zeros((out_len, width));
        for t in 0..out_len {
            let window = x.slice(s![t..t + self.kernel, ..]);
            for (dst, &v) in cols.row_mut(t).iter_mut().zip(window.iter()) {
                *dst = v;
            }
        }
        cols
    }

    pub fn forward(&self, x: ArrayView2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.in_channels {
            return Err(Error::shape(
                "conv1d",
                format!("input has {} channels, filters expect {}", x.ncols(), self.in_channels),
            ));
        }
        if x.nrows() < self.kernel {
            return Err(Error::shape(
                "conv1d",
                format!("sequence length {} shorter than kernel {}", x.nrows(), self.kernel),
            ));
        }
        let y = self.columns(x).dot(&self.weight.value) + &self.bias.value;
        ensure_finite("conv1d", &y)?;
        Ok(y)
    }

    /// Accumulates filter and bias gradients; returns the input gradient.
    pub fn backward(&mut self, x: ArrayView2<f64>, dy: ArrayView2<f64>) -> Array2<f64> {
        let cols = self.columns(x);
        self.weight.grad += &cols.t().dot(&dy);
        self.bias.grad += &dy.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dcols = dy.dot(&self.weight.value.t());
        let mut dx = Array2::zeros(x.raw_dim());
        for t in 0..dcols.nrows() {
            let mut window = dx.slice_mut(s![t..t + self.kernel, ..]);
            for (dst, &g) in window.iter_mut().zip(dcols.row(t).iter()) {
                *dst += g;
            }
        }
        dx
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}
