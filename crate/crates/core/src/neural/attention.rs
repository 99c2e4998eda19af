//! Additive attention pooling over a sequence of hidden states.
//!
//! Scores are `s_t = w · H_t + b`, weights are the softmax of the scores over
//! unmasked steps, and the context vector is `z = Σ_t α_t H_t`.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use rand::Rng;

use super::activations::masked_softmax;
use super::tensor::{ensure_finite, Param};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Attention {
    /// Score vector, `1 × d`.
    pub w: Param,
    /// Score bias, `1 × 1`.
    pub b: Param,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionOutput {
    pub scores: Array1<f64>,
    pub alpha: Array1<f64>,
    pub context: Array1<f64>,
}

impl Attention {
    pub fn new<R: Rng>(name: &str, dim: usize, rng: &mut R) -> Self {
        Attention {
            w: Param::uniform(format!("{name}.w"), 1, dim, Param::glorot_limit(dim, 1), true, rng),
            b: Param::zeros(format!("{name}.b"), 1, 1, false),
        }
    }

    pub fn zeros(name: &str, dim: usize) -> Self {
        Attention {
            w: Param::zeros(format!("{name}.w"), 1, dim, true),
            b: Param::zeros(format!("{name}.b"), 1, 1, false),
        }
    }

    pub fn dim(&self) -> usize {
        self.w.value.ncols()
    }

    pub fn forward(&self, h: ArrayView2<f64>, mask: &[u8]) -> Result<AttentionOutput> {
        if h.ncols() != self.dim() || mask.len() != h.nrows() || h.nrows() == 0 {
            return Err(Error::shape(
                "attention",
                format!("states {:?}, mask {}, score width {}", h.dim(), mask.len(), self.dim()),
            ));
        }
        let raw = h.dot(&self.w.value.row(0));
        // The bias shifts every score equally, so it is added only to the
        // reported scores; the softmax sees the unbiased values and the
        // weights are bit-identical for any bias.
        let alpha = masked_softmax(raw.view(), mask)
            .ok_or_else(|| Error::Numeric("attention over a fully masked sequence".into()))?;
        let context = alpha.dot(&h);
        ensure_finite("attention", &context)?;
        let scores = raw + self.b.value[[0, 0]];
        Ok(AttentionOutput { scores, alpha, context })
    }

    /// Accumulates `dw`, `db` and returns `dL/dH` given `dL/dz`.
    pub fn backward(&mut self, h: ArrayView2<f64>, out: &AttentionOutput, dz: ArrayView1<f64>) -> Array2<f64> {
        let dalpha = h.dot(&dz);
        let mean = out.alpha.dot(&dalpha);
        let ds = &out.alpha * &(dalpha - mean);
        let mut dh = Array2::zeros(h.raw_dim());
        for (t, mut row) in dh.rows_mut().into_iter().enumerate() {
            row.scaled_add(out.alpha[t], &dz);
            row.scaled_add(ds[t], &self.w.value.row(0));
        }
        self.w.grad.row_mut(0).scaled_add(1.0, &ds.dot(&h));
        self.b.grad[[0, 0]] += ds.sum();
        dh
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.w, &self.b]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.w, &mut self.b]
    }
}
