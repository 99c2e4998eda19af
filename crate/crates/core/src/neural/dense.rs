use ndarray::{Array1, ArrayView1};
use rand::Rng;

use super::tensor::{ensure_finite, Param};
use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b` with `W` of shape `out × in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
}

impl Dense {
    pub fn new<R: Rng>(name: &str, inputs: usize, outputs: usize, rng: &mut R) -> Self {
        let limit = Param::glorot_limit(inputs, outputs);
        Dense {
            weight: Param::uniform(format!("{name}.weight"), outputs, inputs, limit, true, rng),
            bias: Param::zeros(format!("{name}.bias"), 1, outputs, false),
        }
    }

    pub fn zeros(name: &str, inputs: usize, outputs: usize) -> Self {
        Dense {
            weight: Param::zeros(format!("{name}.weight"), outputs, inputs, true),
            bias: Param::zeros(format!("{name}.bias"), 1, outputs, false),
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.ncols()
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.nrows()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        if x.len() != self.inputs() {
            return Err(Error::shape(
                "dense",
                format!("input length {} but weight expects {}", x.len(), self.inputs()),
            ));
        }
        let y = self.weight.value.dot(&x) + self.bias.value.row(0);
        ensure_finite("dense", &y)?;
        Ok(y)
    }

    /// Accumulates `dW += dy xᵀ`, `db += dy` and returns `dx = Wᵀ dy`.
    pub fn backward(&mut self, x: ArrayView1<f64>, dy: ArrayView1<f64>) -> Array1<f64> {
        for (i, &g) in dy.iter().enumerate() {
            self.weight.grad.row_mut(i).scaled_add(g, &x);
        }
        self.bias.grad.row_mut(0).scaled_add(1.0, &dy);
        self.weight.value.t().dot(&dy)
    }

    pub fn params(&self) -> [&Param; 2] {
        [&self.weight, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut Param; 2] {
        [&mut self.weight, &mut self.bias]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_and_constant() {
        let mut d = Dense::zeros("d", 3, 3);
        d.weight.value = Array2::eye(3);
        let x = array![1.0, -2.0, 3.5];
        assert_eq!(d.forward(x.view()).unwrap(), x);

        let mut c = Dense::zeros("c", 3, 2);
        c.bias.value = array![[0.25, -4.0]];
        assert_eq!(c.forward(x.view()).unwrap(), array![0.25, -4.0]);
    }

    #[test]
    fn shape_mismatch() {
        let d = Dense::zeros("d", 3, 2);
        assert!(matches!(d.forward(array![1.0].view()), Err(Error::Shape { .. })));
    }
}
