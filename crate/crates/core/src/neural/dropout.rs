use ndarray::{Array, Dimension};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_DROPOUT_RATE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Inference,
}

/// Inverted dropout. Returns the output and the per-entry scale that was
/// applied (0 or `1/(1−rate)`), which is also the backward multiplier.
pub fn dropout<D: Dimension, R: Rng>(
    x: &Array<f64, D>,
    rate: f64,
    mode: Mode,
    rng: &mut R,
) -> Result<(Array<f64, D>, Array<f64, D>)> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Config(format!("dropout rate must lie in [0, 1), got {rate}")));
    }
    if mode == Mode::Inference || rate == 0.0 {
        return Ok((x.clone(), Array::ones(x.raw_dim())));
    }
    let keep = 1.0 / (1.0 - rate);
    let scale = Array::from_shape_simple_fn(x.raw_dim(), || if rng.gen::<f64>() < rate { 0.0 } else { keep });
    Ok((x * &scale, scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn identity_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let x = array![1.0, -2.0, 3.0];
        assert_eq!(dropout(&x, 0.0, Mode::Train, &mut rng).unwrap().0, x);
        assert_eq!(dropout(&x, 0.5, Mode::Inference, &mut rng).unwrap().0, x);
        assert!(dropout(&x, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout(&x, -0.1, Mode::Inference, &mut rng).is_err());
    }

    #[test]
    fn expectation_preserved() {
        // Monte-Carlo: mean of 1e5 seeded draws within 1% of x.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = array![1.0, -2.0, 0.5, 4.0];
        let draws = 100_000;
        let mut acc = Array1::<f64>::zeros(4);
        for _ in 0..draws {
            acc += &dropout(&x, 0.3, Mode::Train, &mut rng).unwrap().0;
        }
        let mean = acc / draws as f64;
        for (m, v) in mean.iter().zip(x.iter()) {
            assert!((m - v).abs() <= 0.01 * v.abs(), "mean {m} vs {v}");
        }
    }

    #[test]
    fn seeded_masks_repeat() {
        let x = Array1::<f64>::ones(64);
        let a = dropout(&x, 0.3, Mode::Train, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let b = dropout(&x, 0.3, Mode::Train, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
        assert!(a.1.iter().all(|&s| s == 0.0 || (s - 1.0 / 0.7).abs() < 1e-15));
    }
}
