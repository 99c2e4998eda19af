use serde::{Deserialize, Serialize};

use crate::corpus::DEFAULT_MAX_LEN;
use crate::embedding::DEFAULT_DIM;
use crate::error::{Error, Result};
use crate::neural::{AdamConfig, DEFAULT_DROPOUT_RATE, DEFAULT_L2, DEFAULT_LEAKY_SLOPE};

/// What the first recurrent layer sees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputMode {
    /// The full `L × D` token embedding matrix.
    #[default]
    Sequence,
    /// A single max-pooled `D` vector (one time step).
    Pooled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BinaryModelConfig {
    pub embedding_dim: usize,
    pub max_len: usize,
    pub lstm_units: usize,
    pub dropout_rate: f64,
    /// Hidden dense layers (Leaky ReLU) between pooling and the sigmoid output.
    pub dense_hidden: Vec<usize>,
    pub leaky_slope: f64,
    pub input: InputMode,
    pub init_seed: u64,
}

impl BinaryModelConfig {
    pub fn full() -> Self {
        BinaryModelConfig {
            embedding_dim: DEFAULT_DIM,
            max_len: DEFAULT_MAX_LEN,
            lstm_units: 128,
            dropout_rate: DEFAULT_DROPOUT_RATE,
            dense_hidden: vec![64],
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            input: InputMode::Sequence,
            init_seed: 0,
        }
    }

    pub fn desk() -> Self {
        BinaryModelConfig {
            embedding_dim: 32,
            max_len: 32,
            lstm_units: 16,
            dense_hidden: vec![16],
            ..Self::full()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.max_len == 0 || self.lstm_units == 0 {
            return Err(Error::Config("binary model dimensions must be positive".into()));
        }
        if self.dense_hidden.contains(&0) {
            return Err(Error::Config("dense hidden sizes must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!("dropout rate {} outside [0, 1)", self.dropout_rate)));
        }
        Ok(())
    }
}

impl Default for BinaryModelConfig {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvSpec {
    pub filters: usize,
    pub kernel: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultiLabelModelConfig {
    pub embedding_dim: usize,
    pub max_len: usize,
    pub conv: Vec<ConvSpec>,
    pub pool: usize,
    pub bilstm_units: usize,
    /// Attention pooling over BiLSTM states; masked max over time when off.
    pub attention: bool,
    pub input: InputMode,
    pub init_seed: u64,
}

impl MultiLabelModelConfig {
    pub fn full() -> Self {
        MultiLabelModelConfig {
            embedding_dim: DEFAULT_DIM,
            max_len: DEFAULT_MAX_LEN,
            conv: vec![
                ConvSpec { filters: 512, kernel: 4 },
                ConvSpec { filters: 256, kernel: 3 },
                ConvSpec { filters: 128, kernel: 2 },
            ],
            pool: 2,
            bilstm_units: 128,
            attention: true,
            input: InputMode::Sequence,
            init_seed: 0,
        }
    }

    pub fn desk() -> Self {
        MultiLabelModelConfig {
            embedding_dim: 32,
            max_len: 32,
            conv: vec![
                ConvSpec { filters: 32, kernel: 4 },
                ConvSpec { filters: 24, kernel: 3 },
                ConvSpec { filters: 16, kernel: 2 },
            ],
            bilstm_units: 16,
            ..Self::full()
        }
    }

    /// Sequence length after each conv and each pool, in order.
    pub fn shape_trace(&self) -> Result<Vec<usize>> {
        let mut len = match self.input {
            InputMode::Sequence => self.max_len,
            InputMode::Pooled => 1,
        };
        let mut trace = Vec::with_capacity(self.conv.len() * 2);
        for (i, c) in self.conv.iter().enumerate() {
            len = len.checked_sub(c.kernel).map(|r| r + 1).filter(|&l| l >= self.pool).ok_or_else(|| {
                Error::Config(format!("sequence too short for conv layer {i} (kernel {}, pool {})", c.kernel, self.pool))
            })?;
            trace.push(len);
            len /= self.pool;
            trace.push(len);
        }
        Ok(trace)
    }

    /// Length of the sequence handed to the BiLSTM.
    pub fn post_stack_len(&self) -> Result<usize> {
        Ok(self.shape_trace()?.last().copied().unwrap_or(self.max_len))
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv.is_empty() {
            return Err(Error::Config("conv stack must not be empty".into()));
        }
        if self.embedding_dim == 0 || self.bilstm_units == 0 || self.pool == 0 {
            return Err(Error::Config("multi-label model dimensions must be positive".into()));
        }
        if self.conv.iter().any(|c| c.filters == 0 || c.kernel == 0) {
            return Err(Error::Config("conv filters and kernels must be positive".into()));
        }
        self.shape_trace().map(|_| ())
    }
}

impl Default for MultiLabelModelConfig {
    fn default() -> Self {
        Self::full()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub l2: f64,
    /// Stop after this many epochs without a validation-loss improvement.
    pub patience: Option<usize>,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { batch_size: 16, learning_rate: 1e-5, epochs: 50, seed: 0, l2: DEFAULT_L2, patience: Some(10) }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be non-negative, got {}", self.learning_rate)));
        }
        if !(self.l2 >= 0.0) {
            return Err(Error::Config(format!("l2 must be non-negative, got {}", self.l2)));
        }
        Ok(())
    }

    pub fn adam(&self) -> AdamConfig {
        AdamConfig::with_lr(self.learning_rate)
    }
}
