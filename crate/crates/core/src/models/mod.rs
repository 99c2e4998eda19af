//! The two classifiers, training loop, checkpoints and pipeline routing.

mod binary;
mod checkpoint;
mod config;
mod multilabel;
mod pipeline;
mod train;

pub use binary::{BinaryCache, BinaryClassifier};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Classifier, TrainedModel};
pub use config::{BinaryModelConfig, ConvSpec, InputMode, MultiLabelModelConfig, TrainingConfig};
pub use multilabel::{MultiLabelCache, MultiLabelClassifier};
pub use pipeline::{decide, route, Decision, PipelineOutput, TextEncoder, Thresholds, TwoStage};
pub use train::{
    dataset_loss, train, train_batch, EpochRecord, Example, Objective, Trained, TrainingHistory,
};

use ndarray::{Array2, ArrayView2};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::TokenSequence;
use crate::embedding::{pool_max, EmbeddingTable, PooledEmbedding};
use crate::error::{Error, Result};
use crate::neural::{masked_max_backward, Mode, Param};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Binary,
    MultiLabel,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Binary => "binary",
            ModelKind::MultiLabel => "multi_label",
        }
    }
}

/// A sigmoid-output network trained with per-document backpropagation.
pub trait Network: Clone {
    type Cache;

    fn kind(&self) -> ModelKind;

    /// Number of sigmoid outputs.
    fn outputs(&self) -> usize;

    fn max_len(&self) -> usize;

    fn embedding(&self) -> &EmbeddingTable;

    /// Probabilities for one sequence plus whatever the backward pass needs.
    fn forward(&self, seq: &TokenSequence, mode: Mode, rng: &mut ChaCha8Rng) -> Result<(Vec<f64>, Self::Cache)>;

    /// Accumulates parameter gradients given `dL/dlogit` for every output.
    fn backward(&mut self, seq: &TokenSequence, cache: &Self::Cache, dlogits: &[f64]);

    /// Every parameter, the embedding table first.
    fn params(&self) -> Vec<&Param>;

    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn predict(&self, seq: &TokenSequence) -> Result<Vec<f64>> {
        use rand::SeedableRng;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Ok(self.forward(seq, Mode::Inference, &mut rng)?.0)
    }

    fn zero_grad(&mut self) {
        for p in self.params_mut() {
            p.zero_grad();
        }
    }

    fn parameter_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}

/// The first layer input derived from the token embeddings.
#[derive(Debug, Clone)]
pub(crate) struct InputEmbedding {
    pub x: Array2<f64>,
    /// Number of leading real rows in `x`.
    pub len: usize,
    pooled: Option<PooledEmbedding>,
}

impl InputEmbedding {
    pub fn build(table: &EmbeddingTable, seq: &TokenSequence, mode: InputMode, max_len: usize) -> Result<Self> {
        if seq.max_len() != max_len {
            return Err(Error::shape("embed", format!("sequence length {} but model expects {max_len}", seq.max_len())));
        }
        let emb = table.embed_sequence(seq)?;
        Ok(match mode {
            InputMode::Sequence => InputEmbedding { x: emb.matrix, len: seq.true_length, pooled: None },
            InputMode::Pooled => {
                let pooled = pool_max(&emb);
                let x = pooled.values.clone().insert_axis(ndarray::Axis(0));
                let len = usize::from(!pooled.degenerate);
                InputEmbedding { x, len, pooled: Some(pooled) }
            }
        })
    }

    pub fn mask(&self) -> Vec<u8> {
        prefix_mask(self.x.nrows(), self.len)
    }

    /// Routes `dL/dx` back into the embedding table.
    pub fn backward(&self, table: &mut EmbeddingTable, seq: &TokenSequence, dx: ArrayView2<f64>) {
        match &self.pooled {
            None => table.accumulate_grad(seq, dx),
            Some(p) => {
                let d_emb = masked_max_backward(p, seq.max_len(), dx.row(0));
                table.accumulate_grad(seq, d_emb.view());
            }
        }
    }
}

pub(crate) fn prefix_mask(rows: usize, len: usize) -> Vec<u8> {
    (0..rows).map(|t| u8::from(t < len)).collect()
}

pub(crate) fn check_embedding(table: &EmbeddingTable, dim: usize) -> Result<()> {
    if table.dim() != dim {
        return Err(Error::Config(format!("embedding dimension {} but model configured for {dim}", table.dim())));
    }
    if table.vocab_size() < 2 {
        return Err(Error::Config("embedding table needs at least the PAD and UNK rows".into()));
    }
    Ok(())
}
