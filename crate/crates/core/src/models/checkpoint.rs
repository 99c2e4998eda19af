//! Binary checkpoint format.
//!
//! Layout: 8-byte magic, `u32` format version, `u64` header length, a JSON
//! header, every tensor as little-endian `f64` in manifest order, and a
//! trailing SHA-256 of everything before it. All integers are little-endian.

use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BinaryClassifier, BinaryModelConfig, ModelKind, MultiLabelClassifier, MultiLabelModelConfig, Network};
use super::{TrainingConfig, TrainingHistory};
use crate::corpus::Label;
use crate::embedding::{EmbeddingSource, EmbeddingTable};
use crate::error::{Error, Result};
use crate::neural::Param;

const MAGIC: &[u8; 8] = b"TOXCLSCK";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Binary(BinaryClassifier),
    MultiLabel(MultiLabelClassifier),
}

impl Classifier {
    pub fn kind(&self) -> ModelKind {
        match self {
            Classifier::Binary(_) => ModelKind::Binary,
            Classifier::MultiLabel(_) => ModelKind::MultiLabel,
        }
    }

    fn params(&self) -> Vec<&Param> {
        match self {
            Classifier::Binary(m) => m.params(),
            Classifier::MultiLabel(m) => m.params(),
        }
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Classifier::Binary(m) => m.params_mut(),
            Classifier::MultiLabel(m) => m.params_mut(),
        }
    }

    fn embedding(&self) -> &EmbeddingTable {
        match self {
            Classifier::Binary(m) => m.embedding(),
            Classifier::MultiLabel(m) => m.embedding(),
        }
    }

    pub fn into_binary(self) -> Result<BinaryClassifier> {
        match self {
            Classifier::Binary(m) => Ok(m),
            other => Err(kind_mismatch(ModelKind::Binary, other.kind())),
        }
    }

    pub fn into_multilabel(self) -> Result<MultiLabelClassifier> {
        match self {
            Classifier::MultiLabel(m) => Ok(m),
            other => Err(kind_mismatch(ModelKind::MultiLabel, other.kind())),
        }
    }
}

fn kind_mismatch(expected: ModelKind, found: ModelKind) -> Error {
    Error::Checkpoint(format!("expected a {} model, checkpoint holds a {} model", expected.name(), found.name()))
}

/// A classifier with the metadata needed to reproduce and audit it.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub classifier: Classifier,
    pub training: TrainingConfig,
    pub vocab_hash: String,
    pub history: TrainingHistory,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "config", rename_all = "snake_case")]
enum ModelConfig {
    Binary(BinaryModelConfig),
    MultiLabel(MultiLabelModelConfig),
}

#[derive(Debug, Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    rows: usize,
    cols: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    class_order: Vec<String>,
    training: TrainingConfig,
    vocab_hash: String,
    history: TrainingHistory,
    embedding_source: EmbeddingSource,
    embedding_trainable: bool,
    tensors: Vec<TensorEntry>,
}

fn class_order(kind: ModelKind) -> Vec<String> {
    match kind {
        ModelKind::Binary => vec!["toxic".into()],
        ModelKind::MultiLabel => Label::ALL.iter().map(|l| l.name().to_string()).collect(),
    }
}

/// Serializes a model to bytes. The output is a pure function of the model.
pub fn write_checkpoint(model: &TrainedModel) -> Result<Vec<u8>> {
    let c = &model.classifier;
    let params = c.params();
    let header = Header {
        model: match c {
            Classifier::Binary(m) => ModelConfig::Binary(m.config.clone()),
            Classifier::MultiLabel(m) => ModelConfig::MultiLabel(m.config.clone()),
        },
        class_order: class_order(c.kind()),
        training: model.training.clone(),
        vocab_hash: model.vocab_hash.clone(),
        history: model.history.clone(),
        embedding_source: c.embedding().source,
        embedding_trainable: c.embedding().trainable(),
        tensors: params.iter().map(|p| TensorEntry { name: p.name.clone(), rows: p.shape().0, cols: p.shape().1 }).collect(),
    };
    let json = serde_json::to_vec(&header)?;
    let body: usize = params.iter().map(|p| p.len() * 8).sum();
    let mut out = Vec::with_capacity(8 + 4 + 8 + json.len() + body + DIGEST_LEN);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for p in &params {
        for v in p.value.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    Ok(out)
}

pub fn save_checkpoint(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_checkpoint(model)?).map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated while reading {what}")))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().expect("8 bytes")))
    }
}

/// Parses and verifies a checkpoint. With `expected` set, a checkpoint of the
/// other kind is rejected.
pub fn read_checkpoint(bytes: &[u8], expected: Option<ModelKind>) -> Result<TrainedModel> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    if bytes.len() < MAGIC.len() + 12 + DIGEST_LEN {
        return Err(Error::Checkpoint("truncated checkpoint".into()));
    }
    let (content, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(content).as_slice() != digest {
        return Err(Error::Checkpoint("checksum mismatch (file is truncated or corrupted)".into()));
    }
    let mut cur = Cursor { bytes: content, pos: MAGIC.len() };
    let version = cur.u32("format version")?;
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported format version {version}")));
    }
    let header_len = usize::try_from(cur.u64("header length")?)
        .map_err(|_| Error::Checkpoint("header length overflows".into()))?;
    let header: Header = serde_json::from_slice(cur.take(header_len, "header")?)
        .map_err(|e| Error::Checkpoint(format!("malformed header: {e}")))?;

    let kind = match header.model {
        ModelConfig::Binary(_) => ModelKind::Binary,
        ModelConfig::MultiLabel(_) => ModelKind::MultiLabel,
    };
    if let Some(want) = expected {
        if want != kind {
            return Err(kind_mismatch(want, kind));
        }
    }
    if header.class_order != class_order(kind) {
        return Err(Error::Checkpoint(format!("unexpected class order {:?}", header.class_order)));
    }
    let table = header
        .tensors
        .first()
        .filter(|t| t.name == "embedding.table")
        .ok_or_else(|| Error::Checkpoint("first tensor must be the embedding table".into()))?;
    let embedding = EmbeddingTable::from_matrix(
        Array2::zeros((table.rows, table.cols)),
        header.embedding_trainable,
        header.embedding_source,
    );
    let skeleton = |e: Error| Error::Checkpoint(format!("invalid model configuration: {e}"));
    let mut classifier = match header.model {
        ModelConfig::Binary(cfg) => Classifier::Binary(BinaryClassifier::zeroed(cfg, embedding).map_err(skeleton)?),
        ModelConfig::MultiLabel(cfg) => {
            Classifier::MultiLabel(MultiLabelClassifier::zeroed(cfg, embedding).map_err(skeleton)?)
        }
    };
    {
        let mut params = classifier.params_mut();
        if params.len() != header.tensors.len() {
            return Err(Error::Checkpoint(format!(
                "manifest lists {} tensors, architecture has {}",
                header.tensors.len(),
                params.len()
            )));
        }
        for (p, entry) in params.iter_mut().zip(&header.tensors) {
            if p.name != entry.name || p.shape() != (entry.rows, entry.cols) {
                return Err(Error::Checkpoint(format!(
                    "tensor {} {}x{} does not match architecture tensor {} {:?}",
                    entry.name,
                    entry.rows,
                    entry.cols,
                    p.name,
                    p.shape()
                )));
            }
            let raw = cur.take(p.len() * 8, &entry.name)?;
            for (dst, chunk) in p.value.iter_mut().zip(raw.chunks_exact(8)) {
                *dst = f64::from_le_bytes(chunk.try_into().expect("8 bytes"));
            }
        }
    }
    if cur.pos != content.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes after tensor data", content.len() - cur.pos)));
    }
    Ok(TrainedModel { classifier, training: header.training, vocab_hash: header.vocab_hash, history: header.history })
}

pub fn load_checkpoint(path: impl AsRef<Path>, expected: Option<ModelKind>) -> Result<TrainedModel> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&bytes, expected)
}
