//! Token embedding table, sequence lookup and masked max pooling.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{TokenSequence, Vocabulary, PAD, UNK};
use crate::error::{Error, Result};
use crate::neural::{masked_max_over_rows, Param, TimeMax};

pub const DEFAULT_DIM: usize = 768;
pub const INIT_RANGE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingSource {
    RandomInit,
    File,
}

/// `vocab_size × D` lookup table. Row 0 (PAD) is always zero.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub table: Param,
    pub source: EmbeddingSource,
}

/// Per-token vectors for one sequence; rows where `mask = 0` are zero.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEmbedding {
    pub matrix: Array2<f64>,
    pub mask: Vec<u8>,
}

impl EmbeddingTable {
    /// Seeded uniform init in `[-0.05, 0.05]`.
    pub fn random(vocab_size: usize, dim: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Array2::from_shape_fn((vocab_size, dim), |_| rng.gen_range(-INIT_RANGE..=INIT_RANGE));
        m.row_mut(PAD).fill(0.0);
        Self::from_matrix(m, true, EmbeddingSource::RandomInit)
    }

    pub fn from_matrix(mut matrix: Array2<f64>, trainable: bool, source: EmbeddingSource) -> Self {
        if matrix.nrows() > PAD {
            matrix.row_mut(PAD).fill(0.0);
        }
        let mut table = Param::new("embedding.table", matrix, false);
        table.trainable = trainable;
        EmbeddingTable { table, source }
    }

    pub fn vocab_size(&self) -> usize {
        self.table.value.nrows()
    }

    pub fn dim(&self) -> usize {
        self.table.value.ncols()
    }

    pub fn trainable(&self) -> bool {
        self.table.trainable
    }

    pub fn row(&self, id: usize) -> ndarray::ArrayView1<'_, f64> {
        self.table.value.row(id)
    }

    /// Row `i` is `table[input_ids[i]]` where the mask is set and zero elsewhere.
    pub fn embed_sequence(&self, seq: &TokenSequence) -> Result<SequenceEmbedding> {
        let mut matrix = Array2::zeros((seq.max_len(), self.dim()));
        for (i, (&id, &m)) in seq.input_ids.iter().zip(&seq.mask).enumerate() {
            if id >= self.vocab_size() {
                return Err(Error::Lookup { id, size: self.vocab_size() });
            }
            if m != 0 {
                matrix.row_mut(i).assign(&self.table.value.row(id));
            }
        }
        Ok(SequenceEmbedding { matrix, mask: seq.mask.clone() })
    }

    /// Scatters a gradient w.r.t. the sequence embedding into the table.
    /// PAD and masked positions receive nothing; a frozen table is left alone.
    pub fn accumulate_grad(&mut self, seq: &TokenSequence, d_emb: ArrayView2<f64>) {
        if !self.table.trainable {
            return;
        }
        for (i, (&id, &m)) in seq.input_ids.iter().zip(&seq.mask).enumerate() {
            if m != 0 && id != PAD {
                self.table.grad.row_mut(id).scaled_add(1.0, &d_emb.row(i));
            }
        }
    }

    /// Writes the text format read by [`load_table`].
    pub fn save_text(&self, vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let io = |e| Error::io(path, e);
        let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(f, "{} {}", self.vocab_size(), self.dim()).map_err(io)?;
        for (id, row) in self.table.value.rows().into_iter().enumerate() {
            let tok = vocab.token(id).ok_or_else(|| Error::Lookup { id, size: vocab.len() })?;
            write!(f, "{tok}").map_err(io)?;
            for v in row {
                write!(f, " {v:?}").map_err(io)?;
            }
            writeln!(f).map_err(io)?;
        }
        f.flush().map_err(io)
    }
}

/// Raw contents of an embedding file: tokens and their vectors in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFile {
    pub tokens: Vec<String>,
    pub vectors: Array2<f64>,
}

/// Parses `vocab_size D` then `token v1 … vD` per line. Row numbers in errors
/// are 1-based line numbers.
pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingFile> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(f).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::EmbeddingLoad { row: 1, reason: "empty file".into() })?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::EmbeddingLoad { row: 1, reason: format!("bad header {header:?}: {e}") })?;
    let [count, dim] = dims[..] else {
        return Err(Error::EmbeddingLoad { row: 1, reason: format!("header must be \"vocab_size D\", got {header:?}") });
    };
    let mut tokens = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (i, line) in lines.enumerate() {
        let row = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let tok = parts.next().expect("non-empty line");
        let mut n = 0;
        for p in parts {
            let v: f64 = p
                .parse()
                .map_err(|_| Error::EmbeddingLoad { row, reason: format!("cannot parse {p:?}") })?;
            if !v.is_finite() {
                return Err(Error::EmbeddingLoad { row, reason: format!("non-finite value {p:?}") });
            }
            data.push(v);
            n += 1;
        }
        if n != dim {
            return Err(Error::EmbeddingLoad { row, reason: format!("expected {dim} values, found {n}") });
        }
        tokens.push(tok.to_owned());
    }
    if tokens.len() != count {
        return Err(Error::EmbeddingLoad {
            row: tokens.len() + 1,
            reason: format!("header declares {count} rows, file has {}", tokens.len()),
        });
    }
    let vectors = Array2::from_shape_vec((count, dim), data).expect("row lengths checked");
    Ok(EmbeddingFile { tokens, vectors })
}

/// Loads an exported embedding file and aligns it to `vocab`.
///
/// Vocabulary tokens missing from the file take UNK's row (zero if the file
/// has no `<unk>` entry); the PAD row is forced to zero. The loaded table is
/// frozen.
pub fn load_table(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<EmbeddingTable> {
    let file = read_embedding_file(path)?;
    Ok(align(&file, vocab))
}

pub fn align(file: &EmbeddingFile, vocab: &Vocabulary) -> EmbeddingTable {
    let dim = file.vectors.ncols();
    let index: std::collections::HashMap<&str, usize> =
        file.tokens.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();
    let unk_row: Array1<f64> = vocab
        .token(UNK)
        .and_then(|t| index.get(t))
        .map(|&i| file.vectors.row(i).to_owned())
        .unwrap_or_else(|| Array1::zeros(dim));
    let mut m = Array2::zeros((vocab.len(), dim));
    for (id, tok) in vocab.tokens().iter().enumerate() {
        match index.get(tok.as_str()) {
            Some(&i) => m.row_mut(id).assign(&file.vectors.row(i)),
            None => m.row_mut(id).assign(&unk_row),
        }
    }
    EmbeddingTable::from_matrix(m, false, EmbeddingSource::File)
}

/// Result of [`pool_max`]: the pooled vector, or zeros with `degenerate` set
/// when the sequence has no real tokens.
pub type PooledEmbedding = TimeMax;

/// Elementwise maximum over real-token rows only.
pub fn pool_max(emb: &SequenceEmbedding) -> PooledEmbedding {
    let pooled = masked_max_over_rows(emb.matrix.view(), &emb.mask);
    if pooled.degenerate {
        log::warn!("max pooling over a sequence with no real tokens; returning zeros");
    }
    pooled
}
