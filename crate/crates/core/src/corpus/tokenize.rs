use serde::{Deserialize, Serialize};

use super::vocab::{Vocabulary, PAD};

/// Default maximum sequence length.
pub const DEFAULT_MAX_LEN: usize = 300;

/// Fixed-length token ids plus the presence mask of real tokens.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenSequence {
    pub input_ids: Vec<usize>,
    pub mask: Vec<u8>,
    pub true_length: usize,
}

impl TokenSequence {
    /// Pads (or head-truncates) `ids` to `max_len`.
    pub fn from_ids(ids: &[usize], max_len: usize) -> Self {
        let true_length = ids.len().min(max_len);
        let mut input_ids = vec![PAD; max_len];
        input_ids[..true_length].copy_from_slice(&ids[..true_length]);
        let mut mask = vec![0u8; max_len];
        mask[..true_length].fill(1);
        TokenSequence { input_ids, mask, true_length }
    }

    pub fn max_len(&self) -> usize {
        self.input_ids.len()
    }

    pub fn real_ids(&self) -> &[usize] {
        &self.input_ids[..self.true_length]
    }
}

/// Whitespace tokenization with UNK mapping, head truncation and zero padding.
pub fn tokenize(text: &str, vocab: &Vocabulary, max_len: usize) -> TokenSequence {
    assert!(max_len >= 1, "max_len must be at least 1");
    let ids: Vec<usize> = text.split_whitespace().take(max_len).map(|t| vocab.id(t)).collect();
    TokenSequence::from_ids(&ids, max_len)
}

/// Maps the real (unpadded) ids back to tokens.
pub fn detokenize(seq: &TokenSequence, vocab: &Vocabulary) -> Vec<String> {
    seq.real_ids()
        .iter()
        .map(|&id| vocab.token(id).unwrap_or(super::UNK_TOKEN).to_owned())
        .collect()
}
