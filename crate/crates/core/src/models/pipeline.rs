use std::fmt;

use serde::{Deserialize, Serialize};

use super::{BinaryClassifier, MultiLabelClassifier, Network};
use crate::corpus::{preprocess, tokenize, Label, PreprocessConfig, TokenSequence, Vocabulary, NUM_LABELS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thresholds {
    /// Stage 2 runs only when `p_toxic >= binary`.
    pub binary: f64,
    /// Per-label emission threshold.
    pub label: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { binary: 0.5, label: 0.5 }
    }
}

impl Thresholds {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("binary", self.binary), ("label", self.label)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} threshold {v} outside [0, 1]")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "class", content = "labels", rename_all = "snake_case")]
pub enum Decision {
    NonToxic,
    /// Never empty.
    Toxic(Vec<Label>),
}

impl Decision {
    pub fn is_toxic(&self) -> bool {
        matches!(self, Decision::Toxic(_))
    }

    pub fn labels(&self) -> &[Label] {
        match self {
            Decision::NonToxic => &[],
            Decision::Toxic(l) => l,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decision::NonToxic => f.write_str("Non-toxic"),
            Decision::Toxic(labels) => {
                let names: Vec<&str> = labels.iter().map(|l| l.name()).collect();
                f.write_str(&names.join(", "))
            }
        }
    }
}

/// Labels at or above `threshold`; when none qualify, the single most
/// probable label (lowest index on ties).
pub fn decide(probs: &[f64; NUM_LABELS], threshold: f64) -> Vec<Label> {
    let picked: Vec<Label> = Label::ALL.iter().copied().filter(|l| probs[l.index()] >= threshold).collect();
    if !picked.is_empty() {
        return picked;
    }
    let mut best = 0;
    for i in 1..NUM_LABELS {
        if probs[i] > probs[best] {
            best = i;
        }
    }
    vec![Label::ALL[best]]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOutput {
    pub p_toxic: f64,
    /// Present only when stage 2 ran.
    pub label_probs: Option<[f64; NUM_LABELS]>,
    pub decision: Decision,
}

/// Two-stage routing. `stage2` is called only for documents the gate lets through.
pub fn route<F>(p_toxic: f64, thresholds: Thresholds, stage2: F) -> Result<PipelineOutput>
where
    F: FnOnce() -> Result<[f64; NUM_LABELS]>,
{
    if p_toxic < thresholds.binary {
        return Ok(PipelineOutput { p_toxic, label_probs: None, decision: Decision::NonToxic });
    }
    let probs = stage2()?;
    let decision = Decision::Toxic(decide(&probs, thresholds.label));
    Ok(PipelineOutput { p_toxic, label_probs: Some(probs), decision })
}

/// Raw text to token ids: cleaning, vocabulary lookup, pad/truncate.
#[derive(Debug, Clone)]
pub struct TextEncoder {
    pub preprocess: PreprocessConfig,
    pub vocab: Vocabulary,
}

impl TextEncoder {
    pub fn new(preprocess: PreprocessConfig, vocab: Vocabulary) -> Self {
        TextEncoder { preprocess, vocab }
    }

    pub fn clean(&self, text: &str) -> String {
        preprocess(text, &self.preprocess)
    }

    pub fn encode(&self, text: &str, max_len: usize) -> TokenSequence {
        tokenize(&self.clean(text), &self.vocab, max_len)
    }
}

/// A binary gate and a multi-label tagger sharing one vocabulary.
#[derive(Debug, Clone)]
pub struct TwoStage {
    pub encoder: TextEncoder,
    pub binary: BinaryClassifier,
    pub multilabel: MultiLabelClassifier,
    pub thresholds: Thresholds,
}

impl TwoStage {
    pub fn new(encoder: TextEncoder, binary: BinaryClassifier, multilabel: MultiLabelClassifier) -> Result<Self> {
        let v = encoder.vocab.len();
        for (name, size) in [("binary", binary.embedding().vocab_size()), ("multi-label", multilabel.embedding().vocab_size())] {
            if size != v {
                return Err(Error::Config(format!("{name} model has {size} embedding rows, vocabulary has {v} tokens")));
            }
        }
        Ok(TwoStage { encoder, binary, multilabel, thresholds: Thresholds::default() })
    }

    pub fn with_thresholds(mut self, thresholds: Thresholds) -> Result<Self> {
        thresholds.validate()?;
        self.thresholds = thresholds;
        Ok(self)
    }

    pub fn p_toxic(&self, text: &str) -> Result<f64> {
        self.binary.predict_proba(&self.encoder.encode(text, self.binary.max_len()))
    }

    pub fn label_probs(&self, text: &str) -> Result<[f64; NUM_LABELS]> {
        self.multilabel.predict_proba(&self.encoder.encode(text, self.multilabel.max_len()))
    }

    pub fn classify(&self, text: &str) -> Result<PipelineOutput> {
        route(self.p_toxic(text)?, self.thresholds, || self.label_probs(text))
    }
}
