//! Dataset ingestion, text cleaning, vocabulary, tokenization, statistics and
//! multi-label stratified splitting.

mod ingest;
mod preprocess;
mod split;
mod stats;
mod tokenize;
mod vocab;

pub use ingest::{ingest, ingest_reader, DatasetFormat, FileKind, LabelColumns};
pub use preprocess::{load_stop_words, preprocess, PreprocessConfig, DEFAULT_EMOTICON_RANGES};
pub use split::{
    read_id_list, split_labels, stratified_split, stratified_split_labels, write_split, Folds,
    SplitSpec,
};
pub use stats::{stats, DatasetStats};
pub use tokenize::{detokenize, tokenize, TokenSequence, DEFAULT_MAX_LEN};
pub use vocab::{build_vocab, Vocabulary, PAD, PAD_TOKEN, UNK, UNK_TOKEN};

use serde::{Deserialize, Serialize};

/// Number of toxicity labels.
pub const NUM_LABELS: usize = 6;

/// The six toxicity labels, in the order used by every vector and report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Vulgar,
    Hate,
    Religious,
    Threat,
    Troll,
    Insult,
}

impl Label {
    pub const ALL: [Label; NUM_LABELS] = [
        Label::Vulgar,
        Label::Hate,
        Label::Religious,
        Label::Threat,
        Label::Troll,
        Label::Insult,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Label> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Label::Vulgar => "vulgar",
            Label::Hate => "hate",
            Label::Religious => "religious",
            Label::Threat => "threat",
            Label::Troll => "troll",
            Label::Insult => "insult",
        }
    }

    pub fn parse(name: &str) -> Option<Label> {
        Self::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(name.trim()))
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Presence vector over [`Label::ALL`].
pub type LabelVector = [bool; NUM_LABELS];

/// One raw comment with optional gold annotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub toxic: Option<bool>,
    pub labels: Option<LabelVector>,
}

impl Document {
    pub fn unlabeled(id: impl Into<String>, text: impl Into<String>) -> Self {
        Document { id: id.into(), text: text.into(), toxic: None, labels: None }
    }

    /// Builds a labelled document, deriving the toxic flag from the label vector.
    pub fn with_labels(id: impl Into<String>, text: impl Into<String>, labels: LabelVector) -> Self {
        Document {
            id: id.into(),
            text: text.into(),
            toxic: Some(labels.iter().any(|&b| b)),
            labels: Some(labels),
        }
    }

    /// Checks the toxic/label consistency invariant.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if let (Some(toxic), Some(labels)) = (self.toxic, self.labels) {
            if !toxic && labels.iter().any(|&b| b) {
                return Err("toxic is false but at least one label is set".into());
            }
        }
        Ok(())
    }

    /// Gold toxic flag, falling back to the label vector.
    pub fn is_toxic(&self) -> Option<bool> {
        self.toxic.or_else(|| self.labels.map(|l| l.iter().any(|&b| b)))
    }

    pub fn label_set(&self) -> Vec<Label> {
        self.labels
            .map(|l| Label::ALL.into_iter().filter(|x| l[x.index()]).collect())
            .unwrap_or_default()
    }
}
