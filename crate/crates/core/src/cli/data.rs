//! On-disk artifacts shared between commands.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::corpus::{read_id_list, Document, Label, LabelVector, TokenSequence, NUM_LABELS};
use crate::error::{Error, Result, RowIssue};
use crate::models::{Decision, Example};

pub const NON_TOXIC: &str = "Non-toxic";

/// Output-directory layout.
#[derive(Debug, Clone)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Layout { root: root.into() }
    }
    pub fn prepared(&self) -> PathBuf {
        self.root.join("prepared.jsonl")
    }
    pub fn vocab(&self) -> PathBuf {
        self.root.join("vocab.txt")
    }
    pub fn split_dir(&self) -> PathBuf {
        self.root.join("split")
    }
    pub fn fold(&self, name: &str) -> PathBuf {
        self.split_dir().join(format!("{name}.ids"))
    }
    pub fn checkpoint(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}.ckpt"))
    }
    pub fn history(&self, stage: &str) -> PathBuf {
        self.root.join(format!("{stage}_history.json"))
    }
    pub fn eval_dir(&self, name: &str) -> PathBuf {
        self.root.join("eval").join(name)
    }
}

/// One cleaned document with its full (untruncated) token ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreparedDoc {
    pub id: String,
    pub text: String,
    pub toxic: Option<bool>,
    pub labels: Option<LabelVector>,
    pub tokens: Vec<usize>,
}

impl PreparedDoc {
    pub fn document(&self) -> Document {
        Document { id: self.id.clone(), text: self.text.clone(), toxic: self.toxic, labels: self.labels }
    }

    pub fn sequence(&self, max_len: usize) -> TokenSequence {
        TokenSequence::from_ids(&self.tokens, max_len)
    }

    pub fn gold_toxic(&self) -> Result<bool> {
        self.document().is_toxic().ok_or_else(|| Error::Data(format!("document {:?} has no gold labels", self.id)))
    }

    pub fn binary_example(&self, max_len: usize) -> Result<Example> {
        Ok(Example { seq: self.sequence(max_len), target: vec![f64::from(u8::from(self.gold_toxic()?))] })
    }

    pub fn multilabel_example(&self, max_len: usize) -> Result<Example> {
        let labels = self.labels.ok_or_else(|| Error::Data(format!("document {:?} has no label vector", self.id)))?;
        Ok(Example { seq: self.sequence(max_len), target: labels.iter().map(|&b| f64::from(u8::from(b))).collect() })
    }
}

pub fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    for r in rows {
        serde_json::to_writer(&mut f, r)?;
        f.write_all(b"\n").map_err(io)?;
    }
    f.flush().map_err(io)
}

pub fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let io = |e| Error::io(path, e);
    let f = std::fs::File::open(path).map_err(io)?;
    let mut rows = Vec::new();
    let mut issues = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io)?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => rows.push(r),
            Err(e) => issues.push(RowIssue { row: i + 1, reason: e.to_string() }),
        }
    }
    if issues.is_empty() {
        Ok(rows)
    } else {
        Err(Error::Ingest(issues))
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Prepared documents of one fold, in id-file order.
pub fn fold_docs<'a>(docs: &'a [PreparedDoc], ids_path: &Path) -> Result<Vec<&'a PreparedDoc>> {
    let index: HashMap<&str, &PreparedDoc> = docs.iter().map(|d| (d.id.as_str(), d)).collect();
    read_id_list(ids_path)?
        .iter()
        .map(|id| {
            index
                .get(id.as_str())
                .copied()
                .ok_or_else(|| Error::Data(format!("{}: id {id:?} not in prepared data", ids_path.display())))
        })
        .collect()
}

/// Label names for a decision; `["Non-toxic"]` when stage 1 rejects.
pub fn decision_names(d: &Decision) -> Vec<String> {
    match d {
        Decision::NonToxic => vec![NON_TOXIC.to_string()],
        Decision::Toxic(l) => l.iter().map(|x| x.name().to_string()).collect(),
    }
}

/// Inverse of [`decision_names`]: `Non-toxic` or an empty list give no labels.
pub fn parse_names(names: &[String]) -> std::result::Result<LabelVector, String> {
    let mut v = [false; NUM_LABELS];
    for n in names {
        if n.eq_ignore_ascii_case(NON_TOXIC) || n.eq_ignore_ascii_case("non_toxic") {
            continue;
        }
        let l = Label::parse(n).ok_or_else(|| format!("unknown label {n:?}"))?;
        v[l.index()] = true;
    }
    Ok(v)
}

/// One line of `classify` output, also accepted by `evaluate --predictions`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub labels: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_toxic: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_probs: Option<[f64; NUM_LABELS]>,
    /// Gold label names; when absent, gold is looked up by id.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<Vec<String>>,
}
