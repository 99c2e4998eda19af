//! Run configuration: one TOML file (dotted keys allowed), preset defaults
//! underneath, `--set key=value` overrides on top.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::corpus::{
    load_stop_words, DatasetFormat, FileKind, Label, LabelColumns, PreprocessConfig, SplitSpec, NUM_LABELS,
};
use crate::error::{Error, Result};
use crate::explain::{ExplainConfig, DEFAULT_K_BINARY, DEFAULT_K_MULTILABEL, DEFAULT_KERNEL_WIDTH, DEFAULT_RIDGE, DEFAULT_SAMPLES};
use crate::models::{BinaryModelConfig, MultiLabelModelConfig, Thresholds, TrainingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Architecture sizes as published.
    Full,
    /// Small dimensions that train in seconds on a laptop.
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetKind {
    Csv,
    Tsv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    pub kind: DatasetKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id_column: Option<String>,
    pub text_column: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub toxic_column: Option<String>,
    /// Six column names in label order; empty for an unlabeled file.
    pub label_columns: Vec<String>,
}

impl Default for DatasetSection {
    fn default() -> Self {
        DatasetSection {
            path: None,
            kind: DatasetKind::Csv,
            id_column: None,
            text_column: "text".into(),
            toxic_column: None,
            label_columns: Label::ALL.iter().map(|l| l.name().to_string()).collect(),
        }
    }
}

impl DatasetSection {
    pub fn format(&self) -> Result<DatasetFormat> {
        let kind = match self.kind {
            DatasetKind::Csv => FileKind::Delimited { delimiter: ',' },
            DatasetKind::Tsv => FileKind::Delimited { delimiter: '\t' },
            DatasetKind::Jsonl => FileKind::JsonLines,
        };
        let labels = match self.label_columns.len() {
            0 => None,
            NUM_LABELS => Some(std::array::from_fn(|i| self.label_columns[i].clone())),
            n => return Err(Error::Config(format!("dataset.label_columns needs 0 or {NUM_LABELS} names, got {n}"))),
        };
        Ok(DatasetFormat {
            kind,
            id_column: self.id_column.clone(),
            text_column: self.text_column.clone(),
            columns: LabelColumns { toxic: self.toxic_column.clone(), labels },
        })
    }

    pub fn require_path(&self) -> Result<&Path> {
        self.path.as_deref().ok_or_else(|| Error::Config("dataset.path is not set".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stop_words: Option<PathBuf>,
    pub remove_urls: bool,
    pub remove_emoticons: bool,
    pub remove_punctuation: bool,
}

impl Default for PreprocessSection {
    fn default() -> Self {
        PreprocessSection { stop_words: None, remove_urls: true, remove_emoticons: true, remove_punctuation: true }
    }
}

impl PreprocessSection {
    pub fn build(&self) -> Result<PreprocessConfig> {
        let mut cfg = PreprocessConfig {
            remove_urls: self.remove_urls,
            remove_emoticons: self.remove_emoticons,
            remove_punctuation: self.remove_punctuation,
            ..PreprocessConfig::default()
        };
        if let Some(p) = &self.stop_words {
            cfg.stop_words = load_stop_words(p)?;
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VocabSection {
    pub max_size: usize,
    pub min_freq: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    pub train_fraction: f64,
    pub val_fraction_of_rest: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingKind {
    Random,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmbeddingSection {
    pub source: EmbeddingKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSection {
    pub batch_size: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    /// Epochs without validation improvement before stopping; 0 disables.
    pub patience: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplainSection {
    pub n_samples: usize,
    pub k_binary: usize,
    pub k_multilabel: usize,
    pub kernel_width: f64,
    pub ridge: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: Preset,
    /// Master seed; split, initialisation, shuffling and explanation seeds derive from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub dataset: DatasetSection,
    pub preprocess: PreprocessSection,
    pub vocab: VocabSection,
    pub split: SplitSection,
    pub embedding: EmbeddingSection,
    pub binary: BinaryModelConfig,
    pub multilabel: MultiLabelModelConfig,
    pub training: TrainingSection,
    pub thresholds: Thresholds,
    pub explain: ExplainSection,
}

impl RunConfig {
    pub fn preset(preset: Preset) -> Self {
        let (binary, multilabel) = match preset {
            Preset::Full => (BinaryModelConfig::full(), MultiLabelModelConfig::full()),
            Preset::Desk => (BinaryModelConfig::desk(), MultiLabelModelConfig::desk()),
        };
        let t = TrainingConfig::default();
        RunConfig {
            preset,
            seed: 42,
            output_dir: PathBuf::from("out"),
            dataset: DatasetSection::default(),
            preprocess: PreprocessSection::default(),
            vocab: VocabSection { max_size: 50_000, min_freq: 1 },
            split: SplitSection { train_fraction: 0.6, val_fraction_of_rest: 0.6 },
            embedding: EmbeddingSection { source: EmbeddingKind::Random, path: None },
            binary,
            multilabel,
            training: TrainingSection {
                batch_size: t.batch_size,
                learning_rate: t.learning_rate,
                epochs: t.epochs,
                l2: t.l2,
                patience: t.patience.unwrap_or(0),
            },
            thresholds: Thresholds::default(),
            explain: ExplainSection {
                n_samples: DEFAULT_SAMPLES,
                k_binary: DEFAULT_K_BINARY,
                k_multilabel: DEFAULT_K_MULTILABEL,
                kernel_width: DEFAULT_KERNEL_WIDTH,
                ridge: DEFAULT_RIDGE,
            },
        }
    }

    /// Loads `path` (if any), applies `overrides` (`key=value`, dotted keys),
    /// fills unspecified keys from the selected preset and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut user = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| Error::Config(format!("cannot read config {}: {e}", p.display())))?;
                text.parse::<Table>().map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => Table::new(),
        };
        for o in overrides {
            apply_override(&mut user, o)?;
        }
        for key in ["binary.init_seed", "multilabel.init_seed", "split.seed", "training.seed"] {
            if lookup(&user, key).is_some() {
                return Err(Error::Config(format!("{key} is derived from the top-level seed and cannot be set")));
            }
        }
        let preset: Preset = match user.get("preset") {
            Some(v) => v.clone().try_into().map_err(|e| Error::Config(format!("preset: {e}")))?,
            None => Preset::Full,
        };
        let mut merged = Table::try_from(Self::preset(preset)).map_err(|e| Error::Config(format!("defaults: {e}")))?;
        merge(&mut merged, user);
        let mut cfg: RunConfig = Value::Table(merged).try_into().map_err(|e| Error::Config(e.to_string()))?;
        cfg.binary.init_seed = cfg.seed;
        cfg.multilabel.init_seed = cfg.seed.wrapping_add(1);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset.format()?;
        self.binary.validate()?;
        self.multilabel.validate()?;
        self.training_config().validate()?;
        self.split_spec().fractions()?;
        self.thresholds.validate()?;
        if self.embedding.source == EmbeddingKind::File && self.embedding.path.is_none() {
            return Err(Error::Config("embedding.source = \"file\" needs embedding.path".into()));
        }
        if self.vocab.max_size < 2 || self.vocab.min_freq == 0 {
            return Err(Error::Config("vocab.max_size must be >= 2 and vocab.min_freq >= 1".into()));
        }
        if self.explain.n_samples == 0 || !(self.explain.kernel_width > 0.0) {
            return Err(Error::Config("explain.n_samples and explain.kernel_width must be positive".into()));
        }
        for (key, p) in [
            ("dataset.path", self.dataset.path.as_ref()),
            ("preprocess.stop_words", self.preprocess.stop_words.as_ref()),
            ("embedding.path", self.embedding.path.as_ref()),
        ] {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!("{key}: {} does not exist", p.display())));
                }
            }
        }
        Ok(())
    }

    pub fn training_config(&self) -> TrainingConfig {
        let t = &self.training;
        TrainingConfig {
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            epochs: t.epochs,
            seed: self.seed.wrapping_add(2),
            l2: t.l2,
            patience: (t.patience > 0).then_some(t.patience),
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            train_fraction: self.split.train_fraction,
            val_fraction_of_rest: self.split.val_fraction_of_rest,
            seed: self.seed,
        }
    }

    pub fn explain_config(&self, k: usize) -> ExplainConfig {
        ExplainConfig {
            n_samples: self.explain.n_samples,
            k,
            seed: self.seed,
            kernel_width: self.explain.kernel_width,
            ridge: self.explain.ridge,
        }
    }

    pub fn embedding_seed(&self) -> u64 {
        self.seed.wrapping_add(3)
    }
}

fn lookup<'a>(table: &'a Table, dotted: &str) -> Option<&'a Value> {
    let mut parts = dotted.split('.');
    let mut cur = table.get(parts.next()?)?;
    for p in parts {
        cur = cur.as_table()?.get(p)?;
    }
    Some(cur)
}

/// Parses `key=value`. The value is read as a TOML literal when possible
/// and as a bare string otherwise.
pub fn apply_override(table: &mut Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("bad override key {key:?}")));
    }
    let raw = raw.trim();
    let value = format!("v = {raw}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override {key:?}: {p} is not a table")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

fn merge(base: &mut Table, over: Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(Value::Table(b)), Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
