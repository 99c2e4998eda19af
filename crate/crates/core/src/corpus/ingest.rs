use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Document, LabelVector, NUM_LABELS};
use crate::error::{Error, Result, RowIssue};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FileKind {
    /// Delimited text with a header row.
    Delimited { delimiter: char },
    JsonLines,
}

/// Where the toxic flag and the six label columns live.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelColumns {
    pub toxic: Option<String>,
    /// Column names in label order (vulgar, hate, religious, threat, troll, insult).
    pub labels: Option<[String; NUM_LABELS]>,
}

/// Column map for a dataset file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFormat {
    pub kind: FileKind,
    pub id_column: Option<String>,
    pub text_column: String,
    pub columns: LabelColumns,
}

impl Default for DatasetFormat {
    /// Comma-separated file with `text` plus one 0/1 column per label name.
    fn default() -> Self {
        DatasetFormat {
            kind: FileKind::Delimited { delimiter: ',' },
            id_column: None,
            text_column: "text".into(),
            columns: LabelColumns {
                toxic: None,
                labels: Some(super::Label::ALL.map(|l| l.name().to_owned())),
            },
        }
    }
}

impl DatasetFormat {
    pub fn unlabeled(self) -> Self {
        DatasetFormat { columns: LabelColumns::default(), ..self }
    }
}

fn parse_flag(raw: &str) -> std::result::Result<bool, String> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "1.0" | "true" | "yes" => Ok(true),
        "0" | "0.0" | "false" | "no" => Ok(false),
        other => Err(format!("expected 0/1, got {other:?}")),
    }
}

fn json_flag(v: &serde_json::Value) -> std::result::Result<bool, String> {
    match v {
        serde_json::Value::Bool(b) => Ok(*b),
        serde_json::Value::Number(n) => match n.as_f64() {
            Some(x) if x == 0.0 => Ok(false),
            Some(x) if x == 1.0 => Ok(true),
            _ => Err(format!("expected 0/1, got {n}")),
        },
        serde_json::Value::String(s) => parse_flag(s),
        other => Err(format!("expected 0/1, got {other}")),
    }
}

/// Accessor abstracting over a CSV record and a JSON object.
trait Row {
    fn field(&self, name: &str) -> Option<std::result::Result<String, String>>;
    fn flag(&self, name: &str) -> Option<std::result::Result<bool, String>>;
}

struct CsvRow<'a> {
    headers: &'a csv::StringRecord,
    record: &'a csv::StringRecord,
}

impl Row for CsvRow<'_> {
    fn field(&self, name: &str) -> Option<std::result::Result<String, String>> {
        let idx = self.headers.iter().position(|h| h == name)?;
        Some(
            self.record
                .get(idx)
                .map(str::to_owned)
                .ok_or_else(|| format!("missing field {name:?}")),
        )
    }

    fn flag(&self, name: &str) -> Option<std::result::Result<bool, String>> {
        self.field(name).map(|r| r.and_then(|s| parse_flag(&s)))
    }
}

impl Row for serde_json::Map<String, serde_json::Value> {
    fn field(&self, name: &str) -> Option<std::result::Result<String, String>> {
        Some(match self.get(name) {
            Some(serde_json::Value::String(s)) => Ok(s.clone()),
            Some(serde_json::Value::Number(n)) => Ok(n.to_string()),
            Some(other) => Err(format!("field {name:?} is not a string: {other}")),
            None => Err(format!("missing field {name:?}")),
        })
    }

    fn flag(&self, name: &str) -> Option<std::result::Result<bool, String>> {
        Some(match self.get(name) {
            Some(v) => json_flag(v),
            None => Err(format!("missing field {name:?}")),
        })
    }
}

enum RowOutcome {
    Ok(Document),
    Malformed(String),
    Invalid(String),
}

fn read_row(row: &dyn Row, index: usize, format: &DatasetFormat) -> RowOutcome {
    let missing = |name: &str| format!("missing column {name:?}");
    let text = match row.field(&format.text_column) {
        Some(Ok(t)) => t,
        Some(Err(e)) => return RowOutcome::Malformed(e),
        None => return RowOutcome::Malformed(missing(&format.text_column)),
    };
    let id = match &format.id_column {
        Some(col) => match row.field(col) {
            Some(Ok(id)) => id,
            Some(Err(e)) => return RowOutcome::Malformed(e),
            None => return RowOutcome::Malformed(missing(col)),
        },
        None => index.to_string(),
    };
    let toxic = match &format.columns.toxic {
        Some(col) => match row.flag(col) {
            Some(Ok(b)) => Some(b),
            Some(Err(e)) => return RowOutcome::Malformed(format!("{col}: {e}")),
            None => return RowOutcome::Malformed(missing(col)),
        },
        None => None,
    };
    let labels = match &format.columns.labels {
        Some(cols) => {
            let mut v: LabelVector = [false; NUM_LABELS];
            for (slot, col) in v.iter_mut().zip(cols) {
                match row.flag(col) {
                    Some(Ok(b)) => *slot = b,
                    Some(Err(e)) => return RowOutcome::Malformed(format!("{col}: {e}")),
                    None => return RowOutcome::Malformed(missing(col)),
                }
            }
            Some(v)
        }
        None => None,
    };
    let toxic = toxic.or_else(|| labels.map(|l| l.iter().any(|&b| b)));
    let doc = Document { id, text, toxic, labels };
    match doc.validate() {
        Ok(()) => RowOutcome::Ok(doc),
        Err(e) => RowOutcome::Invalid(e),
    }
}

/// Loads every row of a dataset file as a validated [`Document`].
///
/// Row numbers in errors are 1-based over data rows (the header is not counted).
/// Malformed rows produce [`Error::Ingest`]; rows that parse but break the
/// toxic/label invariant produce [`Error::Validation`].
pub fn ingest(path: impl AsRef<Path>, format: &DatasetFormat) -> Result<Vec<Document>> {
    let path = path.as_ref();
    let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    ingest_reader(f, format)
}

pub fn ingest_reader<R: Read>(reader: R, format: &DatasetFormat) -> Result<Vec<Document>> {
    let mut docs = Vec::new();
    let mut malformed = Vec::new();
    let mut invalid = Vec::new();
    let mut push = |row: usize, outcome: RowOutcome| match outcome {
        RowOutcome::Ok(d) => docs.push(d),
        RowOutcome::Malformed(reason) => malformed.push(RowIssue { row, reason }),
        RowOutcome::Invalid(reason) => invalid.push(RowIssue { row, reason }),
    };

    match &format.kind {
        FileKind::Delimited { delimiter } => {
            let delim = u8::try_from(*delimiter as u32)
                .map_err(|_| Error::Config(format!("delimiter {delimiter:?} is not a single byte")))?;
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(delim)
                .flexible(true)
                .from_reader(reader);
            let headers = rdr
                .headers()
                .map_err(|e| Error::Data(format!("cannot read header row: {e}")))?
                .clone();
            for (i, rec) in rdr.records().enumerate() {
                let row = i + 1;
                match rec {
                    Ok(record) => {
                        if record.len() != headers.len() {
                            push(
                                row,
                                RowOutcome::Malformed(format!(
                                    "expected {} fields, found {}",
                                    headers.len(),
                                    record.len()
                                )),
                            );
                            continue;
                        }
                        let r = CsvRow { headers: &headers, record: &record };
                        push(row, read_row(&r, i, format));
                    }
                    Err(e) => push(row, RowOutcome::Malformed(e.to_string())),
                }
            }
        }
        FileKind::JsonLines => {
            let mut row = 0;
            for line in BufReader::new(reader).lines() {
                let line = line.map_err(|e| Error::Data(format!("read error: {e}")))?;
                if line.trim().is_empty() {
                    continue;
                }
                row += 1;
                match serde_json::from_str::<serde_json::Value>(&line) {
                    Ok(serde_json::Value::Object(obj)) => push(row, read_row(&obj, row - 1, format)),
                    Ok(_) => push(row, RowOutcome::Malformed("line is not a JSON object".into())),
                    Err(e) => push(row, RowOutcome::Malformed(e.to_string())),
                }
            }
        }
    }

    if !malformed.is_empty() {
        return Err(Error::Ingest(malformed));
    }
    if !invalid.is_empty() {
        return Err(Error::Validation(invalid));
    }
    Ok(docs)
}
