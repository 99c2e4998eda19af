use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Frequency-ranked whitespace vocabulary with reserved PAD and UNK ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// A vocabulary holding only the reserved entries.
    pub fn reserved_only() -> Self {
        Self::from_tokens(Vec::<String>::new()).expect("reserved tokens are distinct")
    }

    /// Builds a vocabulary from non-reserved tokens in id order (ids start at 2).
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut id_to_token = vec![PAD_TOKEN.to_owned(), UNK_TOKEN.to_owned()];
        id_to_token.extend(tokens.into_iter().map(Into::into));
        let mut token_to_id = HashMap::with_capacity(id_to_token.len());
        for (id, tok) in id_to_token.iter().enumerate() {
            if tok.is_empty() || tok.chars().any(char::is_whitespace) {
                return Err(Error::Data(format!("invalid vocabulary token {tok:?} at id {id}")));
            }
            if token_to_id.insert(tok.clone(), id).is_some() {
                return Err(Error::Data(format!("duplicate vocabulary token {tok:?}")));
            }
        }
        Ok(Vocabulary { token_to_id, id_to_token })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.token_to_id.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.id_to_token.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.id_to_token
    }

    /// Hex SHA-256 over the id-ordered token list; stored in checkpoints.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for tok in &self.id_to_token {
            h.update(tok.as_bytes());
            h.update(b"\n");
        }
        hex::encode(h.finalize())
    }

    /// Writes one token per line in id order, reserved entries included.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        for tok in &self.id_to_token {
            writeln!(f, "{tok}").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut lines = text.lines();
        if lines.next() != Some(PAD_TOKEN) || lines.next() != Some(UNK_TOKEN) {
            return Err(Error::Data(format!(
                "{}: vocabulary must start with {PAD_TOKEN} and {UNK_TOKEN}",
                path.display()
            )));
        }
        Self::from_tokens(lines)
    }
}

/// Counts whitespace tokens and keeps the most frequent ones.
///
/// Ranking is by frequency descending, ties broken lexicographically. Tokens
/// seen fewer than `min_freq` times are dropped and the result holds at most
/// `max_size` entries including PAD and UNK.
pub fn build_vocab<S: AsRef<str>>(corpus: &[S], max_size: usize, min_freq: usize) -> Result<Vocabulary> {
    if max_size < 2 {
        return Err(Error::Config(format!("vocabulary max_size must be >= 2, got {max_size}")));
    }
    if min_freq == 0 {
        return Err(Error::Config("vocabulary min_freq must be >= 1".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Data("cannot build a vocabulary from an empty corpus".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for text in corpus {
        for tok in text.as_ref().split_whitespace() {
            *counts.entry(tok).or_default() += 1;
        }
    }
    let mut ranked: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(tok, n)| n >= min_freq && tok != PAD_TOKEN && tok != UNK_TOKEN)
        .collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    ranked.truncate(max_size - 2);
    Vocabulary::from_tokens(ranked.into_iter().map(|(t, _)| t))
}
