use std::collections::HashSet;
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;

use crate::error::{Error, Result};

/// Codepoint ranges treated as emoticons/pictographs by default (inclusive).
pub const DEFAULT_EMOTICON_RANGES: &[(u32, u32)] = &[
    (0x1F300, 0x1F5FF), // symbols & pictographs
    (0x1F600, 0x1F64F), // emoticons
    (0x1F680, 0x1F6FF), // transport & map
    (0x1F900, 0x1F9FF), // supplemental symbols & pictographs
    (0x1FA70, 0x1FAFF),
    (0x2600, 0x26FF), // misc symbols
    (0x2700, 0x27BF), // dingbats
    (0x1F1E6, 0x1F1FF), // regional indicators
    (0xFE0F, 0xFE0F),   // variation selector-16
    (0x200D, 0x200D),   // zero width joiner
];

#[derive(Debug, Clone)]
pub struct PreprocessConfig {
    pub remove_urls: bool,
    pub remove_emoticons: bool,
    pub remove_punctuation: bool,
    pub emoticon_ranges: Vec<(u32, u32)>,
    pub stop_words: HashSet<String>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            remove_urls: true,
            remove_emoticons: true,
            remove_punctuation: true,
            emoticon_ranges: DEFAULT_EMOTICON_RANGES.to_vec(),
            stop_words: HashSet::new(),
        }
    }
}

impl PreprocessConfig {
    pub fn with_stop_words<I, S>(mut self, words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        self.stop_words = words.into_iter().map(Into::into).collect();
        self
    }

    fn is_emoticon(&self, c: char) -> bool {
        let cp = c as u32;
        self.emoticon_ranges.iter().any(|&(lo, hi)| lo <= cp && cp <= hi)
    }
}

/// Reads a stop-word file: UTF-8, one token per line, blank lines ignored.
pub fn load_stop_words(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| {
        Error::Config(format!("cannot read stop-word file {}: {e}", path.display()))
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn url_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)(?:[a-z][a-z0-9+.\-]*://|www\.)\S*").expect("valid regex"))
}

fn punctuation_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\p{P}").expect("valid regex"))
}

/// Cleans one raw comment: URLs, emoticon codepoints, punctuation and stop
/// words are removed and whitespace is collapsed to single spaces.
///
/// Removed characters are replaced by a space, so `"a,b"` becomes `"a b"`.
/// The function is idempotent.
pub fn preprocess(text: &str, config: &PreprocessConfig) -> String {
    let mut s = std::borrow::Cow::Borrowed(text);
    if config.remove_urls {
        s = std::borrow::Cow::Owned(url_pattern().replace_all(&s, " ").into_owned());
    }
    if config.remove_emoticons {
        s = std::borrow::Cow::Owned(
            s.chars()
                .map(|c| if config.is_emoticon(c) { ' ' } else { c })
                .collect(),
        );
    }
    if config.remove_punctuation {
        s = std::borrow::Cow::Owned(punctuation_pattern().replace_all(&s, " ").into_owned());
    }
    s.split_whitespace()
        .filter(|tok| !config.stop_words.contains(*tok))
        .collect::<Vec<_>>()
        .join(" ")
}
