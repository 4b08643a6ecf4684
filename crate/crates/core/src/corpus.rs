//! Record types shared by every stage, text normalization and wordlists.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use unicode_normalization::UnicodeNormalization;

use crate::label::Label;

/// One row of the noisy corpus: text plus the mean and spread of an
/// ensemble's offensiveness confidences. No gold label is available.
#[derive(Debug, Clone, PartialEq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
    pub avg_conf: f64,
    pub std_conf: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RecordError {
    #[error("empty id")]
    EmptyId,
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("{field} = {value} is outside [0, 1]")]
    OutOfRange { field: &'static str, value: f64 },
}

fn check_unit(field: &'static str, value: f64) -> Result<(), RecordError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(RecordError::OutOfRange { field, value })
    }
}

fn check_id_text(id: &str, text: &str) -> Result<(), RecordError> {
    if id.is_empty() {
        return Err(RecordError::EmptyId);
    }
    if text.chars().all(char::is_whitespace) {
        return Err(RecordError::EmptyText);
    }
    Ok(())
}

impl TweetRecord {
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        avg_conf: f64,
        std_conf: f64,
    ) -> Result<Self, RecordError> {
        let (id, text) = (id.into(), text.into());
        check_id_text(&id, &text)?;
        check_unit("avg_conf", avg_conf)?;
        check_unit("std_conf", std_conf)?;
        Ok(TweetRecord { id, text, avg_conf, std_conf })
    }
}

/// A labeled evaluation row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoldRecord {
    pub id: String,
    pub text: String,
    pub label: Label,
}

impl GoldRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>, label: Label) -> Result<Self, RecordError> {
        let (id, text) = (id.into(), text.into());
        check_id_text(&id, &text)?;
        Ok(GoldRecord { id, text, label })
    }
}

/// Where a training example came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// The noisy corpus, label derived from its mean confidence.
    NoisyA,
    /// The auxiliary clean corpus, in which every row is offensive.
    CleanB,
}

/// A training row. Rows from [`Source::CleanB`] are always [`Label::Off`];
/// construct them through [`LabeledExample::clean`] to keep that true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledExample {
    pub id: String,
    pub text: String,
    pub label: Label,
    pub source: Source,
}

impl LabeledExample {
    pub fn noisy(record: TweetRecord, label: Label) -> Self {
        LabeledExample { id: record.id, text: record.text, label, source: Source::NoisyA }
    }

    pub fn clean(record: TweetRecord) -> Self {
        LabeledExample { id: record.id, text: record.text, label: Label::Off, source: Source::CleanB }
    }
}

/// Canonical text form used for matching and featurization.
///
/// Applies NFC composition, lowercasing (full Unicode mappings), NFC again so
/// that lowercase expansions recompose, then collapses whitespace runs to a
/// single ASCII space and trims both ends. The function is idempotent.
pub fn normalize_text(text: &str) -> String {
    let folded: String = text.nfc().flat_map(char::to_lowercase).nfc().collect();
    let mut out = String::with_capacity(folded.len());
    for word in folded.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}

/// Splits already-normalized text into word tokens: maximal runs of
/// alphanumerics, `_` and apostrophes. Punctuation and `@`/`#` are separators.
pub fn tokens(normalized: &str) -> impl Iterator<Item = &str> {
    normalized
        .split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\'' || c == '\u{2019}'))
        .filter(|t| !t.is_empty())
}

/// A set of normalized offensive terms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Wordlist {
    terms: BTreeSet<String>,
    source_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("wordlist line {line}: term {raw:?} is empty after normalization")]
pub struct WordlistError {
    pub line: usize,
    pub raw: String,
}

impl Wordlist {
    /// Parses the one-term-per-line format. Empty lines and lines starting
    /// with `#` are skipped; every other line must normalize to a non-empty
    /// term, so a line holding only spaces is an error.
    pub fn parse(source_path: impl Into<String>, contents: &str) -> Result<Self, WordlistError> {
        let mut terms = BTreeSet::new();
        for (idx, line) in contents.lines().enumerate() {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let term = normalize_text(line);
            if term.is_empty() {
                return Err(WordlistError { line: idx + 1, raw: line.into() });
            }
            terms.insert(term);
        }
        Ok(Wordlist { terms, source_path: source_path.into() })
    }

    pub fn from_terms<I, S>(terms: I) -> Result<Self, WordlistError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = BTreeSet::new();
        for (idx, raw) in terms.into_iter().enumerate() {
            let term = normalize_text(raw.as_ref());
            if term.is_empty() {
                return Err(WordlistError { line: idx + 1, raw: raw.as_ref().into() });
            }
            set.insert(term);
        }
        Ok(Wordlist { terms: set, source_path: String::new() })
    }

    pub fn terms(&self) -> impl Iterator<Item = &str> {
        self.terms.iter().map(String::as_str)
    }

    pub fn contains(&self, term: &str) -> bool {
        self.terms.contains(term)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn source_path(&self) -> &str {
        &self.source_path
    }

    pub(crate) fn to_vec(&self) -> Vec<String> {
        self.terms.iter().cloned().collect()
    }
}
