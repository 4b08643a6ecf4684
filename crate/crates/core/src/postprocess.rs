//! Wordlist override: any prediction whose normalized text contains a
//! wordlist term as a substring becomes OFF.
//!
//! Matching is plain substring containment on normalized text, with no word
//! boundaries, so `dong` fires inside `dongle`. All terms are searched in one
//! pass with an Aho-Corasick automaton. When several terms occur, the longest
//! wins, and among equally long terms the lexicographically smallest.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use aho_corasick::{AhoCorasick, MatchKind};

use crate::corpus::{normalize_text, Wordlist};
use crate::classifier::Prediction;
use crate::label::Label;

/// A wordlist compiled for matching. Immutable after construction.
#[derive(Debug, Clone)]
pub struct WordlistMatcher {
    // Patterns sorted by (length desc, bytes asc): pattern id is the rank.
    terms: Vec<String>,
    automaton: Option<AhoCorasick>,
}

impl WordlistMatcher {
    pub fn new(wordlist: &Wordlist) -> Self {
        let mut terms = wordlist.to_vec();
        terms.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
        let automaton = if terms.is_empty() {
            None
        } else {
            Some(
                AhoCorasick::builder()
                    .match_kind(MatchKind::Standard)
                    .build(&terms)
                    .expect("wordlist automaton within default size limits"),
            )
        };
        WordlistMatcher { terms, automaton }
    }

    /// Matches text that is already normalized.
    pub fn find_normalized(&self, normalized: &str) -> Option<&str> {
        let ac = self.automaton.as_ref()?;
        let best = ac.find_overlapping_iter(normalized).map(|m| m.pattern().as_usize()).min()?;
        Some(&self.terms[best])
    }

    /// Normalizes `text` and returns the selected matching term, if any.
    pub fn find(&self, text: &str) -> Option<&str> {
        self.automaton.as_ref()?;
        self.find_normalized(&normalize_text(text))
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }
}

/// One-off convenience that compiles the wordlist on every call. Use a
/// [`WordlistMatcher`] for batches.
pub fn matches_wordlist(text: &str, wordlist: &Wordlist) -> Option<String> {
    WordlistMatcher::new(wordlist).find(text).map(String::from)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverrideLogEntry {
    pub id: String,
    pub matched_term: String,
    pub prior_label: Label,
    /// True iff the label went from NOT to OFF.
    pub changed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("no text for prediction id {0:?}")]
pub struct MissingText(pub String);

/// Applies the override to every prediction, in order.
///
/// A matching prediction is set to OFF with `overridden` and
/// `override_term` filled in and gets a log entry; `changed` records whether
/// its label was NOT before. Non-matching predictions pass through untouched.
pub fn apply_postprocess(
    predictions: Vec<Prediction>,
    texts: &BTreeMap<String, String>,
    matcher: &WordlistMatcher,
) -> Result<(Vec<Prediction>, Vec<OverrideLogEntry>), MissingText> {
    let mut log = Vec::new();
    let mut out = Vec::with_capacity(predictions.len());
    for mut pred in predictions {
        let text = texts.get(&pred.id).ok_or_else(|| MissingText(pred.id.clone()))?;
        if let Some(term) = matcher.find(text) {
            let prior = pred.label;
            pred.label = Label::Off;
            pred.overridden = true;
            pred.override_term = Some(term.into());
            log.push(OverrideLogEntry {
                id: pred.id.clone(),
                matched_term: term.into(),
                prior_label: prior,
                changed: prior == Label::Not,
            });
        }
        out.push(pred);
    }
    Ok((out, log))
}

/// Number of predictions the override actually flipped.
pub fn trigger_count(log: &[OverrideLogEntry]) -> usize {
    log.iter().filter(|e| e.changed).count()
}
