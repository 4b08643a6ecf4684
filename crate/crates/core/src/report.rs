//! False-positive bucketing and the plain-text evaluation report.
//!
//! The buckets are a heuristic stand-in for a manual error taxonomy. Each
//! false positive is assigned by a fixed cascade, and a later stage only
//! sees tweets that no earlier stage claimed:
//!
//! 1. rhetorical: a question marker occurs anywhere in the text;
//! 2. swear: a swear indicator occurs as a whole token;
//! 3. humor: a humor marker occurs (whole token for alphanumeric markers,
//!    substring for emoticons);
//! 4. rare word: the wordlist override flipped this prediction;
//! 5. everything else is unbucketed. Doubtful gold labels need a human and
//!    end up here.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::{self, Write};

use crate::classifier::Prediction;
use crate::corpus::{normalize_text, tokens, GoldRecord};
use crate::label::Label;
use crate::metrics::{align, class_table, AlignmentError, ClassMetrics, ConfusionMatrix};
use crate::postprocess::{trigger_count, OverrideLogEntry};
use crate::sampler::SampleSummary;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ErrorBucket {
    Rhetorical,
    Swear,
    Humor,
    RareWord,
    Unbucketed,
}

impl ErrorBucket {
    pub const ALL: [ErrorBucket; 5] =
        [ErrorBucket::Rhetorical, ErrorBucket::Swear, ErrorBucket::Humor, ErrorBucket::RareWord, ErrorBucket::Unbucketed];

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorBucket::Rhetorical => "RHETORICAL",
            ErrorBucket::Swear => "SWEAR",
            ErrorBucket::Humor => "HUMOR",
            ErrorBucket::RareWord => "RARE_WORD",
            ErrorBucket::Unbucketed => "UNBUCKETED",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.as_str() == s)
    }
}

impl fmt::Display for ErrorBucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BucketConfig {
    question_markers: Vec<String>,
    swear_indicators: Vec<String>,
    humor_markers: Vec<String>,
    min_tokens: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BucketConfigError {
    #[error("min_tokens must be at least 1")]
    MinTokens,
    #[error("marker {0:?} is empty after normalization")]
    EmptyMarker(String),
}

const DEFAULT_SWEAR: [&str; 11] =
    ["sucks", "sick", "sex", "disgusting", "kill", "ugly", "porn", "crack", "fuck", "butt", "murder"];
const DEFAULT_HUMOR: [&str; 11] = ["lol", "lmao", "haha", ":)", ":-)", ":d", ";)", "xd", ":p", "😂", "🤣"];

impl Default for BucketConfig {
    fn default() -> Self {
        BucketConfig::new(["?"], DEFAULT_SWEAR, DEFAULT_HUMOR, 5).expect("defaults are valid")
    }
}

fn normalized_list<I, S>(items: I) -> Result<Vec<String>, BucketConfigError>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    items
        .into_iter()
        .map(|s| {
            let n = normalize_text(s.as_ref());
            if n.is_empty() {
                Err(BucketConfigError::EmptyMarker(s.as_ref().into()))
            } else {
                Ok(n)
            }
        })
        .collect()
}

impl BucketConfig {
    pub fn new<Q, S, H>(question_markers: Q, swear_indicators: S, humor_markers: H, min_tokens: usize) -> Result<Self, BucketConfigError>
    where
        Q: IntoIterator,
        Q::Item: AsRef<str>,
        S: IntoIterator,
        S::Item: AsRef<str>,
        H: IntoIterator,
        H::Item: AsRef<str>,
    {
        if min_tokens == 0 {
            return Err(BucketConfigError::MinTokens);
        }
        Ok(BucketConfig {
            question_markers: normalized_list(question_markers)?,
            swear_indicators: normalized_list(swear_indicators)?,
            humor_markers: normalized_list(humor_markers)?,
            min_tokens,
        })
    }

    pub fn question_markers(&self) -> &[String] {
        &self.question_markers
    }

    pub fn swear_indicators(&self) -> &[String] {
        &self.swear_indicators
    }

    pub fn humor_markers(&self) -> &[String] {
        &self.humor_markers
    }

    pub fn min_tokens(&self) -> usize {
        self.min_tokens
    }
}

/// Gold NOT, predicted OFF, as `(id, text)` in gold order.
pub fn false_positives(gold: &[GoldRecord], preds: &[Prediction]) -> Result<Vec<(String, String)>, AlignmentError> {
    Ok(align(gold, preds)?
        .into_iter()
        .filter(|(g, p)| g.label == Label::Not && p.label == Label::Off)
        .map(|(g, _)| (g.id.clone(), g.text.clone()))
        .collect())
}

fn is_word(marker: &str) -> bool {
    marker.chars().all(|c| c.is_alphanumeric() || c == '_' || c == '\'')
}

/// Cascade assignment for a single text.
pub fn classify_false_positive(text: &str, cfg: &BucketConfig, pp_changed: bool) -> ErrorBucket {
    let norm = normalize_text(text);
    if cfg.question_markers.iter().any(|m| norm.contains(m.as_str())) {
        return ErrorBucket::Rhetorical;
    }
    let toks: BTreeSet<&str> = tokens(&norm).collect();
    if cfg.swear_indicators.iter().any(|s| toks.contains(s.as_str())) {
        return ErrorBucket::Swear;
    }
    let humor = cfg.humor_markers.iter().any(|m| if is_word(m) { toks.contains(m.as_str()) } else { norm.contains(m.as_str()) });
    if humor {
        return ErrorBucket::Humor;
    }
    if pp_changed {
        return ErrorBucket::RareWord;
    }
    ErrorBucket::Unbucketed
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BucketAssignment {
    /// One entry per false positive, in input order.
    pub assignments: Vec<(String, ErrorBucket)>,
    pub counts: BTreeMap<ErrorBucket, usize>,
    /// False positives with fewer than `min_tokens` tokens.
    pub short_tweets: usize,
}

impl BucketAssignment {
    pub fn total(&self) -> usize {
        self.assignments.len()
    }

    pub fn count(&self, bucket: ErrorBucket) -> usize {
        self.counts.get(&bucket).copied().unwrap_or(0)
    }
}

pub fn bucket_false_positives(
    fps: &[(String, String)],
    cfg: &BucketConfig,
    override_log: &[OverrideLogEntry],
) -> BucketAssignment {
    let changed: BTreeSet<&str> = override_log.iter().filter(|e| e.changed).map(|e| e.id.as_str()).collect();
    let mut out = BucketAssignment::default();
    for b in ErrorBucket::ALL {
        out.counts.insert(b, 0);
    }
    for (id, text) in fps {
        let bucket = classify_false_positive(text, cfg, changed.contains(id.as_str()));
        *out.counts.entry(bucket).or_default() += 1;
        if tokens(&normalize_text(text)).count() < cfg.min_tokens {
            out.short_tweets += 1;
        }
        out.assignments.push((id.clone(), bucket));
    }
    out
}

/// Everything the text report draws on. Sampling and bucketing are optional
/// because evaluation can run on predictions made elsewhere.
#[derive(Debug, Clone, Copy)]
pub struct ReportInput<'a> {
    pub summary: Option<&'a SampleSummary>,
    pub confusion: &'a ConfusionMatrix,
    pub metrics: &'a ClassMetrics,
    pub buckets: Option<&'a BucketAssignment>,
    pub override_log: &'a [OverrideLogEntry],
    pub min_tokens: usize,
}

fn percent(part: usize, total: usize) -> f64 {
    100.0 * part as f64 / total as f64
}

pub fn render_report(input: &ReportInput<'_>) -> String {
    let mut out = String::new();
    let cm = input.confusion;

    if let Some(s) = input.summary {
        let _ = writeln!(out, "== Sampling ==");
        for (k, v) in s.fields() {
            let _ = writeln!(out, "{k}: {v}");
        }
        let _ = writeln!(out);
    }

    let _ = writeln!(out, "== Evaluation ==");
    out.push_str(&class_table(input.metrics));
    let _ = writeln!(out);
    let _ = writeln!(out, "confusion matrix (rows: gold, columns: predicted)");
    out.push_str(&crate::metrics::render_columns(
        &["", "OFF", "NOT"],
        &[
            alloc::vec!["OFF".into(), format!("{}", cm.get(Label::Off, Label::Off)), format!("{}", cm.get(Label::Off, Label::Not))],
            alloc::vec!["NOT".into(), format!("{}", cm.get(Label::Not, Label::Off)), format!("{}", cm.get(Label::Not, Label::Not))],
        ],
    ));
    let fneg = cm.false_negatives(Label::Off);
    if fneg == 0 && cm.true_positives(Label::Off) > 0 {
        let _ = writeln!(out, "zero false negatives: recall_OFF = {:.1}", input.metrics.off.recall);
    } else {
        let _ = writeln!(out, "false negatives: {fneg}; recall_OFF = {:.4}", input.metrics.off.recall);
    }
    let _ = writeln!(out, "macro-F1: {:.4}", input.metrics.macro_avg.f1);
    let _ = writeln!(out);

    let _ = writeln!(out, "== Post-processing ==");
    let _ = writeln!(out, "matched predictions: {}", input.override_log.len());
    let _ = writeln!(out, "triggers (NOT -> OFF): {}", trigger_count(input.override_log));
    let _ = writeln!(out);

    let _ = writeln!(out, "== False positives ==");
    let fp_total = cm.false_positives(Label::Off) as usize;
    match input.buckets {
        _ if fp_total == 0 => {
            let _ = writeln!(out, "no false positives");
        }
        None => {
            let _ = writeln!(out, "false positives: {fp_total} (not bucketed)");
        }
        Some(b) => {
            let _ = writeln!(out, "false positives: {}", b.total());
            let rows: Vec<Vec<String>> = ErrorBucket::ALL
                .iter()
                .map(|&k| alloc::vec![k.as_str().into(), format!("{}", b.count(k)), format!("{:.1}%", percent(b.count(k), b.total()))])
                .collect();
            out.push_str(&crate::metrics::render_columns(&["bucket", "count", "share"], &rows));
            let _ = writeln!(out, "short tweets (< {} tokens): {}", input.min_tokens, b.short_tweets);
        }
    }
    out
}
