//! Tab-separated file formats.
//!
//! All files are UTF-8 with a fixed header line and no quoting. Text fields
//! never contain tabs or line breaks: writers replace them with a space and
//! readers replace stray carriage returns the same way. Any malformed row is
//! an error carrying its 1-based line number.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use noisy_offense_core::classifier::Prediction;
use noisy_offense_core::corpus::{GoldRecord, LabeledExample, TweetRecord};
use noisy_offense_core::metrics::{ClassMetrics, ConfusionMatrix};
use noisy_offense_core::postprocess::OverrideLogEntry;
use noisy_offense_core::report::{BucketAssignment, ErrorBucket};
use noisy_offense_core::sampler::SampleSummary;
use noisy_offense_core::Label;

use crate::error::DataError;

pub const NOISY_HEADER: &str = "id\ttext\tavg_conf\tstd_conf";
pub const GOLD_HEADER: &str = "id\ttext\tlabel";
pub const TEXTS_HEADER: &str = "id\ttext";
pub const PREDICTIONS_HEADER: &str = "id\tlabel\tscore\toverridden\toverride_term";
pub const OVERRIDE_LOG_HEADER: &str = "id\tmatched_term\tprior_label\tchanged";
pub const BUCKETS_HEADER: &str = "id\tbucket";
pub const CONFUSION_HEADER: &str = "gold\\pred\tOFF\tNOT";

/// Replaces tabs, carriage returns and newlines with a single space each.
pub fn sanitize(text: &str) -> Cow<'_, str> {
    if text.contains(['\t', '\n', '\r']) {
        Cow::Owned(text.replace(['\t', '\n', '\r'], " "))
    } else {
        Cow::Borrowed(text)
    }
}

fn open(path: &Path) -> Result<BufReader<File>, DataError> {
    File::open(path).map(BufReader::new).map_err(|e| DataError::io(path, e))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, DataError> {
    File::create(path).map(BufWriter::new).map_err(|e| DataError::io(path, e))
}

/// Line reader that tracks line numbers and checks the header.
struct Rows<R> {
    lines: io::Lines<R>,
    path: PathBuf,
    line: usize,
}

impl<R: BufRead> Rows<R> {
    fn new(reader: R, path: &Path, accepted: &[&str]) -> Result<(Self, String), DataError> {
        let mut lines = reader.lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| DataError::io(path, e))?,
            None => String::new(),
        };
        let header = header.trim_start_matches('\u{feff}').to_string();
        if !accepted.contains(&header.as_str()) {
            return Err(DataError::Header { path: path.into(), expected: accepted.join(" | "), found: header });
        }
        Ok((Rows { lines, path: path.into(), line: 1 }, header))
    }

    fn next_row(&mut self) -> Option<Result<(usize, String), DataError>> {
        let line = self.lines.next()?;
        self.line += 1;
        Some(line.map(|l| (self.line, l)).map_err(|e| DataError::io(&self.path, e)))
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> DataError {
        DataError::row(&self.path, line, msg)
    }
}

fn split_exact(line: &str, n: usize) -> Result<Vec<&str>, String> {
    let cols: Vec<&str> = line.split('\t').collect();
    if cols.len() != n {
        return Err(format!("expected {n} columns, found {}", cols.len()));
    }
    Ok(cols)
}

fn parse_unit(field: &str, raw: &str) -> Result<f64, String> {
    let v: f64 = raw.parse().map_err(|_| format!("{field}: cannot parse {raw:?} as a real"))?;
    if !(0.0..=1.0).contains(&v) {
        return Err(format!("{field} = {raw} is outside [0, 1]"));
    }
    Ok(v)
}

fn parse_label(raw: &str) -> Result<Label, String> {
    raw.parse::<Label>().map_err(|e| e.to_string())
}

/// Streaming reader over a noisy-corpus file.
pub struct NoisyReader<R> {
    rows: Rows<R>,
}

impl<R: BufRead> NoisyReader<R> {
    pub fn new(reader: R, path: &Path) -> Result<Self, DataError> {
        Ok(NoisyReader { rows: Rows::new(reader, path, &[NOISY_HEADER])?.0 })
    }

    fn parse(&self, line: usize, raw: &str) -> Result<TweetRecord, DataError> {
        let cols = split_exact(raw, 4).map_err(|m| self.rows.err(line, m))?;
        let avg = parse_unit("avg_conf", cols[2]).map_err(|m| self.rows.err(line, m))?;
        let std = parse_unit("std_conf", cols[3]).map_err(|m| self.rows.err(line, m))?;
        TweetRecord::new(cols[0], sanitize(cols[1]), avg, std).map_err(|e| self.rows.err(line, e.to_string()))
    }
}

impl<R: BufRead> Iterator for NoisyReader<R> {
    type Item = Result<TweetRecord, DataError>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(match self.rows.next_row()? {
            Ok((line, raw)) => self.parse(line, &raw),
            Err(e) => Err(e),
        })
    }
}

/// Opens a noisy corpus (`id, text, avg_conf, std_conf`) for streaming.
pub fn load_noisy_dataset(path: &Path) -> Result<NoisyReader<BufReader<File>>, DataError> {
    NoisyReader::new(open(path)?, path)
}

pub fn read_gold<R: BufRead>(reader: R, path: &Path) -> Result<Vec<GoldRecord>, DataError> {
    let (mut rows, _) = Rows::new(reader, path, &[GOLD_HEADER])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, raw) = row?;
        let cols = split_exact(&raw, 3).map_err(|m| rows.err(line, m))?;
        let label = parse_label(cols[2]).map_err(|m| rows.err(line, m))?;
        out.push(GoldRecord::new(cols[0], sanitize(cols[1]), label).map_err(|e| rows.err(line, e.to_string()))?);
    }
    Ok(out)
}

/// Loads a labeled file (`id, text, label`, labels exactly `OFF`/`NOT`).
pub fn load_gold_dataset(path: &Path) -> Result<Vec<GoldRecord>, DataError> {
    read_gold(open(path)?, path)
}

/// Loads `(id, text)` pairs from either an `id, text` file or a labeled
/// file, ignoring labels.
pub fn load_texts(path: &Path) -> Result<Vec<(String, String)>, DataError> {
    let (mut rows, header) = Rows::new(open(path)?, path, &[TEXTS_HEADER, GOLD_HEADER])?;
    let n = header.split('\t').count();
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, raw) = row?;
        let cols = split_exact(&raw, n).map_err(|m| rows.err(line, m))?;
        if cols[0].is_empty() {
            return Err(rows.err(line, "empty id"));
        }
        out.push((cols[0].to_string(), sanitize(cols[1]).into_owned()));
    }
    Ok(out)
}

/// Text lookup by id; duplicate ids are an error.
pub fn texts_by_id(path: &Path, pairs: Vec<(String, String)>) -> Result<BTreeMap<String, String>, DataError> {
    let mut map = BTreeMap::new();
    for (id, text) in pairs {
        if map.contains_key(&id) {
            return Err(DataError::content(path, format!("duplicate id {id:?}")));
        }
        map.insert(id, text);
    }
    Ok(map)
}

pub fn write_noisy<W: Write>(mut w: W, records: &[TweetRecord]) -> io::Result<()> {
    writeln!(w, "{NOISY_HEADER}")?;
    for r in records {
        writeln!(w, "{}\t{}\t{}\t{}", sanitize(&r.id), sanitize(&r.text), r.avg_conf, r.std_conf)?;
    }
    w.flush()
}

pub fn write_gold<W: Write>(mut w: W, records: &[GoldRecord]) -> io::Result<()> {
    writeln!(w, "{GOLD_HEADER}")?;
    for r in records {
        writeln!(w, "{}\t{}\t{}", sanitize(&r.id), sanitize(&r.text), r.label)?;
    }
    w.flush()
}

/// Writes a sampled training set in the labeled format.
pub fn write_labeled<W: Write>(mut w: W, examples: &[LabeledExample]) -> io::Result<()> {
    writeln!(w, "{GOLD_HEADER}")?;
    for e in examples {
        writeln!(w, "{}\t{}\t{}", sanitize(&e.id), sanitize(&e.text), e.label)?;
    }
    w.flush()
}

pub fn write_predictions<W: Write>(mut w: W, preds: &[Prediction]) -> io::Result<()> {
    writeln!(w, "{PREDICTIONS_HEADER}")?;
    for p in preds {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}",
            sanitize(&p.id),
            p.label,
            p.score,
            p.overridden,
            p.override_term.as_deref().map(sanitize).unwrap_or_default()
        )?;
    }
    w.flush()
}

fn parse_bool(raw: &str) -> Result<bool, String> {
    match raw {
        "true" => Ok(true),
        "false" => Ok(false),
        other => Err(format!("expected true or false, found {other:?}")),
    }
}

pub fn read_predictions<R: BufRead>(reader: R, path: &Path) -> Result<Vec<Prediction>, DataError> {
    let (mut rows, _) = Rows::new(reader, path, &[PREDICTIONS_HEADER])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, raw) = row?;
        let parsed = (|| {
            let c = split_exact(&raw, 5)?;
            if c[0].is_empty() {
                return Err("empty id".to_string());
            }
            let label = parse_label(c[1])?;
            let score = parse_unit("score", c[2])?;
            let overridden = parse_bool(c[3])?;
            let term = (!c[4].is_empty()).then(|| c[4].to_string());
            if overridden && (term.is_none() || label != Label::Off) {
                return Err("overridden prediction must be OFF with a matched term".into());
            }
            Ok(Prediction { id: c[0].into(), label, score, overridden, override_term: term })
        })();
        out.push(parsed.map_err(|m| rows.err(line, m))?);
    }
    Ok(out)
}

pub fn load_predictions(path: &Path) -> Result<Vec<Prediction>, DataError> {
    read_predictions(open(path)?, path)
}

pub fn write_override_log<W: Write>(mut w: W, log: &[OverrideLogEntry]) -> io::Result<()> {
    writeln!(w, "{OVERRIDE_LOG_HEADER}")?;
    for e in log {
        writeln!(w, "{}\t{}\t{}\t{}", sanitize(&e.id), sanitize(&e.matched_term), e.prior_label, e.changed)?;
    }
    w.flush()
}

pub fn load_override_log(path: &Path) -> Result<Vec<OverrideLogEntry>, DataError> {
    let (mut rows, _) = Rows::new(open(path)?, path, &[OVERRIDE_LOG_HEADER])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, raw) = row?;
        let parsed = (|| {
            let c = split_exact(&raw, 4)?;
            let prior_label = parse_label(c[2])?;
            let changed = parse_bool(c[3])?;
            if changed != (prior_label == Label::Not) {
                return Err("changed must be true exactly when prior_label is NOT".to_string());
            }
            Ok(OverrideLogEntry { id: c[0].into(), matched_term: c[1].into(), prior_label, changed })
        })();
        out.push(parsed.map_err(|m| rows.err(line, m))?);
    }
    Ok(out)
}

pub fn write_buckets<W: Write>(mut w: W, buckets: &BucketAssignment) -> io::Result<()> {
    writeln!(w, "{BUCKETS_HEADER}")?;
    for (id, b) in &buckets.assignments {
        writeln!(w, "{}\t{}", sanitize(id), b)?;
    }
    w.flush()
}

pub fn read_buckets(path: &Path) -> Result<Vec<(String, ErrorBucket)>, DataError> {
    let (mut rows, _) = Rows::new(open(path)?, path, &[BUCKETS_HEADER])?;
    let mut out = Vec::new();
    while let Some(row) = rows.next_row() {
        let (line, raw) = row?;
        let c = split_exact(&raw, 2).map_err(|m| rows.err(line, m))?;
        let b = ErrorBucket::parse(c[1]).ok_or_else(|| rows.err(line, format!("unknown bucket {:?}", c[1])))?;
        out.push((c[0].to_string(), b));
    }
    Ok(out)
}

pub fn write_confusion<W: Write>(mut w: W, cm: &ConfusionMatrix) -> io::Result<()> {
    writeln!(w, "{CONFUSION_HEADER}")?;
    for gold in Label::ALL {
        writeln!(w, "{}\t{}\t{}", gold, cm.get(gold, Label::Off), cm.get(gold, Label::Not))?;
    }
    w.flush()
}

/// `key=value` lines in the canonical field order.
pub fn write_summary<W: Write>(mut w: W, s: &SampleSummary) -> io::Result<()> {
    for (k, v) in s.fields() {
        writeln!(w, "{k}={v}")?;
    }
    w.flush()
}

pub fn read_summary(path: &Path) -> Result<SampleSummary, DataError> {
    let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    let mut values = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let (k, v) = line.split_once('=').ok_or_else(|| DataError::row(path, i + 1, "expected key=value"))?;
        let v: u64 = v.parse().map_err(|_| DataError::row(path, i + 1, format!("{k}: not a count: {v:?}")))?;
        values.insert(k.to_string(), v);
    }
    let get = |k: &str| values.get(k).copied().ok_or_else(|| DataError::content(path, format!("missing key {k}")));
    let s = SampleSummary {
        input_count_a: get("input_count_a")?,
        selected_count: get("selected_count")?,
        aux_count_b: get("aux_count_b")?,
        removed_for_balance: get("removed_for_balance")?,
        final_count: get("final_count")?,
        final_off: get("final_off")?,
        final_not: get("final_not")?,
    };
    if !s.is_consistent() {
        return Err(DataError::content(path, "summary counts are inconsistent"));
    }
    Ok(s)
}

/// Evaluation block: `key=value` lines with metrics at full precision.
pub fn write_evaluation<W: Write>(mut w: W, cm: &ConfusionMatrix, m: &ClassMetrics) -> io::Result<()> {
    writeln!(w, "total={}", cm.total())?;
    for g in Label::ALL {
        for p in Label::ALL {
            writeln!(w, "count_{}_{}={}", g.as_str().to_lowercase(), p.as_str().to_lowercase(), cm.get(g, p))?;
        }
    }
    for (name, c) in [("off", &m.off), ("not", &m.not), ("macro", &m.macro_avg)] {
        writeln!(w, "precision_{name}={}", c.precision)?;
        writeln!(w, "recall_{name}={}", c.recall)?;
        writeln!(w, "f1_{name}={}", c.f1)?;
    }
    w.flush()
}
