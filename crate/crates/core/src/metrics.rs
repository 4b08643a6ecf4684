//! Confusion matrix, per-class precision/recall/F1, macro averages and the
//! benchmark table renderer.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::classifier::Prediction;
use crate::corpus::GoldRecord;
use crate::label::Label;

/// 2×2 counts indexed `[gold][predicted]`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, gold: Label, predicted: Label) {
        self.counts[gold.index()][predicted.index()] += 1;
    }

    pub fn set(&mut self, gold: Label, predicted: Label, count: u64) {
        self.counts[gold.index()][predicted.index()] = count;
    }

    pub fn get(&self, gold: Label, predicted: Label) -> u64 {
        self.counts[gold.index()][predicted.index()]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn true_positives(&self, class: Label) -> u64 {
        self.get(class, class)
    }

    /// Predicted `class` but gold is the other class.
    pub fn false_positives(&self, class: Label) -> u64 {
        self.get(class.swapped(), class)
    }

    /// Gold `class` but predicted the other class.
    pub fn false_negatives(&self, class: Label) -> u64 {
        self.get(class, class.swapped())
    }

    /// The matrix obtained by renaming OFF to NOT and back.
    pub fn class_swapped(&self) -> Self {
        let mut out = Self::new();
        for g in Label::ALL {
            for p in Label::ALL {
                out.set(g.swapped(), p.swapped(), self.get(g, p));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, thiserror::Error)]
#[error("prediction ids do not match gold ids (missing: {missing:?}, extra: {extra:?}, duplicated: {duplicated:?})")]
pub struct AlignmentError {
    /// Gold ids with no prediction.
    pub missing: Vec<String>,
    /// Prediction ids absent from gold.
    pub extra: Vec<String>,
    /// Ids appearing more than once on either side.
    pub duplicated: Vec<String>,
}

/// Pairs each gold record with its prediction, in gold order. The id sets
/// must be equal and free of duplicates.
pub fn align<'a>(
    gold: &'a [GoldRecord],
    preds: &'a [Prediction],
) -> Result<Vec<(&'a GoldRecord, &'a Prediction)>, AlignmentError> {
    let mut err = AlignmentError::default();
    let mut by_id: BTreeMap<&str, &Prediction> = BTreeMap::new();
    for p in preds {
        if by_id.insert(p.id.as_str(), p).is_some() {
            err.duplicated.push(p.id.clone());
        }
    }
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    let mut pairs = Vec::with_capacity(gold.len());
    for g in gold {
        if seen.insert(g.id.as_str(), ()).is_some() {
            err.duplicated.push(g.id.clone());
            continue;
        }
        match by_id.get(g.id.as_str()) {
            Some(p) => pairs.push((g, *p)),
            None => err.missing.push(g.id.clone()),
        }
    }
    for p in preds {
        if !seen.contains_key(p.id.as_str()) {
            err.extra.push(p.id.clone());
        }
    }
    if err == AlignmentError::default() {
        Ok(pairs)
    } else {
        err.duplicated.sort();
        err.duplicated.dedup();
        Err(err)
    }
}

pub fn confusion(gold: &[GoldRecord], preds: &[Prediction]) -> Result<ConfusionMatrix, AlignmentError> {
    let mut cm = ConfusionMatrix::new();
    for (g, p) in align(gold, preds)? {
        cm.add(g.label, p.label);
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PerClass {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub off: PerClass,
    pub not: PerClass,
    /// Unweighted means of the two per-class values.
    pub macro_avg: PerClass,
}

impl ClassMetrics {
    pub fn class(&self, label: Label) -> &PerClass {
        match label {
            Label::Off => &self.off,
            Label::Not => &self.not,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("confusion matrix is empty")]
pub struct EmptyMatrix;

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Harmonic mean of precision and recall; zero when both are zero.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl PerClass {
    pub fn from_pr(precision: f64, recall: f64) -> Self {
        PerClass { precision, recall, f1: f1_score(precision, recall) }
    }
}

/// Macro average over exactly two classes, each metric averaged separately.
pub fn macro_average(a: &PerClass, b: &PerClass) -> PerClass {
    PerClass {
        precision: (a.precision + b.precision) / 2.0,
        recall: (a.recall + b.recall) / 2.0,
        f1: (a.f1 + b.f1) / 2.0,
    }
}

/// Zero denominators give 0 rather than an error.
pub fn class_metrics(cm: &ConfusionMatrix) -> Result<ClassMetrics, EmptyMatrix> {
    if cm.total() == 0 {
        return Err(EmptyMatrix);
    }
    let per = |c: Label| {
        let tp = cm.true_positives(c);
        PerClass::from_pr(ratio(tp, tp + cm.false_positives(c)), ratio(tp, tp + cm.false_negatives(c)))
    };
    let (off, not) = (per(Label::Off), per(Label::Not));
    Ok(ClassMetrics { off, not, macro_avg: macro_average(&off, &not) })
}

/// One line of a benchmark table. `None` renders as `-`.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub system: String,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

impl BenchmarkRow {
    pub fn new(system: impl Into<String>, precision: Option<f64>, recall: Option<f64>, f1: Option<f64>) -> Self {
        BenchmarkRow { system: system.into(), precision, recall, f1 }
    }

    pub fn from_metrics(system: impl Into<String>, m: &ClassMetrics) -> Self {
        Self::new(system, Some(m.macro_avg.precision), Some(m.macro_avg.recall), Some(m.macro_avg.f1))
    }
}

pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => String::from("-"),
    }
}

/// Left-aligned columns separated by two spaces, trailing space trimmed,
/// newline after every line.
pub fn render_columns(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cells: &mut dyn Iterator<Item = &str>| {
        let mut s = String::new();
        for (i, cell) in cells.enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(cell);
            for _ in cell.chars().count()..widths[i] {
                s.push(' ');
            }
        }
        let _ = writeln!(out, "{}", s.trim_end());
    };
    line(&mut header.iter().copied());
    for row in rows {
        line(&mut row.iter().map(String::as_str));
    }
    out
}

/// Macro precision, recall and F1 per system, four decimals.
pub fn benchmark_table(rows: &[BenchmarkRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|r| alloc::vec![r.system.clone(), format_value(r.precision), format_value(r.recall), format_value(r.f1)])
        .collect();
    render_columns(&["Systems", "Precision", "Recall", "F1-Score"], &body)
}

/// Per-class table: NOT, OFF, then the macro average.
pub fn class_table(m: &ClassMetrics) -> String {
    let row = |name: &str, c: &PerClass| {
        alloc::vec![name.into(), format!("{:.4}", c.precision), format!("{:.4}", c.recall), format!("{:.4}", c.f1)]
    };
    render_columns(
        &["", "Precision", "Recall", "F1-Score"],
        &[row("NOT", &m.not), row("OFF", &m.off), row("Macro Average", &m.macro_avg)],
    )
}
