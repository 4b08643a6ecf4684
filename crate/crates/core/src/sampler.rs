//! Trustworthy-sample selection for corpora labeled only by confidence
//! statistics.
//!
//! The procedure has three steps, applied in this order:
//!
//! 1. keep noisy records whose confidence spread `std_conf` lies in the
//!    closed interval `[s_low, s_high]` and derive a binary label from
//!    `avg_conf`;
//! 2. append every record of the auxiliary clean corpus as an OFF example;
//! 3. optionally drop majority-class examples uniformly at random until both
//!    classes have the same count.
//!
//! [`SamplingRun`] consumes records one at a time so the noisy corpus never
//! has to be held in memory; only selected records are retained.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{LabeledExample, TweetRecord};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub s_low: f64,
    pub s_high: f64,
    /// `avg_conf` at or above this value labels a record OFF.
    pub label_threshold: f64,
    pub seed: u64,
    pub balance: bool,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("s_low ({s_low}) must not exceed s_high ({s_high})")]
    InvertedInterval { s_low: f64, s_high: f64 },
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

impl SamplerConfig {
    pub fn new(s_low: f64, s_high: f64, seed: u64) -> Result<Self, ConfigError> {
        let cfg = SamplerConfig { s_low, s_high, label_threshold: 0.5, seed, balance: true };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for (name, value) in [
            ("s_low", self.s_low),
            ("s_high", self.s_high),
            ("label_threshold", self.label_threshold),
        ] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ConfigError::OutOfRange { name, value });
            }
        }
        if self.s_low > self.s_high {
            return Err(ConfigError::InvertedInterval { s_low: self.s_low, s_high: self.s_high });
        }
        Ok(())
    }

    pub fn interval(&self) -> Interval {
        Interval { s_low: self.s_low, s_high: self.s_high }
    }
}

/// Stage-by-stage counts of one sampling run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleSummary {
    pub input_count_a: u64,
    pub selected_count: u64,
    pub aux_count_b: u64,
    pub removed_for_balance: u64,
    pub final_count: u64,
    pub final_off: u64,
    pub final_not: u64,
}

impl SampleSummary {
    /// Field names and values in their canonical order.
    pub fn fields(&self) -> [(&'static str, u64); 7] {
        [
            ("input_count_a", self.input_count_a),
            ("selected_count", self.selected_count),
            ("aux_count_b", self.aux_count_b),
            ("removed_for_balance", self.removed_for_balance),
            ("final_count", self.final_count),
            ("final_off", self.final_off),
            ("final_not", self.final_not),
        ]
    }

    /// Whether the stage counts add up.
    pub fn is_consistent(&self) -> bool {
        self.final_count + self.removed_for_balance == self.selected_count + self.aux_count_b
            && self.final_off + self.final_not == self.final_count
    }
}

/// OFF iff `avg_conf >= threshold`.
pub fn derive_label(record: &TweetRecord, label_threshold: f64) -> Label {
    if record.avg_conf >= label_threshold {
        Label::Off
    } else {
        Label::Not
    }
}

/// Closed-interval membership test on the confidence spread.
#[inline]
pub fn in_interval(std_conf: f64, s_low: f64, s_high: f64) -> bool {
    s_low <= std_conf && std_conf <= s_high
}

/// Lazily keeps the records with `s_low <= std_conf <= s_high`, in input order.
pub fn filter_by_std<I>(records: I, s_low: f64, s_high: f64) -> impl Iterator<Item = TweetRecord>
where
    I: IntoIterator<Item = TweetRecord>,
{
    records.into_iter().filter(move |r| in_interval(r.std_conf, s_low, s_high))
}

/// Appends every auxiliary record as an OFF example. No deduplication.
pub fn merge_auxiliary<I>(mut selected: Vec<LabeledExample>, aux: I) -> Vec<LabeledExample>
where
    I: IntoIterator<Item = TweetRecord>,
{
    selected.extend(aux.into_iter().map(LabeledExample::clean));
    selected
}

pub fn class_counts(examples: &[LabeledExample]) -> (u64, u64) {
    let off = examples.iter().filter(|e| e.label == Label::Off).count() as u64;
    (off, examples.len() as u64 - off)
}

/// Subsamples the majority class without replacement until both classes have
/// the same count. Survivors keep their relative order. Returns the balanced
/// list and the number of removed examples.
pub fn balance_classes(examples: Vec<LabeledExample>, seed: u64) -> (Vec<LabeledExample>, usize) {
    let (off, not) = class_counts(&examples);
    if off == not {
        return (examples, 0);
    }
    let majority = if off > not { Label::Off } else { Label::Not };
    let (major_n, minor_n) = if off > not { (off, not) } else { (not, off) };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut keep = alloc::vec![false; major_n as usize];
    for i in index::sample(&mut rng, major_n as usize, minor_n as usize) {
        keep[i] = true;
    }

    let removed = (major_n - minor_n) as usize;
    let mut out = Vec::with_capacity(examples.len() - removed);
    let mut rank = 0usize;
    for ex in examples {
        if ex.label == majority {
            let kept = keep[rank];
            rank += 1;
            if !kept {
                continue;
            }
        }
        out.push(ex);
    }
    (out, removed)
}

/// Incremental form of the full procedure. Feed noisy records with
/// [`push_noisy`](Self::push_noisy), then auxiliary records with
/// [`push_aux`](Self::push_aux), then call [`finish`](Self::finish).
#[derive(Debug)]
pub struct SamplingRun {
    config: SamplerConfig,
    examples: Vec<LabeledExample>,
    summary: SampleSummary,
}

impl SamplingRun {
    pub fn new(config: SamplerConfig) -> Result<Self, ConfigError> {
        config.validate()?;
        Ok(SamplingRun { config, examples: Vec::new(), summary: SampleSummary::default() })
    }

    pub fn push_noisy(&mut self, record: TweetRecord) {
        self.summary.input_count_a += 1;
        if in_interval(record.std_conf, self.config.s_low, self.config.s_high) {
            let label = derive_label(&record, self.config.label_threshold);
            self.examples.push(LabeledExample::noisy(record, label));
            self.summary.selected_count += 1;
        }
    }

    pub fn push_aux(&mut self, record: TweetRecord) {
        self.summary.aux_count_b += 1;
        self.examples.push(LabeledExample::clean(record));
    }

    pub fn finish(self) -> (Vec<LabeledExample>, SampleSummary) {
        let SamplingRun { config, examples, mut summary } = self;
        let (examples, removed) = if config.balance {
            balance_classes(examples, config.seed)
        } else {
            (examples, 0)
        };
        let (off, not) = class_counts(&examples);
        summary.removed_for_balance = removed as u64;
        summary.final_count = examples.len() as u64;
        summary.final_off = off;
        summary.final_not = not;
        debug_assert!(summary.is_consistent());
        (examples, summary)
    }
}

/// Runs the whole procedure over in-memory iterators.
pub fn sample<A, B>(config: &SamplerConfig, noisy: A, aux: B) -> Result<(Vec<LabeledExample>, SampleSummary), ConfigError>
where
    A: IntoIterator<Item = TweetRecord>,
    B: IntoIterator<Item = TweetRecord>,
{
    let mut run = SamplingRun::new(*config)?;
    noisy.into_iter().for_each(|r| run.push_noisy(r));
    aux.into_iter().for_each(|r| run.push_aux(r));
    Ok(run.finish())
}

/// A candidate `[s_low, s_high]` selection interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub s_low: f64,
    pub s_high: f64,
}

impl Interval {
    pub fn width(&self) -> f64 {
        self.s_high - self.s_low
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.s_low, self.s_high)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepResult {
    pub interval: Interval,
    pub macro_f1: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError<E> {
    #[error("no candidate intervals")]
    NoCandidates,
    #[error("budget must be at least 1")]
    ZeroBudget,
    #[error("invalid candidate {interval}: {source}")]
    InvalidCandidate { interval: Interval, source: ConfigError },
    #[error("candidate {interval} returned non-finite score {score}")]
    NonFinite { interval: Interval, score: f64 },
    #[error("candidate {interval} failed: {source}")]
    Callback { interval: Interval, source: E },
}

/// Orders results best first: higher macro-F1, then narrower interval, then
/// lower `s_low`.
pub fn rank_order(a: &SweepResult, b: &SweepResult) -> Ordering {
    b.macro_f1
        .total_cmp(&a.macro_f1)
        .then_with(|| a.interval.width().total_cmp(&b.interval.width()))
        .then_with(|| a.interval.s_low.total_cmp(&b.interval.s_low))
}

/// Random search over candidate intervals.
///
/// Picks `min(budget, candidates.len())` candidates by seeded sampling without
/// replacement, scores each with `evaluate`, and returns them ranked by
/// [`rank_order`].
pub fn threshold_sweep<F, E>(
    candidates: &[Interval],
    budget: usize,
    seed: u64,
    mut evaluate: F,
) -> Result<Vec<SweepResult>, SweepError<E>>
where
    F: FnMut(Interval) -> Result<f64, E>,
{
    if candidates.is_empty() {
        return Err(SweepError::NoCandidates);
    }
    if budget == 0 {
        return Err(SweepError::ZeroBudget);
    }
    for &interval in candidates {
        let cfg = SamplerConfig { s_low: interval.s_low, s_high: interval.s_high, label_threshold: 0.5, seed, balance: true };
        cfg.validate().map_err(|source| SweepError::InvalidCandidate { interval, source })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let amount = budget.min(candidates.len());
    let mut chosen = index::sample(&mut rng, candidates.len(), amount).into_vec();
    chosen.sort_unstable();

    let mut results = Vec::with_capacity(amount);
    for i in chosen {
        let interval = candidates[i];
        let score = evaluate(interval).map_err(|source| SweepError::Callback { interval, source })?;
        if !score.is_finite() {
            return Err(SweepError::NonFinite { interval, score });
        }
        results.push(SweepResult { interval, macro_f1: score });
    }
    results.sort_by(rank_order);
    Ok(results)
}

/// Sweep where each candidate is turned into a sampled training set from
/// in-memory corpora before `train_and_eval` scores it.
pub fn sweep_sampling<F, E>(
    noisy: &[TweetRecord],
    aux: &[TweetRecord],
    base: &SamplerConfig,
    candidates: &[Interval],
    budget: usize,
    mut train_and_eval: F,
) -> Result<Vec<SweepResult>, SweepError<E>>
where
    F: FnMut(&[LabeledExample]) -> Result<f64, E>,
{
    base.validate().map_err(|source| SweepError::InvalidCandidate { interval: base.interval(), source })?;
    threshold_sweep(candidates, budget, base.seed, |interval| {
        let cfg = SamplerConfig { s_low: interval.s_low, s_high: interval.s_high, ..*base };
        let (examples, _) = sample(&cfg, noisy.iter().cloned(), aux.iter().cloned())
            .expect("candidate validated before sweep");
        train_and_eval(&examples)
    })
}
