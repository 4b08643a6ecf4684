//! Core algorithms for training and evaluating binary offensive-language
//! classifiers from corpora that carry only noisy confidence statistics.
//!
//! Everything here is pure computation over in-memory values and builds
//! without `std` (an allocator is required). File formats, process
//! management and the command-line driver live in the `noisy-offense` crate.
//!
//! The stages, in pipeline order:
//!
//! * [`corpus`]: record types, text normalization, wordlists.
//! * [`sampler`]: confidence-spread interval selection, auxiliary merge and
//!   class balancing, plus a seeded threshold sweep.
//! * [`features`] and [`classifier`]: a hashed n-gram logistic baseline.
//! * [`postprocess`]: wordlist override of predictions.
//! * [`metrics`]: confusion matrix, per-class and macro scores, tables.
//! * [`report`]: false-positive bucketing and the text report.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod classifier;
pub mod corpus;
pub mod features;
pub mod label;
pub mod metrics;
pub mod postprocess;
pub mod report;
pub mod sampler;

pub use classifier::{BaselineHyperparams, LinearModel, Prediction, TrainError};
pub use corpus::{normalize_text, GoldRecord, LabeledExample, RecordError, Source, TweetRecord, Wordlist};
pub use label::Label;
pub use metrics::{class_metrics, confusion, AlignmentError, ClassMetrics, ConfusionMatrix};
pub use postprocess::{apply_postprocess, matches_wordlist, OverrideLogEntry, WordlistMatcher};
pub use report::{BucketConfig, ErrorBucket};
pub use sampler::{SampleSummary, SamplerConfig};
