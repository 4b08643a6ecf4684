//! File formats, the external adapter client and the command-line pipeline
//! built on `noisy-offense-core`.

pub mod adapter;
pub mod cli;
pub mod config;
pub mod error;
pub mod model_io;
pub mod pipeline;
pub mod tsv;

pub use noisy_offense_core as core;
