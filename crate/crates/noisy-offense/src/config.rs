//! Optional TOML configuration file. Every field may also be given as a
//! command-line flag, and flags win.
//!
//! ```toml
//! seed = 7
//! backend = "baseline"          # or "adapter"
//! wordlist = "data/wordlist.txt"
//!
//! [paths]
//! input_a = "noisy.tsv"
//! input_b = "clean.tsv"
//! test = "test.tsv"
//! out_dir = "out"
//!
//! [sampler]
//! s_low = 0.1
//! s_high = 0.2
//!
//! [baseline]
//! epochs = 5
//!
//! [adapter]
//! command = "python3 adapter.py serve model/"
//! timeout_secs = 120
//!
//! [report]
//! swear_indicators = ["sucks", "sick"]
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::adapter::TransformerSettings;
use crate::error::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Baseline,
    Adapter,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: Option<u64>,
    pub backend: Option<BackendKind>,
    pub wordlist: Option<PathBuf>,
    pub paths: PathsSection,
    pub sampler: SamplerSection,
    pub baseline: BaselineSection,
    pub adapter: Option<AdapterSection>,
    pub report: ReportSection,
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsSection {
    pub input_a: Option<PathBuf>,
    pub input_b: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplerSection {
    pub s_low: Option<f64>,
    pub s_high: Option<f64>,
    pub label_threshold: Option<f64>,
    pub balance: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineSection {
    pub feature_dim: Option<u32>,
    pub ngram_min: Option<usize>,
    pub ngram_max: Option<usize>,
    pub word_unigrams: Option<bool>,
    pub epochs: Option<u32>,
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdapterSection {
    pub command: Option<String>,
    pub timeout_secs: Option<f64>,
    pub training: TransformerSettings,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub question_markers: Option<Vec<String>>,
    pub swear_indicators: Option<Vec<String>>,
    pub humor_markers: Option<Vec<String>>,
    pub min_tokens: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    /// Candidate intervals as `[s_low, s_high]` pairs.
    pub candidates: Option<Vec<[f64; 2]>>,
    pub budget: Option<usize>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| Error::config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| Error::config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is serializable")
    }
}
