//! File-to-file pipeline stages. Each command-line subcommand is one of these
//! functions, and the full run chains them through the same intermediate
//! files, so a chained invocation and a single run produce identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use noisy_offense_core::classifier::{train_baseline, BaselineHyperparams, LinearModel, Prediction};
use noisy_offense_core::corpus::{GoldRecord, LabeledExample, TweetRecord, Wordlist};
use noisy_offense_core::metrics::{class_metrics, class_table, confusion, ClassMetrics, ConfusionMatrix};
use noisy_offense_core::postprocess::{apply_postprocess, OverrideLogEntry, WordlistMatcher};
use noisy_offense_core::report::{bucket_false_positives, false_positives, render_report, BucketConfig, ReportInput};
use noisy_offense_core::sampler::{self, Interval, SampleSummary, SamplerConfig, SamplingRun, SweepError, SweepResult};

use crate::adapter::AdapterClient;
use crate::error::{DataError, Error, Result};
use crate::model_io;
use crate::tsv;

/// Seeded stages. Each derives its own seed from the global one so that it
/// is reproducible when run on its own.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Sample,
    Train,
    Sweep,
}

impl Stage {
    fn tag(self) -> u64 {
        match self {
            Stage::Sample => 1,
            Stage::Train => 2,
            Stage::Sweep => 3,
        }
    }
}

pub fn stage_seed(global: u64, stage: Stage) -> u64 {
    global.wrapping_add(stage.tag())
}

pub fn load_wordlist(path: &Path) -> Result<Wordlist, DataError> {
    let text = fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
    Wordlist::parse(path.display().to_string(), &text).map_err(|e| DataError::content(path, e.to_string()))
}

/// Streams the noisy corpus through the sampler, then appends the auxiliary
/// corpus and balances.
pub fn run_sampling(config: &SamplerConfig, path_a: &Path, path_b: &Path) -> Result<(Vec<LabeledExample>, SampleSummary)> {
    let mut run = SamplingRun::new(*config).map_err(Error::config)?;
    for rec in tsv::load_noisy_dataset(path_a)? {
        run.push_noisy(rec?);
    }
    for rec in tsv::load_noisy_dataset(path_b)? {
        run.push_aux(rec?);
    }
    Ok(run.finish())
}

pub fn sample_to_files(
    config: &SamplerConfig,
    path_a: &Path,
    path_b: &Path,
    out: &Path,
    summary_out: Option<&Path>,
) -> Result<SampleSummary> {
    let (examples, summary) = run_sampling(config, path_a, path_b)?;
    tsv::write_labeled(tsv::create(out)?, &examples).map_err(|e| DataError::io(out, e))?;
    if let Some(p) = summary_out {
        tsv::write_summary(tsv::create(p)?, &summary).map_err(|e| DataError::io(p, e))?;
    }
    Ok(summary)
}

pub fn train_from_file(train_path: &Path, hp: &BaselineHyperparams, model_out: &Path) -> Result<LinearModel> {
    let data = tsv::load_gold_dataset(train_path)?;
    let model = train_baseline(&data, hp).map_err(|e| DataError::content(train_path, e.to_string()))?;
    model_io::save_model(&model, model_out)?;
    Ok(model)
}

/// Where predictions come from.
pub enum Backend {
    Baseline(LinearModel),
    Adapter(AdapterClient),
}

const ADAPTER_BATCH: usize = 512;

impl Backend {
    pub fn predict_all(&self, texts: &[(String, String)]) -> Result<Vec<Prediction>> {
        match self {
            Backend::Baseline(m) => Ok(texts.iter().map(|(id, t)| m.predict(id.as_str(), t)).collect()),
            Backend::Adapter(client) => {
                let mut out = Vec::with_capacity(texts.len());
                for chunk in texts.chunks(ADAPTER_BATCH) {
                    out.extend(client.predict(chunk)?);
                }
                Ok(out)
            }
        }
    }
}

pub fn predict_to_file(backend: &Backend, texts_path: &Path, out: &Path) -> Result<Vec<Prediction>> {
    let texts = tsv::load_texts(texts_path)?;
    tsv::texts_by_id(texts_path, texts.clone())?;
    let preds = backend.predict_all(&texts)?;
    tsv::write_predictions(tsv::create(out)?, &preds).map_err(|e| DataError::io(out, e))?;
    Ok(preds)
}

/// Applies the wordlist override. Without a wordlist, predictions are copied
/// through unchanged and the log is empty.
pub fn postprocess_files(
    preds_path: &Path,
    texts_path: &Path,
    wordlist: Option<&Path>,
    out: &Path,
    log_out: Option<&Path>,
) -> Result<Vec<OverrideLogEntry>> {
    let preds = tsv::load_predictions(preds_path)?;
    let (preds, log) = match wordlist {
        None => (preds, Vec::new()),
        Some(wl_path) => {
            let matcher = WordlistMatcher::new(&load_wordlist(wl_path)?);
            let texts = tsv::texts_by_id(texts_path, tsv::load_texts(texts_path)?)?;
            apply_postprocess(preds, &texts, &matcher).map_err(|e| DataError::content(texts_path, e.to_string()))?
        }
    };
    tsv::write_predictions(tsv::create(out)?, &preds).map_err(|e| DataError::io(out, e))?;
    if let Some(p) = log_out {
        tsv::write_override_log(tsv::create(p)?, &log).map_err(|e| DataError::io(p, e))?;
    }
    Ok(log)
}

fn aligned_metrics(gold_path: &Path, gold: &[GoldRecord], preds: &[Prediction]) -> Result<(ConfusionMatrix, ClassMetrics)> {
    let cm = confusion(gold, preds).map_err(|e| DataError::content(gold_path, e.to_string()))?;
    let m = class_metrics(&cm).map_err(|e| DataError::content(gold_path, e.to_string()))?;
    Ok((cm, m))
}

pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub metrics: ClassMetrics,
}

impl Evaluation {
    pub fn table(&self) -> String {
        format!("{}macro-F1: {:.4}\n", class_table(&self.metrics), self.metrics.macro_avg.f1)
    }
}

pub fn evaluate_files(gold_path: &Path, preds_path: &Path, eval_out: Option<&Path>, confusion_out: Option<&Path>) -> Result<Evaluation> {
    let gold = tsv::load_gold_dataset(gold_path)?;
    let preds = tsv::load_predictions(preds_path)?;
    let (cm, m) = aligned_metrics(gold_path, &gold, &preds)?;
    if let Some(p) = eval_out {
        tsv::write_evaluation(tsv::create(p)?, &cm, &m).map_err(|e| DataError::io(p, e))?;
    }
    if let Some(p) = confusion_out {
        tsv::write_confusion(tsv::create(p)?, &cm).map_err(|e| DataError::io(p, e))?;
    }
    Ok(Evaluation { confusion: cm, metrics: m })
}

pub struct ReportFiles<'a> {
    pub gold: &'a Path,
    pub predictions: &'a Path,
    pub override_log: Option<&'a Path>,
    pub summary: Option<&'a Path>,
    pub report_out: &'a Path,
    pub buckets_out: Option<&'a Path>,
}

pub fn report_files(files: &ReportFiles<'_>, cfg: &BucketConfig) -> Result<String> {
    let gold = tsv::load_gold_dataset(files.gold)?;
    let preds = tsv::load_predictions(files.predictions)?;
    let (cm, m) = aligned_metrics(files.gold, &gold, &preds)?;
    let log = match files.override_log {
        Some(p) => tsv::load_override_log(p)?,
        None => Vec::new(),
    };
    let summary = files.summary.map(tsv::read_summary).transpose()?;
    let fps = false_positives(&gold, &preds).map_err(|e| DataError::content(files.gold, e.to_string()))?;
    let buckets = bucket_false_positives(&fps, cfg, &log);
    let text = render_report(&ReportInput {
        summary: summary.as_ref(),
        confusion: &cm,
        metrics: &m,
        buckets: Some(&buckets),
        override_log: &log,
        min_tokens: cfg.min_tokens(),
    });
    fs::write(files.report_out, &text).map_err(|e| DataError::io(files.report_out, e))?;
    if let Some(p) = files.buckets_out {
        tsv::write_buckets(tsv::create(p)?, &buckets).map_err(|e| DataError::io(p, e))?;
    }
    Ok(text)
}

/// Inputs for a threshold sweep with the baseline classifier.
pub struct SweepInputs<'a> {
    pub input_a: &'a Path,
    pub input_b: &'a Path,
    pub dev: &'a Path,
    pub base: SamplerConfig,
    pub hyperparams: BaselineHyperparams,
    pub candidates: &'a [Interval],
    pub budget: usize,
}

/// Scores each candidate interval by training the baseline on its sampled
/// set and measuring macro-F1 on the dev file.
pub fn sweep(inputs: &SweepInputs<'_>) -> Result<Vec<SweepResult>> {
    let load = |p: &Path| -> Result<Vec<TweetRecord>> { Ok(tsv::load_noisy_dataset(p)?.collect::<Result<_, _>>()?) };
    let a = load(inputs.input_a)?;
    let b = load(inputs.input_b)?;
    let dev = tsv::load_gold_dataset(inputs.dev)?;
    let result = sampler::sweep_sampling(&a, &b, &inputs.base, inputs.candidates, inputs.budget, |examples| {
        let model = train_baseline(examples, &inputs.hyperparams)?;
        let preds: Vec<Prediction> = dev.iter().map(|g| model.predict(g.id.as_str(), &g.text)).collect();
        let cm = confusion(&dev, &preds).expect("predictions built from dev ids");
        Ok::<_, noisy_offense_core::TrainError>(class_metrics(&cm).map(|m| m.macro_avg.f1).unwrap_or(0.0))
    });
    result.map_err(|e| match e {
        SweepError::Callback { interval, source } => {
            DataError::content(inputs.input_a, format!("candidate {interval}: {source}")).into()
        }
        other => Error::config(other),
    })
}

pub fn write_sweep(path: &Path, results: &[SweepResult]) -> Result<()> {
    let mut text = String::from("s_low\ts_high\tmacro_f1\n");
    for r in results {
        text.push_str(&format!("{}\t{}\t{}\n", r.interval.s_low, r.interval.s_high, r.macro_f1));
    }
    fs::write(path, text).map_err(|e| DataError::io(path, e).into())
}

/// File names produced by a full run inside the output directory.
pub struct RunLayout {
    pub dir: PathBuf,
}

impl RunLayout {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        RunLayout { dir: dir.into() }
    }
    pub fn sample(&self) -> PathBuf {
        self.dir.join("sample.tsv")
    }
    pub fn summary(&self) -> PathBuf {
        self.dir.join("summary.txt")
    }
    pub fn model(&self) -> PathBuf {
        self.dir.join("model.txt")
    }
    pub fn predictions(&self) -> PathBuf {
        self.dir.join("predictions.tsv")
    }
    pub fn postprocessed(&self) -> PathBuf {
        self.dir.join("postprocessed.tsv")
    }
    pub fn override_log(&self) -> PathBuf {
        self.dir.join("override_log.tsv")
    }
    pub fn evaluation(&self) -> PathBuf {
        self.dir.join("evaluation.txt")
    }
    pub fn confusion(&self) -> PathBuf {
        self.dir.join("confusion.tsv")
    }
    pub fn buckets(&self) -> PathBuf {
        self.dir.join("buckets.tsv")
    }
    pub fn report(&self) -> PathBuf {
        self.dir.join("report.txt")
    }
    pub fn config(&self) -> PathBuf {
        self.dir.join("config.toml")
    }
}
