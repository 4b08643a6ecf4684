//! Command-line front end. Values come from flags first, then the optional
//! `--config` file, then built-in defaults. The seed additionally falls back
//! to `NOISY_OFFENSE_SEED`.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use noisy_offense_core::classifier::BaselineHyperparams;
use noisy_offense_core::report::BucketConfig;
use noisy_offense_core::sampler::{Interval, SamplerConfig};

use crate::adapter::{AdapterClient, AdapterConfig};
use crate::config::{AdapterSection, BackendKind, PipelineConfig};
use crate::error::{Error, Result};
use crate::model_io;
use crate::pipeline::{self, stage_seed, Backend, ReportFiles, RunLayout, Stage, SweepInputs};

pub const SEED_ENV: &str = "NOISY_OFFENSE_SEED";
const DEFAULT_ADAPTER_TIMEOUT_SECS: f64 = 300.0;
const DEFAULT_SWEEP_BUDGET: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "noisy-offense", version, about = "Offensive-language classification from noisy confidence labels")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Global seed for every seeded stage.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Select, label, merge and balance a training set.
    Sample(SampleArgs),
    /// Train the hashed n-gram baseline.
    Train(TrainArgs),
    /// Predict labels with a saved model or an external adapter.
    Predict(PredictArgs),
    /// Force OFF for texts containing a wordlist term.
    Postprocess(PostprocessArgs),
    /// Compare predictions with gold labels.
    Evaluate(EvaluateArgs),
    /// Write the text report with false-positive buckets.
    Report(ReportArgs),
    /// Random search over selection intervals with the baseline.
    Sweep(SweepArgs),
    /// Run sample, train, predict, postprocess, evaluate and report.
    Run(RunArgs),
}

#[derive(Debug, Args, Default)]
pub struct SamplerFlags {
    #[arg(long)]
    pub input_a: Option<PathBuf>,
    #[arg(long)]
    pub input_b: Option<PathBuf>,
    #[arg(long)]
    pub s_low: Option<f64>,
    #[arg(long)]
    pub s_high: Option<f64>,
    #[arg(long)]
    pub label_threshold: Option<f64>,
    /// Keep the class imbalance.
    #[arg(long)]
    pub no_balance: bool,
}

#[derive(Debug, Args, Default)]
pub struct BaselineFlags {
    #[arg(long)]
    pub feature_dim: Option<u32>,
    #[arg(long)]
    pub ngram_min: Option<usize>,
    #[arg(long)]
    pub ngram_max: Option<usize>,
    #[arg(long)]
    pub no_word_unigrams: bool,
    #[arg(long)]
    pub epochs: Option<u32>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct AdapterFlags {
    /// Adapter command line, split shell-style.
    #[arg(long)]
    pub adapter: Option<String>,
    /// Seconds to wait for any single adapter response line.
    #[arg(long)]
    pub adapter_timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[arg(long)]
    pub out: PathBuf,
    /// Summary file; printed to stdout either way.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled TSV (`id, text, label`).
    #[arg(long)]
    pub train: PathBuf,
    #[command(flatten)]
    pub baseline: BaselineFlags,
    #[arg(long)]
    pub model_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long, conflicts_with = "adapter")]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub adapter: AdapterFlags,
    /// `id, text` or labeled TSV.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PostprocessArgs {
    #[arg(long)]
    pub predictions: PathBuf,
    /// Texts for the predicted ids.
    #[arg(long)]
    pub texts: PathBuf,
    /// Without a wordlist predictions pass through unchanged.
    #[arg(long)]
    pub wordlist: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub log: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub confusion: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub predictions: PathBuf,
    #[arg(long)]
    pub override_log: Option<PathBuf>,
    #[arg(long)]
    pub summary: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub buckets: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[command(flatten)]
    pub baseline: BaselineFlags,
    /// Labeled development TSV used for scoring.
    #[arg(long)]
    pub dev: Option<PathBuf>,
    /// Candidate interval as `LOW,HIGH`; repeatable.
    #[arg(long = "candidate", value_parser = parse_interval)]
    pub candidates: Vec<Interval>,
    #[arg(long)]
    pub budget: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub sampler: SamplerFlags,
    #[command(flatten)]
    pub baseline: BaselineFlags,
    #[command(flatten)]
    pub adapter: AdapterFlags,
    /// Labeled test TSV.
    #[arg(long)]
    pub test: Option<PathBuf>,
    #[arg(long)]
    pub wordlist: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn parse_interval(s: &str) -> std::result::Result<Interval, String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LOW,HIGH, got {s:?}"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Interval { s_low: parse(lo)?, s_high: parse(hi)? })
}

/// Every candidate `[lo, hi]` with `lo < hi` on a 0.05 grid over `[0, 0.5]`.
pub fn default_candidates() -> Vec<Interval> {
    let points: Vec<f64> = (0..=10).map(|i| f64::from(i) * 0.05).collect();
    let mut out = Vec::new();
    for (i, &lo) in points.iter().enumerate() {
        for &hi in &points[i + 1..] {
            out.push(Interval { s_low: lo, s_high: hi });
        }
    }
    out
}

struct Context {
    file: PipelineConfig,
    seed_flag: Option<u64>,
}

fn required<T: Clone>(flag: Option<T>, file: &Option<T>, name: &str) -> Result<T> {
    flag.or_else(|| file.clone()).ok_or_else(|| Error::Usage(format!("missing --{name}")))
}

impl Context {
    fn load(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        Ok(Context { file, seed_flag: cli.seed })
    }

    fn seed(&self) -> Result<u64> {
        if let Some(s) = self.seed_flag.or(self.file.seed) {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| Error::config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))),
            Err(_) => Err(Error::Usage(format!("missing --seed (or `seed` in the config file, or {SEED_ENV})"))),
        }
    }

    fn sampler(&self, f: &SamplerFlags, seed: u64) -> Result<SamplerConfig> {
        let s = &self.file.sampler;
        let cfg = SamplerConfig {
            s_low: required(f.s_low, &s.s_low, "s-low")?,
            s_high: required(f.s_high, &s.s_high, "s-high")?,
            label_threshold: f.label_threshold.or(s.label_threshold).unwrap_or(0.5),
            seed: stage_seed(seed, Stage::Sample),
            balance: !f.no_balance && s.balance.unwrap_or(true),
        };
        cfg.validate().map_err(Error::config)?;
        Ok(cfg)
    }

    fn inputs(&self, f: &SamplerFlags) -> Result<(PathBuf, PathBuf)> {
        let p = &self.file.paths;
        Ok((required(f.input_a.clone(), &p.input_a, "input-a")?, required(f.input_b.clone(), &p.input_b, "input-b")?))
    }

    fn baseline(&self, f: &BaselineFlags, seed: u64) -> Result<BaselineHyperparams> {
        let b = &self.file.baseline;
        let d = BaselineHyperparams::default();
        let hp = BaselineHyperparams {
            feature_dim: f.feature_dim.or(b.feature_dim).unwrap_or(d.feature_dim),
            ngram_min: f.ngram_min.or(b.ngram_min).unwrap_or(d.ngram_min),
            ngram_max: f.ngram_max.or(b.ngram_max).unwrap_or(d.ngram_max),
            word_unigrams: !f.no_word_unigrams && b.word_unigrams.unwrap_or(d.word_unigrams),
            epochs: f.epochs.or(b.epochs).unwrap_or(d.epochs),
            learning_rate: f.learning_rate.or(b.learning_rate).unwrap_or(d.learning_rate),
            seed: stage_seed(seed, Stage::Train),
        };
        hp.validate().map_err(Error::config)?;
        Ok(hp)
    }

    fn adapter(&self, f: &AdapterFlags) -> Result<Option<AdapterConfig>> {
        let section = self.file.adapter.clone().unwrap_or_default();
        let Some(line) = f.adapter.clone().or(section.command.clone()) else {
            return Ok(None);
        };
        let secs = f.adapter_timeout.or(section.timeout_secs).unwrap_or(DEFAULT_ADAPTER_TIMEOUT_SECS);
        let timeout = Duration::try_from_secs_f64(secs).map_err(|e| Error::config(format!("adapter timeout {secs}: {e}")))?;
        let mut cfg = AdapterConfig::new(AdapterConfig::parse_command(&line).map_err(Error::config)?, timeout).map_err(Error::config)?;
        cfg.training = section.training;
        Ok(Some(cfg))
    }

    fn buckets(&self) -> Result<BucketConfig> {
        let r = &self.file.report;
        let d = BucketConfig::default();
        BucketConfig::new(
            r.question_markers.clone().unwrap_or_else(|| d.question_markers().to_vec()),
            r.swear_indicators.clone().unwrap_or_else(|| d.swear_indicators().to_vec()),
            r.humor_markers.clone().unwrap_or_else(|| d.humor_markers().to_vec()),
            r.min_tokens.unwrap_or(d.min_tokens()),
        )
        .map_err(Error::config)
    }
}

fn print(text: &str) {
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(text.as_bytes());
}

fn summary_text(s: &noisy_offense_core::SampleSummary) -> String {
    s.fields().iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

fn cmd_sample(ctx: &Context, a: &SampleArgs) -> Result<()> {
    let seed = ctx.seed()?;
    let (input_a, input_b) = ctx.inputs(&a.sampler)?;
    let cfg = ctx.sampler(&a.sampler, seed)?;
    let summary = pipeline::sample_to_files(&cfg, &input_a, &input_b, &a.out, a.summary.as_deref())?;
    print(&summary_text(&summary));
    Ok(())
}

fn cmd_train(ctx: &Context, a: &TrainArgs) -> Result<()> {
    let hp = ctx.baseline(&a.baseline, ctx.seed()?)?;
    let model = pipeline::train_from_file(&a.train, &hp, &a.model_out)?;
    print(&format!("trained {} non-zero weights\n", model.weights().len()));
    Ok(())
}

fn cmd_predict(ctx: &Context, a: &PredictArgs) -> Result<()> {
    let backend = match (&a.model, ctx.adapter(&a.adapter)?) {
        (Some(m), _) => Backend::Baseline(model_io::load_model(m)?),
        (None, Some(cfg)) => Backend::Adapter(AdapterClient::spawn(cfg)?),
        (None, None) => return Err(Error::Usage("predict needs --model or --adapter".into())),
    };
    let preds = pipeline::predict_to_file(&backend, &a.input, &a.out)?;
    print(&format!("predicted {} texts\n", preds.len()));
    Ok(())
}

fn cmd_postprocess(a: &PostprocessArgs) -> Result<()> {
    let log = pipeline::postprocess_files(&a.predictions, &a.texts, a.wordlist.as_deref(), &a.out, a.log.as_deref())?;
    let triggers = noisy_offense_core::postprocess::trigger_count(&log);
    print(&format!("matched {}, triggers (NOT -> OFF) {}\n", log.len(), triggers));
    Ok(())
}

fn cmd_evaluate(a: &EvaluateArgs) -> Result<()> {
    let eval = pipeline::evaluate_files(&a.gold, &a.predictions, a.out.as_deref(), a.confusion.as_deref())?;
    print(&eval.table());
    Ok(())
}

fn cmd_report(ctx: &Context, a: &ReportArgs) -> Result<()> {
    let files = ReportFiles {
        gold: &a.gold,
        predictions: &a.predictions,
        override_log: a.override_log.as_deref(),
        summary: a.summary.as_deref(),
        report_out: &a.out,
        buckets_out: a.buckets.as_deref(),
    };
    print(&pipeline::report_files(&files, &ctx.buckets()?)?);
    Ok(())
}

fn cmd_sweep(ctx: &Context, a: &SweepArgs) -> Result<()> {
    let seed = ctx.seed()?;
    let (input_a, input_b) = ctx.inputs(&a.sampler)?;
    let dev = required(a.dev.clone(), &ctx.file.paths.dev, "dev")?;
    // The base interval only carries the shared settings; fall back to the
    // first candidate when none is configured.
    let candidates: Vec<Interval> = if !a.candidates.is_empty() {
        a.candidates.clone()
    } else if let Some(c) = &ctx.file.sweep.candidates {
        c.iter().map(|&[lo, hi]| Interval { s_low: lo, s_high: hi }).collect()
    } else {
        default_candidates()
    };
    let first = candidates.first().copied().ok_or_else(|| Error::config("no sweep candidates"))?;
    let s = &ctx.file.sampler;
    let base = SamplerConfig {
        s_low: a.sampler.s_low.or(s.s_low).unwrap_or(first.s_low),
        s_high: a.sampler.s_high.or(s.s_high).unwrap_or(first.s_high),
        label_threshold: a.sampler.label_threshold.or(s.label_threshold).unwrap_or(0.5),
        seed: stage_seed(seed, Stage::Sweep),
        balance: !a.sampler.no_balance && s.balance.unwrap_or(true),
    };
    let inputs = SweepInputs {
        input_a: &input_a,
        input_b: &input_b,
        dev: &dev,
        base,
        hyperparams: ctx.baseline(&a.baseline, seed)?,
        candidates: &candidates,
        budget: a.budget.or(ctx.file.sweep.budget).unwrap_or(DEFAULT_SWEEP_BUDGET),
    };
    let results = pipeline::sweep(&inputs)?;
    pipeline::write_sweep(&a.out, &results)?;
    if let Some(best) = results.first() {
        print(&format!("best {} macro-F1 {:.4}\n", best.interval, best.macro_f1));
    }
    Ok(())
}

fn cmd_run(ctx: &Context, a: &RunArgs) -> Result<()> {
    let seed = ctx.seed()?;
    let (input_a, input_b) = ctx.inputs(&a.sampler)?;
    let test = required(a.test.clone(), &ctx.file.paths.test, "test")?;
    let out_dir = required(a.out_dir.clone(), &ctx.file.paths.out_dir, "out-dir")?;
    let sampler = ctx.sampler(&a.sampler, seed)?;
    let adapter = ctx.adapter(&a.adapter)?;
    let backend_kind = if a.adapter.adapter.is_some() {
        BackendKind::Adapter
    } else {
        ctx.file.backend.unwrap_or(BackendKind::Baseline)
    };
    let hp = ctx.baseline(&a.baseline, seed)?;
    let wordlist = a.wordlist.clone().or_else(|| ctx.file.wordlist.clone());
    let buckets = ctx.buckets()?;

    fs::create_dir_all(&out_dir).map_err(|e| crate::error::DataError::io(&out_dir, e))?;
    let l = RunLayout::new(&out_dir);

    pipeline::sample_to_files(&sampler, &input_a, &input_b, &l.sample(), Some(&l.summary()))
        .map_err(|e| e.in_stage("sample"))?;
    let backend = match backend_kind {
        BackendKind::Baseline => {
            Backend::Baseline(pipeline::train_from_file(&l.sample(), &hp, &l.model()).map_err(|e| e.in_stage("train"))?)
        }
        BackendKind::Adapter => {
            let cfg = adapter.clone().ok_or_else(|| Error::config("backend \"adapter\" needs an adapter command"))?;
            Backend::Adapter(AdapterClient::spawn(cfg).map_err(|e| Error::from(e).in_stage("predict"))?)
        }
    };
    pipeline::predict_to_file(&backend, &test, &l.predictions()).map_err(|e| e.in_stage("predict"))?;
    drop(backend);
    pipeline::postprocess_files(&l.predictions(), &test, wordlist.as_deref(), &l.postprocessed(), Some(&l.override_log()))
        .map_err(|e| e.in_stage("postprocess"))?;
    pipeline::evaluate_files(&test, &l.postprocessed(), Some(&l.evaluation()), Some(&l.confusion()))
        .map_err(|e| e.in_stage("evaluate"))?;
    let files = ReportFiles {
        gold: &test,
        predictions: &l.postprocessed(),
        override_log: Some(&l.override_log()),
        summary: Some(&l.summary()),
        report_out: &l.report(),
        buckets_out: Some(&l.buckets()),
    };
    let report = pipeline::report_files(&files, &buckets).map_err(|e| e.in_stage("report"))?;

    let resolved = resolved_config(ctx, seed, backend_kind, &[&input_a, &input_b, &test, &out_dir], wordlist, &sampler, &hp, adapter);
    fs::write(l.config(), resolved.to_toml()).map_err(|e| crate::error::DataError::io(l.config(), e))?;
    print(&report);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn resolved_config(
    ctx: &Context,
    seed: u64,
    backend: BackendKind,
    paths: &[&Path; 4],
    wordlist: Option<PathBuf>,
    sampler: &SamplerConfig,
    hp: &BaselineHyperparams,
    adapter: Option<AdapterConfig>,
) -> PipelineConfig {
    let mut c = ctx.file.clone();
    c.seed = Some(seed);
    c.backend = Some(backend);
    c.wordlist = wordlist;
    c.paths.input_a = Some(paths[0].to_path_buf());
    c.paths.input_b = Some(paths[1].to_path_buf());
    c.paths.test = Some(paths[2].to_path_buf());
    c.paths.out_dir = Some(paths[3].to_path_buf());
    c.sampler.s_low = Some(sampler.s_low);
    c.sampler.s_high = Some(sampler.s_high);
    c.sampler.label_threshold = Some(sampler.label_threshold);
    c.sampler.balance = Some(sampler.balance);
    c.baseline.feature_dim = Some(hp.feature_dim);
    c.baseline.ngram_min = Some(hp.ngram_min);
    c.baseline.ngram_max = Some(hp.ngram_max);
    c.baseline.word_unigrams = Some(hp.word_unigrams);
    c.baseline.epochs = Some(hp.epochs);
    c.baseline.learning_rate = Some(hp.learning_rate);
    c.adapter = adapter.map(|a| AdapterSection {
        command: Some(a.command.iter().map(|s| shlex::try_quote(s).map(|q| q.into_owned()).unwrap_or_else(|_| s.clone())).collect::<Vec<_>>().join(" ")),
        timeout_secs: Some(a.timeout.as_secs_f64()),
        training: a.training,
    });
    c
}

pub fn execute(cli: &Cli) -> Result<()> {
    let ctx = Context::load(cli)?;
    match &cli.command {
        Command::Sample(a) => cmd_sample(&ctx, a),
        Command::Train(a) => cmd_train(&ctx, a),
        Command::Predict(a) => cmd_predict(&ctx, a),
        Command::Postprocess(a) => cmd_postprocess(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Report(a) => cmd_report(&ctx, a),
        Command::Sweep(a) => cmd_sweep(&ctx, a),
        Command::Run(a) => cmd_run(&ctx, a),
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("noisy-offense: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_flag_parses() {
        assert_eq!(parse_interval("0.1,0.2").unwrap(), Interval { s_low: 0.1, s_high: 0.2 });
        assert!(parse_interval("0.1").is_err());
    }

    #[test]
    fn default_grid_has_every_ordered_pair() {
        let g = default_candidates();
        assert_eq!(g.len(), 55);
        assert!(g.iter().all(|i| i.s_low < i.s_high && i.s_high <= 0.5 + 1e-12));
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
