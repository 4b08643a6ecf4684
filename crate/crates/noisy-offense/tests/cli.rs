mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use common::{run_cli, stderr, stdout};
use noisy_offense_core::{GoldRecord, Label, TweetRecord};
use rand::Rng;

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn small_world(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    common::NoisyWorld::generate(1_500, 100, 200, 21).write(dir)
}

const RUN_FILES: [&str; 11] = [
    "sample.tsv",
    "summary.txt",
    "model.txt",
    "predictions.tsv",
    "postprocessed.tsv",
    "override_log.tsv",
    "evaluation.txt",
    "confusion.tsv",
    "buckets.tsv",
    "report.txt",
    "config.toml",
];

fn wordlist() -> String {
    format!("{}/data/wordlist.txt", env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn sample_summary_matches_counting_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _) = small_world(dir.path());
    let out = dir.path().join("sample.tsv");
    let summary = dir.path().join("summary.txt");
    let o = run_cli(&[
        "sample", "--input-a", s(&a), "--input-b", s(&b), "--s-low", "0.1", "--s-high", "0.2", "--seed", "5", "--out", s(&out),
        "--summary", s(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));

    // Count straight from the raw files.
    let rows = |p: &Path| -> Vec<Vec<String>> {
        fs::read_to_string(p).unwrap().lines().skip(1).map(|l| l.split('\t').map(String::from).collect()).collect()
    };
    let a_rows = rows(&a);
    let picked: Vec<&Vec<String>> =
        a_rows.iter().filter(|r| (0.1..=0.2).contains(&r[3].parse::<f64>().unwrap())).collect();
    let off = picked.iter().filter(|r| r[2].parse::<f64>().unwrap() >= 0.5).count() + rows(&b).len();
    let not = picked.len() + rows(&b).len() - off;
    let want = format!(
        "input_count_a={}\nselected_count={}\naux_count_b={}\nremoved_for_balance={}\nfinal_count={}\nfinal_off={}\nfinal_not={}\n",
        a_rows.len(),
        picked.len(),
        rows(&b).len(),
        off.abs_diff(not),
        2 * off.min(not),
        off.min(not),
        off.min(not),
    );
    assert_eq!(fs::read_to_string(&summary).unwrap(), want);
    assert_eq!(stdout(&o), want);
}

#[test]
fn inverted_interval_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _) = small_world(dir.path());
    let o = run_cli(&[
        "sample", "--input-a", s(&a), "--input-b", s(&b), "--s-low", "0.3", "--s-high", "0.1", "--seed", "1", "--out",
        s(&dir.path().join("o.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("config"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_a_usage_error() {
    let o = run_cli(&["sample", "--input-b", "b.tsv", "--s-low", "0.1", "--s-high", "0.2", "--seed", "1", "--out", "o.tsv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--input-a"), "{}", stderr(&o));
}

#[test]
fn seed_is_required_and_env_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _) = small_world(dir.path());
    let out1 = dir.path().join("o1.tsv");
    let out2 = dir.path().join("o2.tsv");
    let args = |out: &Path| {
        vec!["sample", "--input-a", s(&a), "--input-b", s(&b), "--s-low", "0.1", "--s-high", "0.2", "--out", s(out)]
            .into_iter()
            .map(String::from)
            .collect::<Vec<_>>()
    };
    let o = run_cli(&args(&out1).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("seed"));

    let o = Command::new(common::bin()).args(args(&out1)).env("NOISY_OFFENSE_SEED", "9").output().unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let mut with_flag = args(&out2);
    with_flag.extend(["--seed".to_string(), "9".to_string()]);
    // The flag wins over the environment.
    let o = Command::new(common::bin()).args(&with_flag).env("NOISY_OFFENSE_SEED", "1234").output().unwrap();
    assert!(o.status.success());
    assert_eq!(fs::read(&out1).unwrap(), fs::read(&out2).unwrap());
}

#[test]
fn bad_row_names_file_and_line() {
    let dir = tempfile::tempdir().unwrap();
    let (_, b, _) = small_world(dir.path());
    let a = dir.path().join("bad.tsv");
    fs::write(&a, "id\ttext\tavg_conf\tstd_conf\nx1\tfine\t0.2\t0.1\nx2\tbroken\t0.2\t1.7\n").unwrap();
    let o = run_cli(&[
        "sample", "--input-a", s(&a), "--input-b", s(&b), "--s-low", "0.1", "--s-high", "0.2", "--seed", "1", "--out",
        s(&dir.path().join("o.tsv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.tsv:3"), "{}", stderr(&o));
}

#[test]
fn help_and_unknown_commands() {
    assert_eq!(run_cli(&["--help"]).status.code(), Some(0));
    assert_eq!(run_cli(&["--version"]).status.code(), Some(0));
    assert_eq!(run_cli(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run_cli(&[]).status.code(), Some(1));
}

fn write_preds(path: &Path, rows: &[(&str, Label, f64)]) {
    let preds: Vec<_> = rows
        .iter()
        .map(|&(id, label, score)| {
            let mut p = noisy_offense_core::Prediction::from_score(id, score);
            p.label = label;
            p
        })
        .collect();
    noisy_offense::tsv::write_predictions(noisy_offense::tsv::create(path).unwrap(), &preds).unwrap();
}

#[test]
fn postprocess_without_wordlist_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let texts = dir.path().join("texts.tsv");
    fs::write(&texts, "id\ttext\na\tthe dong\nb\tfine\n").unwrap();
    let preds = dir.path().join("p.tsv");
    write_preds(&preds, &[("a", Label::Not, 0.2), ("b", Label::Off, 0.7)]);
    let out = dir.path().join("out.tsv");
    let log = dir.path().join("log.tsv");
    let o = run_cli(&["postprocess", "--predictions", s(&preds), "--texts", s(&texts), "--out", s(&out), "--log", s(&log)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read(&out).unwrap(), fs::read(&preds).unwrap());
    assert_eq!(fs::read_to_string(&log).unwrap(), "id\tmatched_term\tprior_label\tchanged\n");

    let o = run_cli(&[
        "postprocess", "--predictions", s(&preds), "--texts", s(&texts), "--wordlist", &wordlist(), "--out", s(&out), "--log",
        s(&log),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&out).unwrap().contains("a\tOFF\t0.2\ttrue\tdong"));
    assert_eq!(fs::read_to_string(&log).unwrap(), "id\tmatched_term\tprior_label\tchanged\na\tdong\tNOT\ttrue\n");
}

#[test]
fn evaluate_mismatched_ids_lists_them() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "id\ttext\tlabel\na\tx\tOFF\nb\ty\tNOT\nc\tz\tNOT\n").unwrap();
    let preds = dir.path().join("p.tsv");
    write_preds(&preds, &[("a", Label::Off, 0.9), ("b", Label::Not, 0.1), ("zz", Label::Not, 0.1)]);
    let o = run_cli(&["evaluate", "--gold", s(&gold), "--predictions", s(&preds)]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("\"c\"") && err.contains("\"zz\""), "{err}");
}

#[test]
fn evaluate_prints_class_table() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.tsv");
    fs::write(&gold, "id\ttext\tlabel\na\tx\tOFF\nb\ty\tNOT\n").unwrap();
    let preds = dir.path().join("p.tsv");
    write_preds(&preds, &[("a", Label::Off, 0.9), ("b", Label::Not, 0.1)]);
    let conf = dir.path().join("c.tsv");
    let o = run_cli(&["evaluate", "--gold", s(&gold), "--predictions", s(&preds), "--confusion", s(&conf)]);
    assert!(o.status.success());
    assert!(stdout(&o).ends_with("macro-F1: 1.0000\n"), "{}", stdout(&o));
    assert_eq!(fs::read_to_string(&conf).unwrap(), "gold\\pred\tOFF\tNOT\nOFF\t1\t0\nNOT\t0\t1\n");
}

fn run_into(a: &Path, b: &Path, t: &Path, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec![
        "run", "--input-a", s(a), "--input-b", s(b), "--test", s(t), "--s-low", "0.1", "--s-high", "0.2", "--seed", "11",
        "--feature-dim", "65536", "--out-dir", s(out),
    ];
    args.extend_from_slice(extra);
    run_cli(&args)
}

#[test]
fn run_is_reproducible_and_reports() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, t) = small_world(dir.path());
    let out = dir.path().join("out");
    let wl = wordlist();
    let o = run_into(&a, &b, &t, &out, &["--wordlist", &wl]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).contains("macro-F1: "), "{}", stdout(&o));
    let first: Vec<Vec<u8>> = RUN_FILES.iter().map(|f| fs::read(out.join(f)).unwrap()).collect();
    assert_eq!(fs::read(out.join("report.txt")).unwrap(), o.stdout);

    let o = run_into(&a, &b, &t, &out, &["--wordlist", &wl]);
    assert!(o.status.success());
    for (f, bytes) in RUN_FILES.iter().zip(&first) {
        assert_eq!(&fs::read(out.join(f)).unwrap(), bytes, "{f} differs between runs");
    }

    // The resolved config reproduces the run by itself.
    let again = dir.path().join("again");
    let cfg_text = fs::read_to_string(out.join("config.toml")).unwrap().replace(s(&out), s(&again));
    let cfg = dir.path().join("resolved.toml");
    fs::write(&cfg, cfg_text).unwrap();
    let o = run_cli(&["run", "--config", s(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    for (f, bytes) in RUN_FILES.iter().zip(&first).take(10) {
        assert_eq!(&fs::read(again.join(f)).unwrap(), bytes, "{f} differs when rerun from config");
    }
}

#[test]
fn chained_commands_equal_one_run() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, t) = small_world(dir.path());
    let out = dir.path().join("out");
    let wl = wordlist();
    assert!(run_into(&a, &b, &t, &out, &["--wordlist", &wl]).status.success());

    let c = dir.path().join("chain");
    fs::create_dir(&c).unwrap();
    let p = |f: &str| c.join(f).display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["sample", "--input-a", s(&a), "--input-b", s(&b), "--s-low", "0.1", "--s-high", "0.2", "--seed", "11", "--out"]
            .into_iter()
            .map(String::from)
            .chain([p("sample.tsv"), "--summary".into(), p("summary.txt")])
            .collect(),
        vec!["train".into(), "--train".into(), p("sample.tsv"), "--seed".into(), "11".into(), "--feature-dim".into(), "65536".into(), "--model-out".into(), p("model.txt")],
        vec!["predict".into(), "--model".into(), p("model.txt"), "--input".into(), s(&t).into(), "--out".into(), p("predictions.tsv")],
        vec![
            "postprocess".into(), "--predictions".into(), p("predictions.tsv"), "--texts".into(), s(&t).into(), "--wordlist".into(),
            wl.clone(), "--out".into(), p("postprocessed.tsv"), "--log".into(), p("override_log.tsv"),
        ],
        vec![
            "evaluate".into(), "--gold".into(), s(&t).into(), "--predictions".into(), p("postprocessed.tsv"), "--out".into(),
            p("evaluation.txt"), "--confusion".into(), p("confusion.tsv"),
        ],
        vec![
            "report".into(), "--gold".into(), s(&t).into(), "--predictions".into(), p("postprocessed.tsv"), "--override-log".into(),
            p("override_log.tsv"), "--summary".into(), p("summary.txt"), "--out".into(), p("report.txt"), "--buckets".into(),
            p("buckets.tsv"),
        ],
    ];
    for step in &steps {
        let o = run_cli(&step.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{step:?}: {}", stderr(&o));
    }
    for f in &RUN_FILES[..10] {
        assert_eq!(fs::read(c.join(f)).unwrap(), fs::read(out.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _) = small_world(dir.path());
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        format!("seed = 3\n[paths]\ninput_a = {:?}\ninput_b = {:?}\n[sampler]\ns_low = 0.3\ns_high = 0.1\n", s(&a), s(&b)),
    )
    .unwrap();
    let out = dir.path().join("o.tsv");
    let o = run_cli(&["sample", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    // Only s_low from the flag: [0.2, 0.1] is still inverted.
    let o = run_cli(&["sample", "--config", s(&cfg), "--s-low", "0.2", "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
    let o = run_cli(&["sample", "--config", s(&cfg), "--s-low", "0.05", "--s-high", "0.3", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));

    fs::write(&cfg, "sede = 3\n").unwrap();
    let o = run_cli(&["sample", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn stage_failure_names_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, _) = small_world(dir.path());
    let t = dir.path().join("missing.tsv");
    let o = run_into(&a, &b, &t, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stage predict failed"), "{}", stderr(&o));
}

#[test]
fn adapter_backend_runs_and_protocol_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, t) = small_world(dir.path());
    let stub = common::stub().display().to_string();
    let cmd = format!("{stub} --mode keyword --keyword zzz");
    let out = dir.path().join("out");
    let o = run_into(&a, &b, &t, &out, &["--adapter", &cmd]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(!out.join("model.txt").exists());
    let preds = fs::read_to_string(out.join("predictions.tsv")).unwrap();
    assert!(preds.lines().skip(1).all(|l| l.contains("\tNOT\t")));

    let p = dir.path().join("p.tsv");
    let bad = format!("{stub} --mode wrong-proto");
    let o = run_cli(&["predict", "--adapter", &bad, "--input", s(&t), "--out", s(&p)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let o = run_cli(&["predict", "--input", s(&t), "--out", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
}

/// Labels are trustworthy only for `std_conf` in [0.1, 0.2]; elsewhere they
/// are coin flips.
fn sweep_fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let mut r = common::rng(8);
    let off = common::vocab(&mut r, 20);
    let not = common::vocab(&mut r, 20);
    let text = |r: &mut rand_chacha::ChaCha8Rng, l: Label| {
        let v = if l == Label::Off { &off } else { &not };
        (0..4).map(|_| v[r.random_range(0..v.len())].clone()).collect::<Vec<_>>().join(" ")
    };
    let mut noisy = Vec::new();
    for i in 0..2_000 {
        let truth = if r.random_bool(0.5) { Label::Off } else { Label::Not };
        let std: f64 = r.random_range(0.0..0.5);
        let label = if (0.1..=0.2).contains(&std) || r.random_bool(0.5) { truth } else { truth.swapped() };
        let avg = if label == Label::Off { 0.8 } else { 0.2 };
        noisy.push(TweetRecord::new(format!("a{i}"), text(&mut r, truth), avg, std).unwrap());
    }
    let aux: Vec<TweetRecord> =
        (0..20).map(|i| TweetRecord::new(format!("b{i}"), text(&mut r, Label::Off), 0.9, 0.05).unwrap()).collect();
    let dev: Vec<GoldRecord> = (0..200)
        .map(|i| {
            let l = if i % 2 == 0 { Label::Off } else { Label::Not };
            GoldRecord::new(format!("d{i}"), text(&mut r, l), l).unwrap()
        })
        .collect();
    let (a, b, d) = (dir.join("a.tsv"), dir.join("b.tsv"), dir.join("dev.tsv"));
    common::write_noisy(&a, &noisy);
    common::write_noisy(&b, &aux);
    common::write_gold(&d, &dev);
    (a, b, d)
}

#[test]
fn sweep_finds_the_informative_interval() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, d) = sweep_fixture(dir.path());
    let out = dir.path().join("sweep.tsv");
    let o = run_cli(&[
        "sweep", "--input-a", s(&a), "--input-b", s(&b), "--dev", s(&d), "--seed", "2", "--feature-dim", "65536", "--candidate",
        "0.25,0.35", "--candidate", "0.1,0.2", "--candidate", "0.4,0.5", "--candidate", "0,0.08", "--out", s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("best [0.1, 0.2]"), "{}", stdout(&o));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().nth(1).unwrap().starts_with("0.1\t0.2\t"));
}
