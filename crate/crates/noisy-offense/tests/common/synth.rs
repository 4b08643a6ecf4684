//! Seeded synthetic corpora shared by tests and the demo example.
#![allow(dead_code)]

use std::path::{Path, PathBuf};

use noisy_offense::tsv;
use noisy_offense_core::{GoldRecord, Label, TweetRecord};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn word(rng: &mut ChaCha8Rng, len: usize) -> String {
    (0..len).map(|_| rng.random_range(b'a'..=b'z') as char).collect()
}

pub fn vocab(rng: &mut ChaCha8Rng, n: usize) -> Vec<String> {
    (0..n)
        .map(|_| {
            let len = rng.random_range(5..=8);
            word(rng, len)
        })
        .collect()
}

/// Noisy records with uniform `avg_conf` and `std_conf` and random texts.
pub fn uniform_noisy(n: usize, seed: u64) -> Vec<TweetRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let text = format!("tweet {i} {}", word(&mut r, 6));
            TweetRecord::new(format!("a{i}"), text, r.random_range(0.0..=1.0), r.random_range(0.0..=1.0)).unwrap()
        })
        .collect()
}

/// Clean offensive records for the auxiliary corpus.
pub fn clean_offensive(n: usize, seed: u64) -> Vec<TweetRecord> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| TweetRecord::new(format!("b{i}"), format!("clean {}", word(&mut r, 7)), r.random_range(0.5..=1.0), r.random_range(0.0..=0.3)).unwrap())
        .collect()
}

/// Two classes with disjoint vocabularies.
pub fn separable(n: usize, seed: u64) -> Vec<GoldRecord> {
    let mut r = rng(seed);
    let off = vocab(&mut r, 40);
    let not = vocab(&mut r, 40);
    (0..n)
        .map(|i| {
            let label = if i % 2 == 0 { Label::Off } else { Label::Not };
            let v = if label == Label::Off { &off } else { &not };
            let words: Vec<&str> = (0..6).map(|_| v.choose(&mut r).unwrap().as_str()).collect();
            GoldRecord::new(format!("s{i}"), words.join(" "), label).unwrap()
        })
        .collect()
}

/// Corpus where noisy labels get less reliable as `std_conf` grows.
///
/// Every tweet mixes class words with shared filler. Not-offensive tweets may
/// also carry "trap" words; the simulated ensemble disagrees on those
/// (high `std_conf`) and mostly calls them offensive. Test tweets carry true
/// labels, with traps in half of the not-offensive ones.
pub struct NoisyWorld {
    pub noisy: Vec<TweetRecord>,
    pub aux: Vec<TweetRecord>,
    pub test: Vec<GoldRecord>,
}

struct Vocab {
    off: Vec<String>,
    not: Vec<String>,
    filler: Vec<String>,
    traps: Vec<String>,
}

impl Vocab {
    fn new(r: &mut ChaCha8Rng) -> Self {
        Vocab { off: vocab(r, 30), not: vocab(r, 30), filler: vocab(r, 120), traps: vocab(r, 10) }
    }

    fn text(&self, r: &mut ChaCha8Rng, label: Label, trap: bool) -> String {
        let class = if label == Label::Off { &self.off } else { &self.not };
        let mut words: Vec<&str> = Vec::new();
        for _ in 0..2 {
            words.push(class.choose(r).unwrap());
        }
        if trap {
            for _ in 0..2 {
                words.push(self.traps.choose(r).unwrap());
            }
        }
        for _ in 0..5 {
            words.push(self.filler.choose(r).unwrap());
        }
        // Light shuffle by rotation keeps the generator cheap.
        let k = r.random_range(0..words.len());
        words.rotate_left(k);
        words.join(" ")
    }
}

fn noisy_record(id: String, text: String, noisy_label: Label, std: f64, r: &mut ChaCha8Rng) -> TweetRecord {
    let avg = match noisy_label {
        Label::Off => r.random_range(0.5..=1.0),
        Label::Not => r.random_range(0.0..0.5),
    };
    TweetRecord::new(id, text, avg, std).unwrap()
}

impl NoisyWorld {
    pub fn generate(n_noisy: usize, n_aux: usize, n_test: usize, seed: u64) -> Self {
        let mut r = rng(seed);
        let v = Vocab::new(&mut r);
        let mut noisy = Vec::with_capacity(n_noisy);
        for i in 0..n_noisy {
            let truth = if r.random_bool(0.5) { Label::Off } else { Label::Not };
            let trap = truth == Label::Not && r.random_bool(0.5);
            let text = v.text(&mut r, truth, trap);
            let (std, label) = if trap {
                let std = r.random_range(0.3..=0.5);
                (std, if r.random_bool(0.8) { Label::Off } else { Label::Not })
            } else {
                let std = r.random_range(0.0..=0.5);
                (std, if r.random_bool(std) { truth.swapped() } else { truth })
            };
            noisy.push(noisy_record(format!("a{i}"), text, label, std, &mut r));
        }
        let aux = (0..n_aux)
            .map(|i| {
                let text = v.text(&mut r, Label::Off, false);
                let std = r.random_range(0.0..=0.2);
                noisy_record(format!("b{i}"), text, Label::Off, std, &mut r)
            })
            .collect();
        let test = (0..n_test)
            .map(|i| {
                let truth = if i % 2 == 0 { Label::Off } else { Label::Not };
                let trap = truth == Label::Not && r.random_bool(0.5);
                GoldRecord::new(format!("t{i}"), v.text(&mut r, truth, trap), truth).unwrap()
            })
            .collect();
        NoisyWorld { noisy, aux, test }
    }

    /// Writes `a.tsv`, `b.tsv` and `test.tsv` into `dir`.
    pub fn write(&self, dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
        let a = dir.join("a.tsv");
        let b = dir.join("b.tsv");
        let t = dir.join("test.tsv");
        tsv::write_noisy(tsv::create(&a).unwrap(), &self.noisy).unwrap();
        tsv::write_noisy(tsv::create(&b).unwrap(), &self.aux).unwrap();
        tsv::write_gold(tsv::create(&t).unwrap(), &self.test).unwrap();
        (a, b, t)
    }
}

pub fn write_noisy(path: &Path, records: &[TweetRecord]) {
    tsv::write_noisy(tsv::create(path).unwrap(), records).unwrap();
}

pub fn write_gold(path: &Path, records: &[GoldRecord]) {
    tsv::write_gold(tsv::create(path).unwrap(), records).unwrap();
}
