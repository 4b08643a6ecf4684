//! Text serialization of [`LinearModel`].
//!
//! ```text
//! noisy-offense-model v1
//! feature_dim<TAB>1048576
//! ngram_min<TAB>3
//! ngram_max<TAB>5
//! word_unigrams<TAB>true
//! epochs<TAB>5
//! learning_rate<TAB>0.1
//! seed<TAB>42
//! bias<TAB>-0.0123
//! weights<TAB>N
//! <index><TAB><weight>        (N lines, increasing index)
//! ```
//!
//! Reals use Rust's shortest round-trip formatting, so reloading a model
//! reproduces every parameter bit for bit.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use noisy_offense_core::classifier::{BaselineHyperparams, LinearModel};

pub const MAGIC: &str = "noisy-offense-model";
pub const VERSION: &str = "v1";

#[derive(Debug, thiserror::Error)]
pub enum ModelFileError {
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("{path}: unsupported model version: expected {MAGIC} {expected}, found {found:?}")]
    Version { path: String, expected: &'static str, found: String },
    #[error("{path}:{line}: {message}")]
    Format { path: String, line: usize, message: String },
}

pub fn write_model<W: Write>(mut w: W, model: &LinearModel) -> io::Result<()> {
    let hp = model.hyperparams();
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "feature_dim\t{}", hp.feature_dim)?;
    writeln!(w, "ngram_min\t{}", hp.ngram_min)?;
    writeln!(w, "ngram_max\t{}", hp.ngram_max)?;
    writeln!(w, "word_unigrams\t{}", hp.word_unigrams)?;
    writeln!(w, "epochs\t{}", hp.epochs)?;
    writeln!(w, "learning_rate\t{}", hp.learning_rate)?;
    writeln!(w, "seed\t{}", hp.seed)?;
    writeln!(w, "bias\t{}", model.bias())?;
    writeln!(w, "weights\t{}", model.weights().len())?;
    for (i, v) in model.weights() {
        writeln!(w, "{i}\t{v}")?;
    }
    w.flush()
}

pub fn save_model(model: &LinearModel, path: &Path) -> Result<(), ModelFileError> {
    let io_err = |source| ModelFileError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io_err)?;
    write_model(io::BufWriter::new(file), model).map_err(io_err)
}

struct Lines<R> {
    inner: io::Lines<R>,
    path: String,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn format(&self, message: impl Into<String>) -> ModelFileError {
        ModelFileError::Format { path: self.path.clone(), line: self.line, message: message.into() }
    }

    fn next_line(&mut self, what: &str) -> Result<String, ModelFileError> {
        self.line += 1;
        match self.inner.next() {
            Some(Ok(l)) => Ok(l),
            Some(Err(source)) => Err(ModelFileError::Io { path: self.path.clone(), source }),
            None => Err(self.format(format!("truncated file: expected {what}"))),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, ModelFileError> {
        let l = self.next_line(key)?;
        let value = l
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix('\t'))
            .ok_or_else(|| self.format(format!("expected field {key:?}, found {l:?}")))?;
        value.parse().map_err(|_| self.format(format!("{key}: cannot parse {value:?}")))
    }
}

pub fn read_model<R: BufRead>(reader: R, path: &str) -> Result<LinearModel, ModelFileError> {
    let mut lines = Lines { inner: reader.lines(), path: path.to_string(), line: 0 };
    let header = lines.next_line("header").map_err(|e| match e {
        ModelFileError::Format { .. } => {
            ModelFileError::Version { path: path.to_string(), expected: VERSION, found: String::new() }
        }
        other => other,
    })?;
    if header != format!("{MAGIC} {VERSION}") {
        let found = header.strip_prefix(MAGIC).map(str::trim).unwrap_or(&header).to_string();
        return Err(ModelFileError::Version { path: path.to_string(), expected: VERSION, found });
    }

    let hp = BaselineHyperparams {
        feature_dim: lines.field("feature_dim")?,
        ngram_min: lines.field("ngram_min")?,
        ngram_max: lines.field("ngram_max")?,
        word_unigrams: lines.field("word_unigrams")?,
        epochs: lines.field("epochs")?,
        learning_rate: lines.field("learning_rate")?,
        seed: lines.field("seed")?,
    };
    let bias: f64 = lines.field("bias")?;
    let count: usize = lines.field("weights")?;

    let mut weights = BTreeMap::new();
    let mut last: Option<u32> = None;
    for k in 0..count {
        let l = lines.next_line(&format!("weight {} of {count}", k + 1))?;
        let (i, v) = l.split_once('\t').ok_or_else(|| lines.format("expected index<TAB>weight"))?;
        let i: u32 = i.parse().map_err(|_| lines.format(format!("bad index {i:?}")))?;
        let v: f64 = v.parse().map_err(|_| lines.format(format!("bad weight {v:?}")))?;
        if last.is_some_and(|p| p >= i) {
            return Err(lines.format("indices must be strictly increasing"));
        }
        last = Some(i);
        weights.insert(i, v);
    }
    lines.line += 1;
    if let Some(extra) = lines.inner.next() {
        let extra = extra.map_err(|source| ModelFileError::Io { path: path.to_string(), source })?;
        return Err(lines.format(format!("unexpected trailing line {extra:?}")));
    }
    LinearModel::from_parts(hp, bias, weights).map_err(|e| lines.format(e.to_string()))
}

pub fn load_model(path: &Path) -> Result<LinearModel, ModelFileError> {
    let p = path.display().to_string();
    let file = File::open(path).map_err(|source| ModelFileError::Io { path: p.clone(), source })?;
    read_model(BufReader::new(file), &p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    fn model() -> LinearModel {
        let hp = BaselineHyperparams { feature_dim: 1 << 10, seed: 9, learning_rate: 0.3, ..Default::default() };
        let weights = [(3u32, 0.1 + 0.2), (17, -1e-300), (1023, 12345.678)].into_iter().collect();
        LinearModel::from_parts(hp, -0.5 / 3.0, weights).unwrap()
    }

    fn bytes(m: &LinearModel) -> Vec<u8> {
        let mut buf = Vec::new();
        write_model(&mut buf, m).unwrap();
        buf
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let back = read_model(Cursor::new(bytes(&m)), "m").unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let full = bytes(&model());
        let text = String::from_utf8(full).unwrap();
        let cut: String = text.lines().take(11).map(|l| format!("{l}\n")).collect();
        let err = read_model(Cursor::new(cut), "m").unwrap_err();
        assert!(err.to_string().contains("truncated"), "{err}");
        let err = read_model(Cursor::new(""), "m").unwrap_err();
        assert!(matches!(err, ModelFileError::Version { .. }));
    }

    #[test]
    fn version_mismatch_names_both() {
        let text = String::from_utf8(bytes(&model())).unwrap().replacen("v1", "v7", 1);
        let err = read_model(Cursor::new(text), "m").unwrap_err();
        match &err {
            ModelFileError::Version { expected, found, .. } => {
                assert_eq!(*expected, "v1");
                assert_eq!(found, "v7");
            }
            other => panic!("{other}"),
        }
        assert!(err.to_string().contains("v1") && err.to_string().contains("v7"));
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let text = String::from_utf8(bytes(&model())).unwrap().replace("1023\t", "4096\t");
        assert!(read_model(Cursor::new(text), "m").is_err());
    }
}
