//! Hashed character n-gram and word features.
//!
//! Each feature string is hashed with 64-bit FNV-1a (offset basis
//! `0xcbf29ce484222325`, prime `0x100000001b3`) over a one-byte namespace tag
//! followed by its UTF-8 bytes: `c` for character n-grams, `w` for word
//! unigrams. The hash is reduced modulo the feature dimension, which must be a
//! power of two. Colliding features add their counts.

use alloc::vec::Vec;
use core::hash::Hasher;

use fnv::FnvHasher;

/// Featurizer settings; a subset of the baseline hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureConfig {
    pub feature_dim: u32,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub word_unigrams: bool,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig { feature_dim: 1 << 20, ngram_min: 3, ngram_max: 5, word_unigrams: true }
    }
}

/// Sparse vector with strictly increasing indices and nonzero values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Builds from unsorted `(index, value)` pairs, summing duplicates.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_unstable_by_key(|&(i, _)| i);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            match entries.last_mut() {
                Some((last, acc)) if *last == i => *acc += v,
                _ => entries.push((i, v)),
            }
        }
        entries.retain(|&(_, v)| v != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| dense[i as usize] * v).sum()
    }
}

pub fn feature_hash(tag: u8, s: &str) -> u64 {
    let mut h = FnvHasher::default();
    h.write(&[tag]);
    h.write(s.as_bytes());
    h.finish()
}

/// Featurizes text that has already been through
/// [`normalize_text`](crate::corpus::normalize_text).
pub fn featurize(normalized: &str, cfg: &FeatureConfig) -> SparseVector {
    debug_assert!(cfg.feature_dim.is_power_of_two());
    let mask = u64::from(cfg.feature_dim) - 1;
    let mut pairs = Vec::new();

    // Byte offsets of every char boundary, so n-grams are char-based.
    let bounds: Vec<usize> = normalized.char_indices().map(|(i, _)| i).chain(Some(normalized.len())).collect();
    let n_chars = bounds.len() - 1;
    for n in cfg.ngram_min..=cfg.ngram_max {
        if n > n_chars {
            break;
        }
        for start in 0..=n_chars - n {
            let gram = &normalized[bounds[start]..bounds[start + n]];
            pairs.push(((feature_hash(b'c', gram) & mask) as u32, 1.0));
        }
    }
    if cfg.word_unigrams {
        for word in normalized.split_whitespace() {
            pairs.push(((feature_hash(b'w', word) & mask) as u32, 1.0));
        }
    }
    SparseVector::from_pairs(pairs)
}
