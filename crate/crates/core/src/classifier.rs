//! Native linear baseline: logistic regression over hashed n-gram features,
//! trained by plain stochastic gradient descent.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{normalize_text, GoldRecord, LabeledExample};
use crate::features::{featurize, FeatureConfig, SparseVector};
use crate::label::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineHyperparams {
    pub feature_dim: u32,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub word_unigrams: bool,
    pub epochs: u32,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for BaselineHyperparams {
    fn default() -> Self {
        BaselineHyperparams {
            feature_dim: 1 << 20,
            ngram_min: 3,
            ngram_max: 5,
            word_unigrams: true,
            epochs: 5,
            learning_rate: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HyperparamError {
    #[error("feature_dim {0} is not a positive power of two")]
    FeatureDim(u32),
    #[error("n-gram range {min}..={max} is invalid (need 1 <= min <= max)")]
    NgramRange { min: usize, max: usize },
    #[error("learning rate {0} must be finite and positive")]
    LearningRate(f64),
}

impl BaselineHyperparams {
    pub fn validate(&self) -> Result<(), HyperparamError> {
        if !self.feature_dim.is_power_of_two() {
            return Err(HyperparamError::FeatureDim(self.feature_dim));
        }
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(HyperparamError::NgramRange { min: self.ngram_min, max: self.ngram_max });
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(HyperparamError::LearningRate(self.learning_rate));
        }
        Ok(())
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig {
            feature_dim: self.feature_dim,
            ngram_min: self.ngram_min,
            ngram_max: self.ngram_max,
            word_unigrams: self.word_unigrams,
        }
    }
}

/// Anything the baseline can learn from.
pub trait LabeledText {
    fn text(&self) -> &str;
    fn label(&self) -> Label;
}

impl LabeledText for LabeledExample {
    fn text(&self) -> &str {
        &self.text
    }
    fn label(&self) -> Label {
        self.label
    }
}

impl LabeledText for GoldRecord {
    fn text(&self) -> &str {
        &self.text
    }
    fn label(&self) -> Label {
        self.label
    }
}

/// Classifier output for one text. `score` is the probability of OFF.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub label: Label,
    pub score: f64,
    pub overridden: bool,
    pub override_term: Option<String>,
}

impl Prediction {
    /// Prediction whose label follows the score at the 0.5 threshold.
    pub fn from_score(id: impl Into<String>, score: f64) -> Self {
        Prediction { id: id.into(), label: Label::from_score(score), score, overridden: false, override_term: None }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrainError {
    #[error("no training examples")]
    Empty,
    #[error("training data contains only {0} examples; both classes are required")]
    SingleClass(Label),
    #[error(transparent)]
    Hyperparams(#[from] HyperparamError),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("weight index {index} is not below feature_dim {feature_dim}")]
    IndexOutOfRange { index: u32, feature_dim: u32 },
    #[error("non-finite parameter")]
    NonFinite,
    #[error(transparent)]
    Hyperparams(#[from] HyperparamError),
}

/// A trained model. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    hyperparams: BaselineHyperparams,
    weights: BTreeMap<u32, f64>,
    bias: f64,
}

pub fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + libm::exp(-z))
    } else {
        let e = libm::exp(z);
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + libm::log1p(libm::exp(-x))
    } else {
        libm::log1p(libm::exp(x))
    }
}

fn target(label: Label) -> f64 {
    match label {
        Label::Off => 1.0,
        Label::Not => 0.0,
    }
}

/// Cross-entropy of one example given its margin `w·x + b`.
pub fn logistic_loss(margin: f64, label: Label) -> f64 {
    match label {
        Label::Off => softplus(-margin),
        Label::Not => softplus(margin),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGradient {
    pub loss: f64,
    /// Partial derivatives for the nonzero features of the example.
    pub weights: Vec<(u32, f64)>,
    pub bias: f64,
}

/// Loss and its gradient with respect to the dense weights and the bias:
/// `d/dw_i = (p - y) x_i`, `d/db = p - y`.
pub fn loss_gradient(weights: &[f64], bias: f64, x: &SparseVector, label: Label) -> LossGradient {
    let margin = x.dot_dense(weights) + bias;
    let residual = logistic(margin) - target(label);
    LossGradient {
        loss: logistic_loss(margin, label),
        weights: x.entries().iter().map(|&(i, v)| (i, residual * v)).collect(),
        bias: residual,
    }
}

/// Trains with per-epoch mean loss recorded after every epoch.
pub fn train_with_history<T: LabeledText>(
    examples: &[T],
    hp: &BaselineHyperparams,
) -> Result<(LinearModel, Vec<f64>), TrainError> {
    hp.validate()?;
    let first = examples.first().ok_or(TrainError::Empty)?.label();
    if examples.iter().all(|e| e.label() == first) {
        return Err(TrainError::SingleClass(first));
    }

    let fcfg = hp.feature_config();
    let data: Vec<(SparseVector, Label)> = examples
        .iter()
        .map(|e| (featurize(&normalize_text(e.text()), &fcfg), e.label()))
        .collect();

    let mut weights = vec![0.0f64; hp.feature_dim as usize];
    let mut bias = 0.0f64;
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
    let mut history = Vec::with_capacity(hp.epochs as usize);

    for _ in 0..hp.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = &data[i];
            let g = loss_gradient(&weights, bias, x, *label);
            for (idx, d) in g.weights {
                weights[idx as usize] -= hp.learning_rate * d;
            }
            bias -= hp.learning_rate * g.bias;
        }
        let total: f64 = data.iter().map(|(x, l)| logistic_loss(x.dot_dense(&weights) + bias, *l)).sum();
        history.push(total / data.len() as f64);
    }

    let sparse = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w != 0.0)
        .map(|(i, &w)| (i as u32, w))
        .collect();
    Ok((LinearModel { hyperparams: *hp, weights: sparse, bias }, history))
}

/// Online logistic regression over seeded-shuffled epochs. Deterministic in
/// `(examples, hp)`.
pub fn train_baseline<T: LabeledText>(examples: &[T], hp: &BaselineHyperparams) -> Result<LinearModel, TrainError> {
    train_with_history(examples, hp).map(|(m, _)| m)
}

impl LinearModel {
    pub fn from_parts(
        hyperparams: BaselineHyperparams,
        bias: f64,
        weights: BTreeMap<u32, f64>,
    ) -> Result<Self, ModelError> {
        hyperparams.validate()?;
        if !bias.is_finite() {
            return Err(ModelError::NonFinite);
        }
        for (&index, w) in &weights {
            if index >= hyperparams.feature_dim {
                return Err(ModelError::IndexOutOfRange { index, feature_dim: hyperparams.feature_dim });
            }
            if !w.is_finite() {
                return Err(ModelError::NonFinite);
            }
        }
        Ok(LinearModel { hyperparams, weights, bias })
    }

    /// A model with every parameter zero; scores 0.5 everywhere.
    pub fn zero(hyperparams: BaselineHyperparams) -> Self {
        LinearModel { hyperparams, weights: BTreeMap::new(), bias: 0.0 }
    }

    pub fn hyperparams(&self) -> &BaselineHyperparams {
        &self.hyperparams
    }

    pub fn weights(&self) -> &BTreeMap<u32, f64> {
        &self.weights
    }

    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn margin(&self, x: &SparseVector) -> f64 {
        x.entries().iter().map(|(i, v)| self.weights.get(i).copied().unwrap_or(0.0) * v).sum::<f64>() + self.bias
    }

    pub fn score(&self, text: &str) -> f64 {
        let x = featurize(&normalize_text(text), &self.hyperparams.feature_config());
        logistic(self.margin(&x))
    }

    pub fn predict(&self, id: impl Into<String>, text: &str) -> Prediction {
        Prediction::from_score(id, self.score(text))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Source;
    use alloc::format;
    use proptest::prelude::*;

    fn hp() -> BaselineHyperparams {
        BaselineHyperparams { feature_dim: 1 << 16, seed: 11, ..BaselineHyperparams::default() }
    }

    fn example(id: usize, text: String, label: Label) -> LabeledExample {
        LabeledExample { id: format!("{id}"), text, label, source: Source::NoisyA }
    }

    /// Two disjoint vocabularies: class is recoverable from any single word.
    fn separable(n_per_class: usize, seed: u64) -> Vec<LabeledExample> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for i in 0..2 * n_per_class {
            let label = if i % 2 == 0 { Label::Off } else { Label::Not };
            let prefix = if label == Label::Off { "zorv" } else { "plim" };
            let words: Vec<String> = (0..6).map(|_| format!("{prefix}{}", rng.random_range(0..40))).collect();
            out.push(example(i, words.join(" "), label));
        }
        out
    }

    #[test]
    fn zero_model_scores_half_and_predicts_off() {
        let m = LinearModel::zero(hp());
        let p = m.predict("x", "anything at all");
        assert_eq!(p.score, 0.5);
        assert_eq!(p.label, Label::Off);
        assert!(!p.overridden);
    }

    #[test]
    fn single_class_is_rejected() {
        let data = vec![example(0, "a b c".into(), Label::Off), example(1, "d e f".into(), Label::Off)];
        assert_eq!(train_baseline(&data, &hp()), Err(TrainError::SingleClass(Label::Off)));
        assert_eq!(train_baseline::<LabeledExample>(&[], &hp()), Err(TrainError::Empty));
    }

    #[test]
    fn bad_hyperparams_are_rejected() {
        let data = separable(5, 1);
        let bad = BaselineHyperparams { feature_dim: 1000, ..hp() };
        assert!(matches!(train_baseline(&data, &bad), Err(TrainError::Hyperparams(_))));
        let bad = BaselineHyperparams { ngram_min: 4, ngram_max: 3, ..hp() };
        assert!(matches!(train_baseline(&data, &bad), Err(TrainError::Hyperparams(_))));
    }

    #[test]
    fn learns_separable_data() {
        let train = separable(200, 1);
        let (model, history) = train_with_history(&train, &hp()).unwrap();
        let acc = |set: &[LabeledExample]| {
            set.iter().filter(|e| model.predict(&e.id, &e.text).label == e.label).count() as f64 / set.len() as f64
        };
        assert!(acc(&train) >= 0.99);
        assert!(acc(&separable(100, 2)) >= 0.95);
        assert!(history.last().unwrap() <= history.first().unwrap());
    }

    #[test]
    fn training_is_deterministic() {
        let train = separable(30, 3);
        assert_eq!(train_baseline(&train, &hp()).unwrap(), train_baseline(&train, &hp()).unwrap());
    }

    #[test]
    fn from_parts_checks_indices() {
        let mut w = BTreeMap::new();
        w.insert(1 << 16, 1.0);
        assert!(matches!(LinearModel::from_parts(hp(), 0.0, w), Err(ModelError::IndexOutOfRange { .. })));
    }

    #[test]
    fn gradient_matches_central_differences() {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let weights: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let bias = 0.3;
        let x = SparseVector::from_pairs((0..10).map(|i| (i, rng.random_range(-2.0..2.0))).collect());
        for label in Label::ALL {
            let g = loss_gradient(&weights, bias, &x, label);
            let loss_at = |w: &[f64], b: f64| logistic_loss(x.dot_dense(w) + b, label);
            let h = 1e-5;
            for &(i, analytic) in &g.weights {
                let (mut up, mut down) = (weights.clone(), weights.clone());
                up[i as usize] += h;
                down[i as usize] -= h;
                let numeric = (loss_at(&up, bias) - loss_at(&down, bias)) / (2.0 * h);
                let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-12);
                assert!(rel < 1e-5, "feature {i}: {analytic} vs {numeric}");
            }
            let numeric = (loss_at(&weights, bias + h) - loss_at(&weights, bias - h)) / (2.0 * h);
            assert!((g.bias - numeric).abs() / g.bias.abs().max(1e-12) < 1e-5);
        }
    }

    proptest! {
        #[test]
        fn logistic_is_monotone_and_bounded(a in -40.0f64..40.0, d in 1e-3f64..10.0) {
            let (lo, hi) = (logistic(a), logistic(a + d));
            prop_assert!(lo <= hi);
            if a.abs() < 15.0 {
                prop_assert!(lo < hi);
            }
            prop_assert!((0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi));
        }

        #[test]
        fn label_follows_score(bias in -3.0f64..3.0, text in "[a-z ]{0,20}") {
            let mut m = LinearModel::zero(hp());
            m.bias = bias;
            let p = m.predict("x", &text);
            prop_assert_eq!(p.label == Label::Off, p.score >= 0.5);
        }
    }
}
