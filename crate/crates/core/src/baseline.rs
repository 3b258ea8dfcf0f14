//! Bag-of-words features with multinomial logistic regression.

use std::collections::HashMap;

use ndarray::{Array1, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prediction::{softmax, Prediction};

pub const DEFAULT_BOW_SIZE: usize = 1800;

/// The most frequent training tokens, mapped to feature indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BowVocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl BowVocabulary {
    /// Keeps the `size` most frequent tokens of the training documents.
    /// Frequency ties go to the token seen first. Feature indices follow
    /// descending frequency.
    pub fn build<'a, I, D>(documents: I, size: usize) -> Result<Self>
    where
        I: IntoIterator<Item = D>,
        D: IntoIterator<Item = &'a String>,
    {
        let mut order: Vec<&str> = Vec::new();
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for doc in documents {
            for tok in doc {
                let c = counts.entry(tok.as_str()).or_insert_with(|| {
                    order.push(tok.as_str());
                    0
                });
                *c += 1;
            }
        }
        if order.is_empty() {
            return Err(Error::Empty("bag-of-words training documents".into()));
        }
        let mut ranked: Vec<(usize, &str)> = order.iter().enumerate().map(|(i, &t)| (i, t)).collect();
        ranked.sort_by(|a, b| counts[b.1].cmp(&counts[a.1]).then(a.0.cmp(&b.0)));
        Self::from_tokens(ranked.into_iter().take(size).map(|(_, t)| t.to_string()).collect())
    }

    pub fn from_tokens(tokens: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, t) in tokens.iter().enumerate() {
            if index.insert(t.clone(), i).is_some() {
                return Err(Error::Config(format!("duplicate bag-of-words token '{t}'")));
            }
        }
        Ok(BowVocabulary { tokens, index })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn index(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

/// Sparse term counts, sorted by feature index.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCounts {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseCounts {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, c) in &self.entries {
            v[i] += c;
        }
        v
    }
}

/// Raw counts of in-vocabulary tokens. Unknown tokens contribute nothing.
pub fn build_bow_features<S: AsRef<str>>(tokens: &[S], vocab: &BowVocabulary) -> SparseCounts {
    let mut counts: HashMap<usize, f64> = HashMap::new();
    for t in tokens {
        if let Some(i) = vocab.index(t.as_ref()) {
            *counts.entry(i).or_insert(0.0) += 1.0;
        }
    }
    let mut entries: Vec<(usize, f64)> = counts.into_iter().collect();
    entries.sort_unstable_by_key(|&(i, _)| i);
    SparseCounts { dim: vocab.len(), entries }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub vocab_size: usize,
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            vocab_size: DEFAULT_BOW_SIZE,
            l2_lambda: 1e-4,
            learning_rate: 0.1,
            epochs: 50,
            batch_size: 128,
            seed: 0,
        }
    }
}

impl LogRegConfig {
    pub fn validate(&self) -> Result<()> {
        if self.vocab_size == 0 || self.batch_size == 0 {
            return Err(Error::Config("vocab_size and batch_size must be at least 1".into()));
        }
        if self.learning_rate.is_nan() || self.learning_rate <= 0.0 || self.l2_lambda.is_nan() || self.l2_lambda < 0.0 {
            return Err(Error::Config("learning_rate must be positive and l2_lambda non-negative".into()));
        }
        Ok(())
    }
}

/// `features × classes` weights plus a bias per class.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl LinearModel {
    pub fn zeros(num_features: usize, num_classes: usize) -> Self {
        LinearModel {
            weights: Array2::zeros((num_features, num_classes)),
            bias: Array1::zeros(num_classes),
        }
    }

    pub fn num_features(&self) -> usize {
        self.weights.nrows()
    }

    pub fn num_classes(&self) -> usize {
        self.bias.len()
    }

    fn scores(&self, x: &SparseCounts) -> Vec<f64> {
        let mut z = self.bias.to_vec();
        for &(i, c) in &x.entries {
            for (zk, w) in z.iter_mut().zip(self.weights.row(i)) {
                *zk += c * w;
            }
        }
        z
    }
}

/// Softmax of the linear scores.
pub fn predict_logreg(model: &LinearModel, features: &SparseCounts) -> Result<Prediction> {
    if features.dim != model.num_features() {
        return Err(Error::Shape(format!(
            "feature vector has {} entries, model expects {}",
            features.dim,
            model.num_features()
        )));
    }
    Ok(Prediction::new(softmax(&model.scores(features))))
}

/// Mean cross-entropy plus `λ/2 · ‖W‖²`.
pub fn logreg_loss(model: &LinearModel, features: &[SparseCounts], labels: &[usize], l2_lambda: f64) -> f64 {
    let ce: f64 = features
        .iter()
        .zip(labels)
        .map(|(x, &y)| -softmax(&model.scores(x))[y].max(f64::MIN_POSITIVE).ln())
        .sum();
    let reg = 0.5 * l2_lambda * model.weights.iter().map(|w| w * w).sum::<f64>();
    ce / features.len() as f64 + reg
}

/// Multinomial logistic regression by mini-batch gradient descent.
///
/// Samples are reshuffled every epoch from a stream seeded with
/// `config.seed`. The bias is not regularized.
pub fn train_logreg(
    features: &[SparseCounts],
    labels: &[usize],
    num_classes: usize,
    config: &LogRegConfig,
) -> Result<LinearModel> {
    config.validate()?;
    if features.len() != labels.len() {
        return Err(Error::Shape(format!("{} feature vectors but {} labels", features.len(), labels.len())));
    }
    let Some(first) = features.first() else {
        return Err(Error::Empty("logistic regression training set".into()));
    };
    let dim = first.dim;
    if features.iter().any(|x| x.dim != dim) {
        return Err(Error::Shape("feature vectors differ in dimension".into()));
    }
    if let Some(&bad) = labels.iter().find(|&&y| y >= num_classes) {
        return Err(Error::UnknownCategory(bad.to_string()));
    }
    if labels.iter().all(|&y| y == labels[0]) {
        return Err(Error::DeficientCategory {
            category: labels[0].to_string(),
            reason: "logistic regression needs at least two categories".into(),
        });
    }

    let mut model = LinearModel::zeros(dim, num_classes);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..features.len()).collect();
    let mut grad_w: HashMap<usize, Vec<f64>> = HashMap::new();
    let mut rows: Vec<usize> = Vec::new();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            grad_w.clear();
            let mut grad_b = vec![0.0; num_classes];
            let n = batch.len() as f64;
            for &s in batch {
                let x = &features[s];
                let mut d = softmax(&model.scores(x));
                d[labels[s]] -= 1.0;
                for (gb, dk) in grad_b.iter_mut().zip(&d) {
                    *gb += dk / n;
                }
                for &(i, c) in &x.entries {
                    let g = grad_w.entry(i).or_insert_with(|| vec![0.0; num_classes]);
                    for (gk, dk) in g.iter_mut().zip(&d) {
                        *gk += c * dk / n;
                    }
                }
            }
            let lr = config.learning_rate;
            if config.l2_lambda > 0.0 {
                model.weights *= 1.0 - lr * config.l2_lambda;
            }
            rows.clear();
            rows.extend(grad_w.keys().copied());
            rows.sort_unstable();
            for &i in &rows {
                for (w, g) in model.weights.row_mut(i).iter_mut().zip(&grad_w[&i]) {
                    *w -= lr * g;
                }
            }
            for (b, g) in model.bias.iter_mut().zip(&grad_b) {
                *b -= lr * g;
            }
        }
        if model.weights.iter().chain(model.bias.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("logistic regression weights diverged".into()));
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn counts_in_vocabulary_tokens() {
        let v = BowVocabulary::from_tokens(toks("a b")).unwrap();
        let x = build_bow_features(&toks("a a b"), &v);
        assert_eq!(x.to_dense(), vec![2.0, 1.0]);
        assert_eq!(build_bow_features(&toks("zzz"), &v).entries, vec![]);
    }

    #[test]
    fn top_k_by_frequency() {
        let docs = [toks("c a a b"), toks("a b a a b")];
        let v = BowVocabulary::build(docs.iter(), 2).unwrap();
        assert_eq!(v.tokens(), &toks("a b")[..]);
        // Equal counts keep first-seen order.
        let v = BowVocabulary::build([toks("y x x y z")].iter(), 3).unwrap();
        assert_eq!(v.tokens(), &toks("y x z")[..]);
    }

    #[test]
    fn holdout_only_tokens_map_to_nothing() {
        let v = BowVocabulary::build([toks("train words only")].iter(), 10).unwrap();
        assert!(build_bow_features(&toks("holdout vocabulary"), &v).entries.is_empty());
    }

    fn separable() -> (Vec<SparseCounts>, Vec<usize>) {
        let v = BowVocabulary::from_tokens(toks("a b c x y z")).unwrap();
        let docs = ["a b", "b c a", "c c", "a", "x y", "z y", "x x z", "y"];
        let f = docs.iter().map(|d| build_bow_features(&toks(d), &v)).collect();
        (f, vec![0, 0, 0, 0, 1, 1, 1, 1])
    }

    #[test]
    fn separable_set_is_learned() {
        let (f, y) = separable();
        let config = LogRegConfig { batch_size: 3, ..Default::default() };
        let m = train_logreg(&f, &y, 2, &config).unwrap();
        for (x, &label) in f.iter().zip(&y) {
            assert_eq!(predict_logreg(&m, x).unwrap().label(), label);
        }
    }

    #[test]
    fn same_seed_same_model() {
        let (f, y) = separable();
        let config = LogRegConfig { batch_size: 3, seed: 5, ..Default::default() };
        assert_eq!(train_logreg(&f, &y, 2, &config).unwrap(), train_logreg(&f, &y, 2, &config).unwrap());
    }

    #[test]
    fn single_category_is_an_error() {
        let (f, _) = separable();
        let r = train_logreg(&f, &[1; 8], 2, &LogRegConfig::default());
        assert!(matches!(r, Err(Error::DeficientCategory { .. })));
    }

    #[test]
    fn zero_model_is_uniform() {
        let m = LinearModel::zeros(4, 3);
        let x = SparseCounts { dim: 4, entries: vec![(1, 3.0)] };
        for p in predict_logreg(&m, &x).unwrap().probabilities {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
        let wrong = SparseCounts { dim: 5, entries: vec![] };
        assert!(matches!(predict_logreg(&m, &wrong), Err(Error::Shape(_))));
    }

    #[test]
    fn full_batch_loss_never_increases() {
        let (f, y) = separable();
        let mut prev = f64::INFINITY;
        let mut config = LogRegConfig { batch_size: f.len(), learning_rate: 0.05, epochs: 0, ..Default::default() };
        for epochs in 0..40 {
            config.epochs = epochs;
            let m = train_logreg(&f, &y, 2, &config).unwrap();
            let loss = logreg_loss(&m, &f, &y, config.l2_lambda);
            assert!(loss <= prev + 1e-12, "epoch {epochs}: {loss} > {prev}");
            prev = loss;
        }
    }

    proptest! {
        #[test]
        fn favoured_token_raises_its_class(seed in any::<u64>(), count in 0.0f64..5.0, extra in 0.1f64..5.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (v, c) = (5, 3);
            let model = LinearModel {
                weights: Array2::from_shape_fn((v, c), |_| rng.random_range(-2.0..2.0)),
                bias: Array1::from_shape_fn(c, |_| rng.random_range(-1.0..1.0)),
            };
            let token = rng.random_range(0..v);
            let row = model.weights.row(token);
            let class = (0..c).fold(0, |b, k| if row[k] > row[b] { k } else { b });
            let mut entries: Vec<(usize, f64)> = (0..v).map(|i| (i, rng.random_range(0.0..3.0))).collect();
            entries[token].1 = count;
            let before = predict_logreg(&model, &SparseCounts { dim: v, entries: entries.clone() }).unwrap();
            entries[token].1 = count + extra;
            let after = predict_logreg(&model, &SparseCounts { dim: v, entries }).unwrap();
            prop_assert!(after.probabilities[class] >= before.probabilities[class] - 1e-15);
        }
    }
}
