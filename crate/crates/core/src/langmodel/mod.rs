//! Consequence predictor: a bidirectional LSTM over the dynamics text with a
//! multi-label sigmoid head over the vocabulary.

mod adam;
mod config;
mod network;
mod params;
mod train;
mod vocab;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{preprocess, Corpus, PreprocessConfig};

pub use adam::{adam_step, adam_update, AdamHyper, AdamState};
pub use config::LmConfig;
pub use network::{bce_loss, CLAMP};
pub use params::{BiLstmLayer, Dense, LmParams, LstmCell, Tensor};
pub use train::{clip_grad_norm, train};
pub use vocab::{encode, fit_vocab, LmVocabulary, PAD, PAD_ID, UNK, UNK_ID};

#[derive(Debug, Error, PartialEq)]
pub enum LmError {
    #[error("vocabulary: {0}")]
    Vocabulary(String),
    #[error("invalid model config: {0}")]
    Config(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite activation: {0}")]
    NonFinite(String),
    #[error("empty batch")]
    EmptyBatch,
    #[error("no training pairs")]
    NoPairs,
    #[error("training diverged at epoch {epoch}, batch {batch}: {message}")]
    Divergence {
        epoch: usize,
        batch: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, LmError>;

/// One supervised example: encoded dynamics and the set of consequence token
/// ids that should fire.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainPair {
    pub input_ids: Vec<usize>,
    /// Sorted, deduplicated, never PAD.
    pub target_ids: Vec<usize>,
}

impl TrainPair {
    pub fn new(input_ids: Vec<usize>, target_ids: impl IntoIterator<Item = usize>, vocab_len: usize) -> Result<Self> {
        let mut target_ids: Vec<usize> = target_ids.into_iter().collect();
        target_ids.sort_unstable();
        target_ids.dedup();
        if let Some(&bad) = input_ids.iter().chain(&target_ids).find(|&&i| i >= vocab_len) {
            return Err(LmError::Shape(format!("token id {bad} outside vocabulary of {vocab_len}")));
        }
        if target_ids.first() == Some(&PAD_ID) {
            return Err(LmError::Vocabulary("PAD cannot be a target".into()));
        }
        Ok(TrainPair { input_ids, target_ids })
    }

    pub fn multi_hot(&self, vocab_len: usize) -> Vec<f64> {
        let mut y = vec![0.0; vocab_len];
        for &i in &self.target_ids {
            y[i] = 1.0;
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmModel {
    pub config: LmConfig,
    pub vocab: LmVocabulary,
    pub params: LmParams,
    pub adam: AdamState,
}

impl LmModel {
    /// Glorot-initialised model. The output layer has one unit per
    /// vocabulary entry.
    pub fn new<R: Rng>(config: LmConfig, vocab: LmVocabulary, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = LmParams::init(&config, vocab.len(), rng);
        Ok(Self::from_parts(config, vocab, params))
    }

    /// All-zero parameters; every output is exactly 0.5.
    pub fn zeros(config: LmConfig, vocab: LmVocabulary) -> Result<Self> {
        config.validate()?;
        let params = LmParams::zeros(&config, vocab.len());
        Ok(Self::from_parts(config, vocab, params))
    }

    pub fn from_parts(config: LmConfig, vocab: LmVocabulary, params: LmParams) -> Self {
        let adam = AdamState::new(&params);
        LmModel {
            config,
            vocab,
            params,
            adam,
        }
    }

    pub fn vocab_len(&self) -> usize {
        self.params.vocab_len()
    }

    fn mask<R: Rng>(&self, train_mode: bool, rng: &mut R) -> Option<Vec<f64>> {
        (train_mode && self.config.dropout_rate > 0.0)
            .then(|| network::sample_mask(self.config.dense_units, self.config.dropout_rate, rng))
    }

    /// Output probabilities. Dropout is applied only in train mode.
    pub fn forward<R: Rng>(&self, ids: &[usize], train_mode: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mask = self.mask(train_mode, rng);
        Ok(network::forward_cached(&self.params, &self.config, ids, mask)?.probs)
    }

    pub fn forward_eval(&self, ids: &[usize]) -> Result<Vec<f64>> {
        Ok(network::forward_cached(&self.params, &self.config, ids, None)?.probs)
    }

    /// Activations entering the output layer (after dropout in train mode).
    pub fn pre_output<R: Rng>(&self, ids: &[usize], train_mode: bool, rng: &mut R) -> Result<Vec<f64>> {
        let mask = self.mask(train_mode, rng);
        Ok(network::forward_cached(&self.params, &self.config, ids, mask)?.dropped)
    }

    /// Mean loss over the batch without updating anything.
    pub fn loss<R: Rng>(&self, batch: &[TrainPair], train_mode: bool, rng: &mut R) -> Result<f64> {
        if batch.is_empty() {
            return Err(LmError::EmptyBatch);
        }
        let v = self.vocab_len();
        let mut total = 0.0;
        for pair in batch {
            let probs = self.forward(&pair.input_ids, train_mode, rng)?;
            total += bce_loss(&probs, &pair.multi_hot(v))?;
        }
        Ok(total / batch.len() as f64)
    }

    /// Gradient of the batch-mean loss with respect to every parameter, and
    /// that loss. One dropout mask is drawn per example.
    pub fn backward<R: Rng>(&self, batch: &[TrainPair], rng: &mut R) -> Result<(LmParams, f64)> {
        if batch.is_empty() {
            return Err(LmError::EmptyBatch);
        }
        let v = self.vocab_len();
        let scale = 1.0 / batch.len() as f64;
        let mut grads = self.params.zeros_like();
        let mut total = 0.0;
        for pair in batch {
            let mask = self.mask(true, rng);
            let cache = network::forward_cached(&self.params, &self.config, &pair.input_ids, mask)?;
            total += network::backward_example(&self.params, &cache, &pair.multi_hot(v), scale, &mut grads)?;
        }
        if !grads.all_finite() {
            return Err(LmError::NonFinite("gradient".into()));
        }
        Ok((grads, total * scale))
    }
}

/// Turns corpus records into training pairs. Records whose consequence has
/// no in-vocabulary token are skipped.
pub fn build_pairs(corpus: &Corpus, preprocess_cfg: &PreprocessConfig, vocab: &LmVocabulary, seq_len: usize) -> Result<Vec<TrainPair>> {
    let mut pairs = Vec::new();
    for rec in corpus.records() {
        let input = encode(&preprocess(&rec.dynamics, preprocess_cfg), vocab, seq_len);
        let target: Vec<usize> = preprocess(&rec.consequence, preprocess_cfg)
            .iter()
            .filter_map(|t| vocab.id(t))
            .filter(|&i| i != PAD_ID && i != UNK_ID)
            .collect();
        if !target.is_empty() {
            pairs.push(TrainPair::new(input, target, vocab.len())?);
        }
    }
    Ok(pairs)
}

/// The `top_k` most probable non-reserved tokens for a dynamics text, ties
/// broken by vocabulary index.
pub fn predict_consequence(model: &LmModel, text: &str, preprocess_cfg: &PreprocessConfig, top_k: usize) -> Result<Vec<(String, f64)>> {
    let ids = encode(&preprocess(text, preprocess_cfg), &model.vocab, model.config.seq_len);
    let probs = model.forward_eval(&ids)?;
    let mut ranked: Vec<(usize, f64)> = probs
        .into_iter()
        .enumerate()
        .filter(|(i, _)| *i != PAD_ID && *i != UNK_ID)
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(ranked
        .into_iter()
        .take(top_k)
        .map(|(i, p)| (model.vocab.token(i).unwrap_or(UNK).to_string(), p))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn tiny() -> LmConfig {
        LmConfig {
            vocab_size: 12,
            embed_dim: 4,
            recurrent_units: 3,
            dense_units: 4,
            seq_len: 5,
            dropout_rate: 0.0,
            ..LmConfig::default()
        }
    }

    fn vocab(n: usize) -> LmVocabulary {
        let mut t = vec![PAD.to_string(), UNK.to_string()];
        t.extend((2..n).map(|i| format!("w{i}")));
        LmVocabulary::from_tokens(t).unwrap()
    }

    #[test]
    fn zero_model_outputs_half() {
        let m = LmModel::zeros(tiny(), vocab(12)).unwrap();
        let p = m.forward(&[2, 3, 0, 0, 0], true, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(p.len(), 12);
        assert!(p.iter().all(|&x| x == 0.5));
    }

    #[test]
    fn eval_forward_in_open_interval_and_repeatable() {
        let m = LmModel::new(tiny(), vocab(12), &mut ChaCha8Rng::seed_from_u64(3)).unwrap();
        let ids = [4, 7, 1, 0, 11];
        let a = m.forward_eval(&ids).unwrap();
        assert!(a.iter().all(|&x| x > 0.0 && x < 1.0));
        assert_eq!(a, m.forward_eval(&ids).unwrap());
        assert!(m.forward_eval(&[1, 2]).is_err());
        assert!(m.forward_eval(&[12, 0, 0, 0, 0]).is_err());
    }

    #[test]
    fn zero_model_bias_gradient() {
        let m = LmModel::zeros(tiny(), vocab(12)).unwrap();
        let pair = TrainPair::new(vec![2, 3, 4, 0, 0], [], 12).unwrap();
        let (g, loss) = m.backward(&[pair], &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert!((loss - std::f64::consts::LN_2).abs() < 1e-15);
        assert!(g.output.b.data.iter().all(|&x| (x - 0.5 / 12.0).abs() < 1e-15));
    }

    #[test]
    fn duplicate_example_same_gradient() {
        let m = LmModel::new(tiny(), vocab(12), &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let pair = TrainPair::new(vec![5, 6, 7, 8, 9], [3, 10], 12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (g1, l1) = m.backward(&[pair.clone()], &mut rng).unwrap();
        let (g2, l2) = m.backward(&[pair.clone(), pair], &mut rng).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.tensors().iter().zip(g2.tensors()) {
            for (x, y) in a.data.iter().zip(&b.data) {
                assert!((x - y).abs() <= 1e-15 * x.abs().max(1e-300) + 1e-18);
            }
        }
        assert_eq!(m.backward(&[], &mut rng).unwrap_err(), LmError::EmptyBatch);
    }

    #[test]
    fn pair_validation() {
        assert!(TrainPair::new(vec![0, 1], [0], 4).is_err());
        assert!(TrainPair::new(vec![0, 9], [2], 4).is_err());
        let p = TrainPair::new(vec![0, 1], [3, 2, 3], 4).unwrap();
        assert_eq!(p.target_ids, vec![2, 3]);
        assert_eq!(p.multi_hot(4), vec![0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn zero_model_ranks_by_index() {
        let m = LmModel::zeros(tiny(), vocab(12)).unwrap();
        let cfg = PreprocessConfig::default();
        let r = predict_consequence(&m, "w3 w4", &cfg, 100).unwrap();
        assert_eq!(r.len(), 10);
        let names: Vec<&str> = r.iter().map(|(t, _)| t.as_str()).collect();
        assert_eq!(names[..3], ["w2", "w3", "w4"]);
        assert!(r.iter().all(|(_, p)| *p == 0.5));
    }

    #[test]
    fn epochs_zero_returns_init() {
        let config = LmConfig { epochs: 0, ..tiny() };
        let pair = TrainPair::new(vec![2, 3, 0, 0, 0], [4], 12).unwrap();
        let (m, hist) = train(&[pair], vocab(12), config.clone()).unwrap();
        assert!(hist.is_empty());
        let init = LmParams::init(&config, 12, &mut ChaCha8Rng::seed_from_u64(config.seed));
        assert_eq!(m.params, init);
        assert_eq!(train(&[], vocab(12), config).unwrap_err(), LmError::NoPairs);
    }

    #[test]
    fn clipping_caps_norm() {
        let c = tiny();
        let mut g = LmParams::init(&c, 12, &mut ChaCha8Rng::seed_from_u64(1));
        let before = clip_grad_norm(&mut g, 1.0);
        assert!(before > 1.0);
        assert!((g.l2_norm() - 1.0).abs() < 1e-12);
    }
}
