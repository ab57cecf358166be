use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{adam_step, AdamHyper, LmConfig, LmError, LmModel, LmParams, LmVocabulary, Result, TrainPair};

/// Rescales `grads` so their global L2 norm is at most `max_norm`. Returns
/// the norm before clipping.
pub fn clip_grad_norm(grads: &mut LmParams, max_norm: f64) -> f64 {
    let norm = grads.l2_norm();
    if norm > max_norm {
        grads.scale(max_norm / norm);
    }
    norm
}

/// Trains a fresh model and returns it with the mean loss of each epoch.
pub fn train(pairs: &[TrainPair], vocab: LmVocabulary, config: LmConfig) -> Result<(LmModel, Vec<f64>)> {
    if pairs.is_empty() {
        return Err(LmError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LmModel::new(config, vocab, &mut rng)?;
    let v = model.vocab_len();
    for p in pairs {
        if p.input_ids.len() != model.config.seq_len {
            return Err(LmError::Shape(format!(
                "pair has {} input ids, model expects {}",
                p.input_ids.len(),
                model.config.seq_len
            )));
        }
        if let Some(&bad) = p.input_ids.iter().chain(&p.target_ids).find(|&&i| i >= v) {
            return Err(LmError::Shape(format!("token id {bad} outside vocabulary of {v}")));
        }
    }
    let hyper = AdamHyper {
        lr: model.config.learning_rate,
        beta1: model.config.beta1,
        beta2: model.config.beta2,
        eps: model.config.epsilon,
    };
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let mut history = Vec::with_capacity(model.config.epochs);
    for epoch in 0..model.config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in order.chunks(model.config.batch_size).enumerate() {
            let batch: Vec<TrainPair> = chunk.iter().map(|&i| pairs[i].clone()).collect();
            let diverged = |message: String| LmError::Divergence {
                epoch,
                batch: b,
                message,
            };
            let (mut grads, loss) = match model.backward(&batch, &mut rng) {
                Ok(r) => r,
                Err(LmError::NonFinite(m)) => return Err(diverged(m)),
                Err(e) => return Err(e),
            };
            clip_grad_norm(&mut grads, model.config.clip_norm);
            adam_step(&mut model.params, &grads, &mut model.adam, &hyper);
            model.params.round_to_f32();
            if !model.params.all_finite() {
                return Err(diverged("parameters".into()));
            }
            total += loss * batch.len() as f64;
        }
        history.push(total / pairs.len() as f64);
    }
    Ok((model, history))
}
