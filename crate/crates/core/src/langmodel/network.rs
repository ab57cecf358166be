//! Forward and reverse-mode passes through
//! embedding → BiLSTM stack → flatten → ReLU dense stack → dropout →
//! dense → sigmoid.

use rand::Rng;

use super::params::{LmParams, LstmCell};
use super::{LmConfig, LmError, Result};

/// Probabilities are clamped to `[CLAMP, 1 − CLAMP]` inside the loss.
pub const CLAMP: f64 = 1e-7;

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Activations of one direction at one step.
struct Step {
    /// input, forget, candidate, output (activated)
    gates: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
}

struct LayerCache {
    input: Vec<Vec<f64>>,
    /// Steps in processing order for each direction.
    dirs: [Vec<Step>; 2],
}

pub(crate) struct Cache {
    ids: Vec<usize>,
    layers: Vec<LayerCache>,
    flat: Vec<f64>,
    /// ReLU outputs of the hidden dense layers.
    hidden: Vec<Vec<f64>>,
    mask: Option<Vec<f64>>,
    pub(crate) dropped: Vec<f64>,
    pub(crate) probs: Vec<f64>,
}

fn position(dir: usize, step: usize, len: usize) -> usize {
    if dir == 0 {
        step
    } else {
        len - 1 - step
    }
}

fn run_direction(cell: &LstmCell, input: &[Vec<f64>], dir: usize) -> Vec<Step> {
    let units = cell.units();
    let len = input.len();
    let mut steps: Vec<Step> = Vec::with_capacity(len);
    let zeros = vec![0.0; units];
    for s in 0..len {
        let x = &input[position(dir, s, len)];
        let (h_prev, c_prev) = match steps.last() {
            Some(p) => (&p.h, &p.c),
            None => (&zeros, &zeros),
        };
        let mut z = cell.b.data.clone();
        cell.w_x.matvec_acc(x, &mut z);
        cell.w_h.matvec_acc(h_prev, &mut z);
        for (k, v) in z.iter_mut().enumerate() {
            *v = if k / units == 2 { v.tanh() } else { sigmoid(*v) };
        }
        let (i, rest) = z.split_at(units);
        let (f, rest) = rest.split_at(units);
        let (g, o) = rest.split_at(units);
        let c: Vec<f64> = (0..units).map(|u| f[u] * c_prev[u] + i[u] * g[u]).collect();
        let tanh_c: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        let h: Vec<f64> = (0..units).map(|u| o[u] * tanh_c[u]).collect();
        steps.push(Step { gates: z, c, tanh_c, h });
    }
    steps
}

/// Samples an inverted-dropout mask: each unit is kept with probability
/// `1 − rate` and scaled by `1 / (1 − rate)`.
pub(crate) fn sample_mask<R: Rng>(width: usize, rate: f64, rng: &mut R) -> Vec<f64> {
    let keep = 1.0 - rate;
    (0..width)
        .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
        .collect()
}

pub(crate) fn forward_cached(
    params: &LmParams,
    config: &LmConfig,
    ids: &[usize],
    mask: Option<Vec<f64>>,
) -> Result<Cache> {
    let vocab_len = params.vocab_len();
    if ids.len() != config.seq_len {
        return Err(LmError::Shape(format!(
            "input has {} ids, model expects {}",
            ids.len(),
            config.seq_len
        )));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= vocab_len) {
        return Err(LmError::Shape(format!("token id {bad} outside vocabulary of {vocab_len}")));
    }

    let mut layers = Vec::with_capacity(params.recurrent.len());
    let mut seq: Vec<Vec<f64>> = ids.iter().map(|&id| params.embedding.row(id).to_vec()).collect();
    for layer in &params.recurrent {
        let fwd = run_direction(&layer.forward, &seq, 0);
        let bwd = run_direction(&layer.backward, &seq, 1);
        let len = seq.len();
        let out: Vec<Vec<f64>> = (0..len)
            .map(|p| {
                let mut v = fwd[p].h.clone();
                v.extend_from_slice(&bwd[len - 1 - p].h);
                v
            })
            .collect();
        layers.push(LayerCache {
            input: std::mem::replace(&mut seq, out),
            dirs: [fwd, bwd],
        });
    }
    let flat: Vec<f64> = seq.concat();

    let mut hidden = Vec::with_capacity(params.hidden.len());
    for dense in &params.hidden {
        let x = hidden.last().unwrap_or(&flat);
        let mut a = dense.b.data.clone();
        dense.w.matvec_acc(x, &mut a);
        a.iter_mut().for_each(|v| *v = v.max(0.0));
        hidden.push(a);
    }
    let last = hidden.last().unwrap_or(&flat);
    let dropped: Vec<f64> = match &mask {
        Some(m) => last.iter().zip(m).map(|(a, k)| a * k).collect(),
        None => last.clone(),
    };
    let mut logits = params.output.b.data.clone();
    params.output.w.matvec_acc(&dropped, &mut logits);
    if let Some(i) = logits.iter().position(|z| !z.is_finite()) {
        return Err(LmError::NonFinite(format!("output unit {i} is not finite")));
    }
    let probs: Vec<f64> = logits.iter().map(|&z| sigmoid(z)).collect();
    Ok(Cache {
        ids: ids.to_vec(),
        layers,
        flat,
        hidden,
        mask,
        dropped,
        probs,
    })
}

/// Mean binary cross entropy over units, with probabilities clamped to
/// `[1e-7, 1 − 1e-7]`.
pub fn bce_loss(probs: &[f64], target: &[f64]) -> Result<f64> {
    if probs.len() != target.len() {
        return Err(LmError::Shape(format!(
            "{} probabilities for {} targets",
            probs.len(),
            target.len()
        )));
    }
    if probs.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = probs
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            let p = p.clamp(CLAMP, 1.0 - CLAMP);
            -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probs.len() as f64)
}

fn backward_direction(
    cell: &LstmCell,
    grad: &mut LstmCell,
    input: &[Vec<f64>],
    steps: &[Step],
    dir: usize,
    d_out: &[Vec<f64>],
    offset: usize,
    d_input: &mut [Vec<f64>],
) {
    let units = cell.units();
    let len = steps.len();
    let zeros = vec![0.0; units];
    let mut dh_next = vec![0.0; units];
    let mut dc_next = vec![0.0; units];
    let mut dz = vec![0.0; 4 * units];
    for s in (0..len).rev() {
        let p = position(dir, s, len);
        let st = &steps[s];
        let (h_prev, c_prev) = if s == 0 {
            (&zeros, &zeros)
        } else {
            (&steps[s - 1].h, &steps[s - 1].c)
        };
        let (i, rest) = st.gates.split_at(units);
        let (f, rest) = rest.split_at(units);
        let (g, o) = rest.split_at(units);
        for u in 0..units {
            let dh = d_out[p][offset + u] + dh_next[u];
            let dc = dh * o[u] * (1.0 - st.tanh_c[u] * st.tanh_c[u]) + dc_next[u];
            dz[u] = dc * g[u] * i[u] * (1.0 - i[u]);
            dz[units + u] = dc * c_prev[u] * f[u] * (1.0 - f[u]);
            dz[2 * units + u] = dc * i[u] * (1.0 - g[u] * g[u]);
            dz[3 * units + u] = dh * st.tanh_c[u] * o[u] * (1.0 - o[u]);
            dc_next[u] = dc * f[u];
        }
        grad.w_x.outer_acc(&dz, &input[p]);
        grad.w_h.outer_acc(&dz, h_prev);
        grad.b.add_acc(&dz);
        cell.w_x.matvec_t_acc(&dz, &mut d_input[p]);
        dh_next.iter_mut().for_each(|v| *v = 0.0);
        cell.w_h.matvec_t_acc(&dz, &mut dh_next);
    }
}

/// Accumulates `scale · ∂loss/∂θ` for one example into `grads` and returns
/// the example's loss.
pub(crate) fn backward_example(
    params: &LmParams,
    cache: &Cache,
    target: &[f64],
    scale: f64,
    grads: &mut LmParams,
) -> Result<f64> {
    let loss = bce_loss(&cache.probs, target)?;
    let vocab_len = cache.probs.len() as f64;

    let d_logits: Vec<f64> = cache
        .probs
        .iter()
        .zip(target)
        .map(|(&p, &y)| {
            if p < CLAMP || p > 1.0 - CLAMP {
                0.0
            } else {
                scale * (p - y) / vocab_len
            }
        })
        .collect();
    grads.output.w.outer_acc(&d_logits, &cache.dropped);
    grads.output.b.add_acc(&d_logits);
    let mut d = vec![0.0; cache.dropped.len()];
    params.output.w.matvec_t_acc(&d_logits, &mut d);
    if let Some(mask) = &cache.mask {
        d.iter_mut().zip(mask).for_each(|(g, k)| *g *= k);
    }

    for l in (0..params.hidden.len()).rev() {
        let act = &cache.hidden[l];
        d.iter_mut().zip(act).for_each(|(g, a)| {
            if *a <= 0.0 {
                *g = 0.0
            }
        });
        let x = if l == 0 { &cache.flat } else { &cache.hidden[l - 1] };
        grads.hidden[l].w.outer_acc(&d, x);
        grads.hidden[l].b.add_acc(&d);
        let mut dx = vec![0.0; x.len()];
        params.hidden[l].w.matvec_t_acc(&d, &mut dx);
        d = dx;
    }

    let width = 2 * params.recurrent.last().map_or(0, |l| l.forward.units());
    let mut d_seq: Vec<Vec<f64>> = if width == 0 {
        Vec::new()
    } else {
        d.chunks(width).map(<[f64]>::to_vec).collect()
    };
    for l in (0..params.recurrent.len()).rev() {
        let layer = &params.recurrent[l];
        let cache_l = &cache.layers[l];
        let units = layer.forward.units();
        let mut d_input: Vec<Vec<f64>> =
            cache_l.input.iter().map(|x| vec![0.0; x.len()]).collect();
        let g = &mut grads.recurrent[l];
        backward_direction(
            &layer.forward,
            &mut g.forward,
            &cache_l.input,
            &cache_l.dirs[0],
            0,
            &d_seq,
            0,
            &mut d_input,
        );
        backward_direction(
            &layer.backward,
            &mut g.backward,
            &cache_l.input,
            &cache_l.dirs[1],
            1,
            &d_seq,
            units,
            &mut d_input,
        );
        d_seq = d_input;
    }
    for (p, &id) in cache.ids.iter().enumerate() {
        let row = grads.embedding.row_mut(id);
        row.iter_mut().zip(&d_seq[p]).for_each(|(a, b)| *a += b);
    }
    Ok(loss)
}
