use rand::Rng;

use super::LmConfig;

/// Dense row-major tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn rows(&self) -> usize {
        self.shape[0]
    }

    pub fn cols(&self) -> usize {
        self.shape.get(1).copied().unwrap_or(1)
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols();
        &self.data[r * c..(r + 1) * c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let c = self.cols();
        &mut self.data[r * c..(r + 1) * c]
    }

    /// `out += self · x`
    pub(crate) fn matvec_acc(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols());
        for (o, r) in out.iter_mut().zip(self.data.chunks_exact(self.cols())) {
            *o += r.iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    /// `dx += selfᵀ · dy`
    pub(crate) fn matvec_t_acc(&self, dy: &[f64], dx: &mut [f64]) {
        for (g, r) in dy.iter().zip(self.data.chunks_exact(self.cols())) {
            if *g != 0.0 {
                for (d, w) in dx.iter_mut().zip(r) {
                    *d += g * w;
                }
            }
        }
    }

    /// `self += dy · xᵀ`
    pub(crate) fn outer_acc(&mut self, dy: &[f64], x: &[f64]) {
        let c = self.cols();
        for (g, r) in dy.iter().zip(self.data.chunks_exact_mut(c)) {
            if *g != 0.0 {
                for (w, v) in r.iter_mut().zip(x) {
                    *w += g * v;
                }
            }
        }
    }

    pub(crate) fn add_acc(&mut self, v: &[f64]) {
        for (a, b) in self.data.iter_mut().zip(v) {
            *a += b;
        }
    }
}

/// One direction of an LSTM layer. Gate blocks are stacked in the order
/// input, forget, cell candidate, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmCell {
    pub w_x: Tensor,
    pub w_h: Tensor,
    pub b: Tensor,
}

impl LstmCell {
    fn zeros(input: usize, units: usize) -> Self {
        LstmCell {
            w_x: Tensor::zeros(&[4 * units, input]),
            w_h: Tensor::zeros(&[4 * units, units]),
            b: Tensor::zeros(&[4 * units]),
        }
    }

    pub fn units(&self) -> usize {
        self.w_h.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmLayer {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub w: Tensor,
    pub b: Tensor,
}

impl Dense {
    fn zeros(input: usize, output: usize) -> Self {
        Dense {
            w: Tensor::zeros(&[output, input]),
            b: Tensor::zeros(&[output]),
        }
    }
}

/// All trainable tensors of the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct LmParams {
    pub embedding: Tensor,
    pub recurrent: Vec<BiLstmLayer>,
    pub hidden: Vec<Dense>,
    pub output: Dense,
}

impl LmParams {
    /// Zero parameters for a model whose output layer covers `vocab_len`
    /// tokens.
    pub fn zeros(config: &LmConfig, vocab_len: usize) -> Self {
        let units = config.recurrent_units;
        let recurrent = (0..config.recurrent_layers)
            .map(|l| {
                let input = if l == 0 { config.embed_dim } else { 2 * units };
                BiLstmLayer {
                    forward: LstmCell::zeros(input, units),
                    backward: LstmCell::zeros(input, units),
                }
            })
            .collect();
        let hidden = (0..config.dense_layers)
            .map(|l| {
                let input = if l == 0 { config.flat_dim() } else { config.dense_units };
                Dense::zeros(input, config.dense_units)
            })
            .collect();
        LmParams {
            embedding: Tensor::zeros(&[vocab_len, config.embed_dim]),
            recurrent,
            hidden,
            output: Dense::zeros(config.dense_units, vocab_len),
        }
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng>(config: &LmConfig, vocab_len: usize, rng: &mut R) -> Self {
        let mut p = Self::zeros(config, vocab_len);
        for t in p.tensors_mut() {
            if t.shape.len() == 2 {
                let bound = (6.0 / (t.shape[0] + t.shape[1]) as f64).sqrt();
                for x in &mut t.data {
                    *x = rng.gen_range(-bound..=bound);
                }
            }
        }
        p.round_to_f32();
        p
    }

    pub fn vocab_len(&self) -> usize {
        self.output.b.data.len()
    }

    /// Tensor names in the same order as [`tensors`](Self::tensors).
    pub fn names(&self) -> Vec<String> {
        let mut names = vec!["embedding".to_string()];
        for l in 0..self.recurrent.len() {
            for dir in ["fwd", "bwd"] {
                for part in ["w_x", "w_h", "b"] {
                    names.push(format!("lstm{l}.{dir}.{part}"));
                }
            }
        }
        for l in 0..self.hidden.len() {
            names.push(format!("dense{l}.w"));
            names.push(format!("dense{l}.b"));
        }
        names.push("output.w".into());
        names.push("output.b".into());
        names
    }

    pub fn tensors(&self) -> Vec<&Tensor> {
        let mut out = vec![&self.embedding];
        for layer in &self.recurrent {
            for cell in [&layer.forward, &layer.backward] {
                out.extend([&cell.w_x, &cell.w_h, &cell.b]);
            }
        }
        for d in &self.hidden {
            out.extend([&d.w, &d.b]);
        }
        out.extend([&self.output.w, &self.output.b]);
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = vec![&mut self.embedding];
        for layer in &mut self.recurrent {
            for cell in [&mut layer.forward, &mut layer.backward] {
                out.push(&mut cell.w_x);
                out.push(&mut cell.w_h);
                out.push(&mut cell.b);
            }
        }
        for d in &mut self.hidden {
            out.push(&mut d.w);
            out.push(&mut d.b);
        }
        out.push(&mut self.output.w);
        out.push(&mut self.output.b);
        out
    }

    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x = 0.0);
        }
        z
    }

    pub fn num_params(&self) -> usize {
        self.tensors().iter().map(|t| t.data.len()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.data.iter())
            .map(|x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, s: f64) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x *= s);
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.data.iter().all(|x| x.is_finite()))
    }

    /// Rounds every value to the nearest `f32`, the precision models are
    /// stored at.
    pub fn round_to_f32(&mut self) {
        for t in self.tensors_mut() {
            t.data.iter_mut().for_each(|x| *x = *x as f32 as f64);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_follow_config() {
        let c = LmConfig {
            embed_dim: 4,
            recurrent_units: 3,
            dense_units: 5,
            seq_len: 6,
            ..LmConfig::default()
        };
        let p = LmParams::zeros(&c, 11);
        assert_eq!(p.embedding.shape, vec![11, 4]);
        assert_eq!(p.recurrent[0].forward.w_x.shape, vec![12, 4]);
        assert_eq!(p.recurrent[1].backward.w_x.shape, vec![12, 6]);
        assert_eq!(p.recurrent[1].backward.w_h.shape, vec![12, 3]);
        assert_eq!(p.hidden[0].w.shape, vec![5, 36]);
        assert_eq!(p.hidden[1].w.shape, vec![5, 5]);
        assert_eq!(p.output.w.shape, vec![11, 5]);
        assert_eq!(p.names().len(), p.tensors().len());
    }

    #[test]
    fn init_within_glorot_bounds() {
        let c = LmConfig {
            embed_dim: 4,
            recurrent_units: 3,
            dense_units: 5,
            seq_len: 6,
            ..LmConfig::default()
        };
        let p = LmParams::init(&c, 11, &mut ChaCha8Rng::seed_from_u64(1));
        for t in p.tensors() {
            if t.shape.len() == 2 {
                let bound = (6.0 / (t.shape[0] + t.shape[1]) as f64).sqrt();
                assert!(t.data.iter().all(|x| x.abs() <= bound));
                assert!(t.data.iter().any(|x| *x != 0.0));
            } else {
                assert!(t.data.iter().all(|x| *x == 0.0));
            }
        }
    }

    #[test]
    fn matvec_helpers() {
        let w = Tensor {
            shape: vec![2, 3],
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let mut out = vec![1.0, 0.0];
        w.matvec_acc(&[1.0, 0.0, -1.0], &mut out);
        assert_eq!(out, vec![-1.0, -2.0]);
        let mut dx = vec![0.0; 3];
        w.matvec_t_acc(&[1.0, 1.0], &mut dx);
        assert_eq!(dx, vec![5.0, 7.0, 9.0]);
        let mut g = Tensor::zeros(&[2, 3]);
        g.outer_acc(&[1.0, 2.0], &[1.0, 0.0, 3.0]);
        assert_eq!(g.data, vec![1.0, 0.0, 3.0, 2.0, 0.0, 6.0]);
    }
}
