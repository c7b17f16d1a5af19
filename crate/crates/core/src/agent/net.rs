//! Dense networks with manual backprop. Small enough (5 hidden layers of
//! 30 units) that hand-rolled gradients stay checkable against finite
//! differences.

use rand::Rng;
use serde::{Deserialize, Serialize};

/// Hidden layer width and count used by the actor and critic.
pub const HIDDEN_WIDTH: usize = 30;
pub const HIDDEN_LAYERS: usize = 5;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mlp {
    /// (out, in) per layer.
    pub shapes: Vec<(usize, usize)>,
    /// Row-major (out x in) weights per layer.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-layer parameter gradients, same shapes as the net.
#[derive(Debug, Clone)]
pub struct Grads {
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Grads {
    pub fn zeros_like(net: &Mlp) -> Self {
        Grads {
            weights: net.weights.iter().map(|w| vec![0.0; w.len()]).collect(),
            biases: net.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    pub fn scale(&mut self, k: f64) {
        for w in &mut self.weights {
            w.iter_mut().for_each(|x| *x *= k);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|x| *x *= k);
        }
    }

    pub fn add(&mut self, other: &Grads) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
        for (a, b) in self.biases.iter_mut().zip(&other.biases) {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    pub fn is_finite(&self) -> bool {
        self.weights
            .iter()
            .chain(self.biases.iter())
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }
}

/// Forward-pass cache: layer inputs plus post-activation outputs.
pub struct ForwardCache {
    /// inputs[l] is the input vector of layer l; inputs[n] is the output.
    pub inputs: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &[f64] {
        self.inputs.last().unwrap()
    }
}

impl Mlp {
    /// Fully connected net: `n_in` -> HIDDEN_LAYERS x HIDDEN_WIDTH -> `n_out`,
    /// tanh hidden activations, linear output.
    pub fn new<R: Rng>(n_in: usize, n_out: usize, rng: &mut R) -> Self {
        let mut dims = vec![n_in];
        dims.extend(std::iter::repeat(HIDDEN_WIDTH).take(HIDDEN_LAYERS));
        dims.push(n_out);
        let mut shapes = Vec::new();
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let (n_i, n_o) = (dims[l], dims[l + 1]);
            // Xavier-style uniform init
            let scale = (6.0 / (n_i + n_o) as f64).sqrt();
            shapes.push((n_o, n_i));
            weights.push(
                (0..n_o * n_i)
                    .map(|_| rng.random_range(-scale..scale))
                    .collect(),
            );
            biases.push(vec![0.0; n_o]);
        }
        Mlp {
            shapes,
            weights,
            biases,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.shapes.len()
    }

    pub fn n_in(&self) -> usize {
        self.shapes[0].1
    }

    pub fn n_out(&self) -> usize {
        self.shapes.last().unwrap().0
    }

    pub fn forward(&self, x: &[f64]) -> ForwardCache {
        assert_eq!(x.len(), self.n_in());
        let mut inputs = vec![x.to_vec()];
        for l in 0..self.n_layers() {
            let (n_o, n_i) = self.shapes[l];
            let input = inputs.last().unwrap().clone();
            let mut out = vec![0.0; n_o];
            for o in 0..n_o {
                let mut acc = self.biases[l][o];
                let row = &self.weights[l][o * n_i..(o + 1) * n_i];
                for (w, xi) in row.iter().zip(&input) {
                    acc += w * xi;
                }
                out[o] = if l + 1 < self.n_layers() { acc.tanh() } else { acc };
            }
            inputs.push(out);
        }
        ForwardCache { inputs }
    }

    /// Backprop `d_out` (dL/doutput) through the cached forward pass,
    /// accumulating parameter gradients into `grads`.
    pub fn backward(&self, cache: &ForwardCache, d_out: &[f64], grads: &mut Grads) {
        let mut delta = d_out.to_vec();
        for l in (0..self.n_layers()).rev() {
            let (n_o, n_i) = self.shapes[l];
            let input = &cache.inputs[l];
            let output = &cache.inputs[l + 1];
            // tanh derivative on hidden layers: y' = 1 - y^2
            if l + 1 < self.n_layers() {
                for o in 0..n_o {
                    delta[o] *= 1.0 - output[o] * output[o];
                }
            }
            for o in 0..n_o {
                grads.biases[l][o] += delta[o];
                let row = &mut grads.weights[l][o * n_i..(o + 1) * n_i];
                for (g, xi) in row.iter_mut().zip(input) {
                    *g += delta[o] * xi;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n_i];
                for o in 0..n_o {
                    let row = &self.weights[l][o * n_i..(o + 1) * n_i];
                    for (p, w) in prev.iter_mut().zip(row) {
                        *p += delta[o] * w;
                    }
                }
                delta = prev;
            }
        }
    }

    pub fn params_to_vec(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn params_from_vec(&mut self, params: &[f64]) {
        let mut i = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let nw = w.len();
            w.copy_from_slice(&params[i..i + nw]);
            i += nw;
            let nb = b.len();
            b.copy_from_slice(&params[i..i + nb]);
            i += nb;
        }
        assert_eq!(i, params.len());
    }

    pub fn n_params(&self) -> usize {
        self.shapes.iter().map(|(o, i)| o * i + o).sum()
    }
}

/// Adam optimizer state for one net.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    pub fn step(&mut self, net: &mut Mlp, grads: &Grads) {
        self.t += 1;
        let g = grads.to_vec();
        let mut p = net.params_to_vec();
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..p.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g[i] * g[i];
            let mhat = self.m[i] / bc1;
            let vhat = self.v[i] / bc2;
            p[i] -= self.lr * mhat / (vhat.sqrt() + self.eps);
        }
        net.params_from_vec(&p);
    }
}

/// Softmax with max-subtraction; output sums to 1 within 1e-9.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.iter().map(|e| e / sum).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn shapes_match_spec() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(6, 9, &mut rng);
        assert_eq!(net.n_layers(), 6);
        assert_eq!(net.shapes[0], (30, 6));
        for l in 1..5 {
            assert_eq!(net.shapes[l], (30, 30));
        }
        assert_eq!(net.shapes[5], (9, 30));
    }

    #[test]
    fn params_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Mlp::new(4, 3, &mut rng);
        let p = net.params_to_vec();
        assert_eq!(p.len(), net.n_params());
        net.params_from_vec(&p);
        assert_eq!(net.params_to_vec(), p);
    }

    #[test]
    fn softmax_sums_to_one() {
        let p = softmax(&[1.0, -2.0, 300.0, 0.5]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(p.iter().all(|x| x.is_finite()));
    }

    /// Scalar-output net: analytic gradient of the raw output against
    /// central finite differences.
    #[test]
    fn backprop_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut net = Mlp::new(5, 1, &mut rng);
        let x: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let cache = net.forward(&x);
        let mut grads = Grads::zeros_like(&net);
        net.backward(&cache, &[1.0], &mut grads);
        let analytic = grads.to_vec();
        let p0 = net.params_to_vec();
        let eps = 1e-5;
        let mut max_rel = 0.0f64;
        for i in (0..p0.len()).step_by(37) {
            let mut p = p0.clone();
            p[i] += eps;
            net.params_from_vec(&p);
            let up = net.forward(&x).output()[0];
            p[i] -= 2.0 * eps;
            net.params_from_vec(&p);
            let down = net.forward(&x).output()[0];
            let fd = (up - down) / (2.0 * eps);
            let denom = analytic[i].abs().max(fd.abs()).max(1e-8);
            max_rel = max_rel.max((analytic[i] - fd).abs() / denom);
        }
        assert!(max_rel <= 1e-4, "max relative error {max_rel}");
    }
}
