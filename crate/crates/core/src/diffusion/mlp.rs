use crate::numerics::StreamRng;

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

#[inline]
fn silu_grad(x: f64) -> f64 {
    let s = sigmoid(x);
    s * (1.0 + x * (1.0 - s))
}

/// Fully connected network with SiLU between layers and a linear output.
/// Weights are row-major `fan_in × fan_out`.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiserMlp {
    pub dims: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

/// Activations kept for the backward pass: `inputs[l]` feeds layer `l`, `pre[l]` is its affine output.
pub struct ForwardCache {
    rows: usize,
    inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
}

/// `out[i, :] = b + x[i, :] · W`.
fn affine(x: &[f64], rows: usize, w: &[f64], b: &[f64], fan_in: usize, fan_out: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * fan_out);
    for i in 0..rows {
        out.extend_from_slice(b);
        let orow = &mut out[i * fan_out..];
        for (k, &xv) in x[i * fan_in..(i + 1) * fan_in].iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            for (o, &wv) in orow.iter_mut().zip(&w[k * fan_out..(k + 1) * fan_out]) {
                *o += xv * wv;
            }
        }
    }
    out
}

impl DenoiserMlp {
    /// Uniform `±1/√fan_in` initialization of weights and biases.
    pub fn new(dims: Vec<usize>, rng: &mut StreamRng) -> Self {
        assert!(dims.len() >= 2 && dims.iter().all(|&d| d > 0));
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for l in 0..dims.len() - 1 {
            let (fi, fo) = (dims[l], dims[l + 1]);
            let bound = 1.0 / (fi as f64).sqrt();
            weights.push((0..fi * fo).map(|_| (2.0 * rng.uniform() - 1.0) * bound).collect());
            biases.push((0..fo).map(|_| (2.0 * rng.uniform() - 1.0) * bound).collect());
        }
        Self { dims, weights, biases }
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    fn layers(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn forward(&self, x: &[f64], rows: usize) -> Vec<f64> {
        let mut h = x.to_vec();
        for l in 0..self.layers() {
            let mut z = affine(&h, rows, &self.weights[l], &self.biases[l], self.dims[l], self.dims[l + 1]);
            if l + 1 < self.layers() {
                z.iter_mut().for_each(|v| *v = silu(*v));
            }
            h = z;
        }
        h
    }

    pub fn forward_cached(&self, x: &[f64], rows: usize) -> (Vec<f64>, ForwardCache) {
        let mut inputs = Vec::with_capacity(self.layers());
        let mut pre = Vec::with_capacity(self.layers());
        let mut h = x.to_vec();
        for l in 0..self.layers() {
            let z = affine(&h, rows, &self.weights[l], &self.biases[l], self.dims[l], self.dims[l + 1]);
            inputs.push(h);
            h = if l + 1 < self.layers() {
                z.iter().map(|&v| silu(v)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
        }
        (h, ForwardCache { rows, inputs, pre })
    }

    /// Gradients of a loss with output gradient `d_out`, flattened in [`DenoiserMlp::params`] order.
    pub fn backward(&self, cache: &ForwardCache, d_out: Vec<f64>) -> Vec<f64> {
        let rows = cache.rows;
        let mut grads_w: Vec<Vec<f64>> = Vec::with_capacity(self.layers());
        let mut grads_b: Vec<Vec<f64>> = Vec::with_capacity(self.layers());
        let mut delta = d_out;
        for l in (0..self.layers()).rev() {
            let (fi, fo) = (self.dims[l], self.dims[l + 1]);
            if l + 1 < self.layers() {
                for (d, &z) in delta.iter_mut().zip(&cache.pre[l]) {
                    *d *= silu_grad(z);
                }
            }
            let input = &cache.inputs[l];
            let mut gw = vec![0.0; fi * fo];
            let mut gb = vec![0.0; fo];
            for i in 0..rows {
                let drow = &delta[i * fo..(i + 1) * fo];
                for (g, &d) in gb.iter_mut().zip(drow) {
                    *g += d;
                }
                for (k, &xv) in input[i * fi..(i + 1) * fi].iter().enumerate() {
                    if xv == 0.0 {
                        continue;
                    }
                    for (g, &d) in gw[k * fo..(k + 1) * fo].iter_mut().zip(drow) {
                        *g += xv * d;
                    }
                }
            }
            if l > 0 {
                // δ_prev = δ · Wᵀ, accumulated row-wise so the inner loop is an axpy.
                let w = &self.weights[l];
                let mut wt = vec![0.0; fo * fi];
                for k in 0..fi {
                    for o in 0..fo {
                        wt[o * fi + k] = w[k * fo + o];
                    }
                }
                let mut prev = vec![0.0; rows * fi];
                for i in 0..rows {
                    let prow = &mut prev[i * fi..(i + 1) * fi];
                    for (o, &d) in delta[i * fo..(i + 1) * fo].iter().enumerate() {
                        for (pv, &wv) in prow.iter_mut().zip(&wt[o * fi..(o + 1) * fi]) {
                            *pv += d * wv;
                        }
                    }
                }
                delta = prev;
            }
            grads_w.push(gw);
            grads_b.push(gb);
        }
        grads_w.reverse();
        grads_b.reverse();
        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in grads_w.into_iter().zip(grads_b) {
            flat.extend(w);
            flat.extend(b);
        }
        flat
    }

    pub fn param_count(&self) -> usize {
        self.weights.iter().chain(&self.biases).map(Vec::len).sum()
    }

    /// Layer by layer: weights then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w);
            out.extend_from_slice(b);
        }
        out
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| w.iter_mut().chain(b.iter_mut()))
    }

    pub fn set_params(&mut self, values: &[f64]) {
        assert_eq!(values.len(), self.param_count());
        for (p, v) in self.params_mut().zip(values) {
            *p = *v;
        }
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step: 0,
        }
    }

    pub fn set_learning_rate(&mut self, lr: f64) {
        self.lr = lr;
    }

    pub fn update(&mut self, net: &mut DenoiserMlp, grads: &[f64]) {
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step);
        let c2 = 1.0 - BETA2.powi(self.step);
        for (((p, g), m), v) in net.params_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + ADAM_EPS);
        }
    }
}
