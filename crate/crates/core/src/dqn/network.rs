//! Fully connected Q-network with rectifier hidden layers and a linear head.
//!
//! Parameters live in one flat vector, layer by layer: the weight matrix
//! (row-major, `out x in`) followed by the bias vector.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    dims: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer activations recorded by a forward pass, needed for backprop.
#[derive(Clone, Debug, Default)]
pub struct ForwardCache {
    /// `activations[0]` is the input; `activations[l + 1]` the output of layer `l`.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    /// Output of the last forward pass.
    pub fn output(&self) -> &[f64] {
        self.activations.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

fn param_count(dims: &[usize]) -> usize {
    dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl QNetwork {
    pub fn zeros(dims: &[usize]) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::Checkpoint(format!("invalid layer dims {dims:?}")));
        }
        Ok(QNetwork {
            dims: dims.to_vec(),
            params: vec![0.0; param_count(dims)],
        })
    }

    /// Glorot-uniform weights, zero biases.
    pub fn glorot<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        let mut offset = 0;
        for w in dims.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn from_params(dims: &[usize], params: Vec<f64>) -> Result<Self> {
        let mut net = Self::zeros(dims)?;
        if params.len() != net.params.len() {
            return Err(Error::ShapeMismatch {
                expected: net.params.len(),
                got: params.len(),
            });
        }
        net.params = params;
        Ok(net)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().expect("at least two layers")
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    /// `(weight offset, bias offset)` of layer `l`.
    pub fn layer_offsets(&self, l: usize) -> (usize, usize) {
        let mut offset = 0;
        for w in self.dims.windows(2).take(l) {
            offset += w[0] * w[1] + w[1];
        }
        (offset, offset + self.dims[l] * self.dims[l + 1])
    }

    /// Mutable view of layer `l`'s bias vector.
    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let (_, b) = self.layer_offsets(l);
        let n = self.dims[l + 1];
        &mut self.params[b..b + n]
    }

    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        let mut cache = ForwardCache::default();
        self.forward_cached(input, &mut cache);
        cache.activations.pop().expect("output layer")
    }

    pub fn forward_cached(&self, input: &[f64], cache: &mut ForwardCache) {
        debug_assert_eq!(input.len(), self.input_dim());
        let layers = self.dims.len() - 1;
        cache.activations.resize(layers + 1, Vec::new());
        cache.activations[0].clear();
        cache.activations[0].extend_from_slice(input);
        let mut offset = 0;
        for l in 0..layers {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let weights = &self.params[offset..offset + n_in * n_out];
            let biases = &self.params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            let (head, tail) = cache.activations.split_at_mut(l + 1);
            let x = &head[l];
            let y = &mut tail[0];
            y.clear();
            for j in 0..n_out {
                let row = &weights[j * n_in..(j + 1) * n_in];
                let mut acc = biases[j];
                for (w, xi) in row.iter().zip(x) {
                    acc += w * xi;
                }
                if l + 1 < layers && acc < 0.0 {
                    acc = 0.0;
                }
                y.push(acc);
            }
            offset += n_in * n_out + n_out;
        }
    }

    /// Accumulates into `grads` the gradient of `sum_k dout[k] * output[k]`
    /// for the forward pass stored in `cache`.
    pub fn backward(&self, cache: &ForwardCache, dout: &[f64], grads: &mut [f64]) {
        let layers = self.dims.len() - 1;
        let mut delta = dout.to_vec();
        let mut next = Vec::new();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.dims[l], self.dims[l + 1]);
            let (w_off, b_off) = self.layer_offsets(l);
            let x = &cache.activations[l];
            for j in 0..n_out {
                let d = delta[j];
                if d == 0.0 {
                    continue;
                }
                grads[b_off + j] += d;
                let g_row = &mut grads[w_off + j * n_in..w_off + (j + 1) * n_in];
                for (g, xi) in g_row.iter_mut().zip(x) {
                    *g += d * xi;
                }
            }
            if l == 0 {
                break;
            }
            next.clear();
            next.resize(n_in, 0.0);
            for j in 0..n_out {
                let d = delta[j];
                if d == 0.0 {
                    continue;
                }
                let row = &self.params[w_off + j * n_in..w_off + (j + 1) * n_in];
                for (acc, w) in next.iter_mut().zip(row) {
                    *acc += d * w;
                }
            }
            // Rectifier derivative, taken from the stored post-activation.
            for (acc, a) in next.iter_mut().zip(x) {
                if *a <= 0.0 {
                    *acc = 0.0;
                }
            }
            std::mem::swap(&mut delta, &mut next);
        }
    }
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
