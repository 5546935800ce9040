use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Fully connected network: ReLU hidden layers, logistic output.
///
/// `sizes = [input, hidden.., output]`. Parameters are stored flat, layer by
/// layer, each layer as its `out x in` weight matrix (row-major) followed by its
/// `out` biases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    sizes: Vec<usize>,
    theta: Vec<f64>,
}

pub fn param_count(sizes: &[usize]) -> usize {
    sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
}

impl MlpParams {
    pub fn new(sizes: Vec<usize>, theta: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParameter(format!(
                "network shape needs >= 2 non-empty layers, got {sizes:?}"
            )));
        }
        check_dim(param_count(&sizes), theta.len())?;
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidParameter(
                "non-finite network parameter".into(),
            ));
        }
        Ok(Self { sizes, theta })
    }

    pub fn zeros(sizes: Vec<usize>) -> Result<Self> {
        let n = param_count(&sizes);
        Self::new(sizes, vec![0.0; n])
    }

    /// Weights and biases drawn from `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn init<R: Rng + ?Sized>(sizes: Vec<usize>, rng: &mut R) -> Result<Self> {
        let mut theta = Vec::with_capacity(param_count(&sizes));
        for w in sizes.windows(2) {
            let bound = 1.0 / (w[0] as f64).sqrt();
            for _ in 0..(w[0] * w[1] + w[1]) {
                theta.push(rng.random_range(-bound..bound));
            }
        }
        Self::new(sizes, theta)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    fn layers(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let mut offset = 0;
        self.sizes.windows(2).map(move |w| {
            let at = offset;
            offset += w[0] * w[1] + w[1];
            (at, w[0], w[1])
        })
    }

    /// Forward pass keeping every layer's activations for [`MlpParams::backward`].
    pub(crate) fn forward_cached(&self, input: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.input_dim(), input.len())?;
        let n_layers = self.sizes.len() - 1;
        let mut acts = Vec::with_capacity(n_layers + 1);
        acts.push(input.to_vec());
        for (l, (at, n_in, n_out)) in self.layers().enumerate() {
            let w = &self.theta[at..at + n_in * n_out];
            let b = &self.theta[at + n_in * n_out..at + n_in * n_out + n_out];
            let a = &acts[l];
            let last = l + 1 == n_layers;
            let z: Vec<f64> = w
                .chunks_exact(n_in)
                .zip(b)
                .map(|(row, bias)| {
                    let s = bias + row.iter().zip(a).map(|(w, x)| w * x).sum::<f64>();
                    if last {
                        logistic(s)
                    } else {
                        s.max(0.0)
                    }
                })
                .collect();
            acts.push(z);
        }
        Ok(acts)
    }

    /// Gradient of a loss with respect to the parameters, given `d loss / d output`.
    pub(crate) fn backward(&self, acts: &[Vec<f64>], d_out: &[f64]) -> Vec<f64> {
        let mut grad = vec![0.0; self.theta.len()];
        let layers: Vec<_> = self.layers().collect();
        let n_layers = layers.len();
        // through the logistic: s'(z) = s (1 - s)
        let mut delta: Vec<f64> = d_out
            .iter()
            .zip(&acts[n_layers])
            .map(|(g, y)| g * y * (1.0 - y))
            .collect();
        for l in (0..n_layers).rev() {
            let (at, n_in, n_out) = layers[l];
            let a_in = &acts[l];
            let w = &self.theta[at..at + n_in * n_out];
            let (gw, gb) = grad[at..at + n_in * n_out + n_out].split_at_mut(n_in * n_out);
            gb.copy_from_slice(&delta);
            for (row, d) in gw.chunks_exact_mut(n_in).zip(&delta) {
                for (g, x) in row.iter_mut().zip(a_in) {
                    *g = d * x;
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n_in];
                for (row, d) in w.chunks_exact(n_in).zip(&delta) {
                    for (p, wv) in prev.iter_mut().zip(row) {
                        *p += wv * d;
                    }
                }
                // ReLU mask from the stored post-activation
                for (p, a) in prev.iter_mut().zip(a_in) {
                    if *a <= 0.0 {
                        *p = 0.0;
                    }
                }
                delta = prev;
            }
        }
        grad
    }
}

#[inline]
fn logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
