//! Fully connected tanh network with a linear scalar output and hand-written
//! backpropagation.

use rand::Rng;
use rand_distr::StandardNormal;

/// `outputs x inputs` weight matrix, row-major, plus bias.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    /// Orthogonal rows (or columns, whichever is shorter) scaled by `gain`,
    /// built by Gram-Schmidt on a Gaussian matrix. Bias starts at zero.
    #[allow(clippy::needless_range_loop)]
    fn orthogonal<R: Rng + ?Sized>(inputs: usize, outputs: usize, gain: f64, rng: &mut R) -> Self {
        let (n_vec, dim) = if outputs <= inputs {
            (outputs, inputs)
        } else {
            (inputs, outputs)
        };
        let mut basis: Vec<Vec<f64>> = Vec::with_capacity(n_vec);
        while basis.len() < n_vec {
            let mut v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            for b in &basis {
                let proj: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                v.iter_mut().zip(b).for_each(|(x, y)| *x -= proj * y);
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-6 {
                v.iter_mut().for_each(|x| *x /= norm);
                basis.push(v);
            }
        }
        let mut layer = Self::zeros(inputs, outputs);
        for o in 0..outputs {
            for i in 0..inputs {
                let w = if outputs <= inputs {
                    basis[o][i]
                } else {
                    basis[i][o]
                };
                layer.weights[o * inputs + i] = gain * w;
            }
        }
        layer
    }

    fn num_params(&self) -> usize {
        self.weights.len() + self.bias.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Layer inputs recorded during a forward pass, for backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `inputs[k]` is the input to layer `k`; the last entry is the output.
    activations: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> f64 {
        self.activations.last().expect("non-empty")[0]
    }
}

impl Mlp {
    /// Network with all weights and biases zero. `sizes` lists layer widths
    /// from input to output, e.g. `[2, 64, 64, 1]`.
    pub fn zeros(sizes: &[usize]) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output size");
        Self {
            layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
        }
    }

    /// Orthogonal init: hidden layers with `hidden_gain`, the output layer
    /// with `output_gain`.
    pub fn orthogonal<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden_gain: f64,
        output_gain: f64,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "need at least an input and an output size");
        let last = sizes.len() - 2;
        Self {
            layers: sizes
                .windows(2)
                .enumerate()
                .map(|(k, w)| {
                    let gain = if k == last { output_gain } else { hidden_gain };
                    Dense::orthogonal(w[0], w[1], gain, rng)
                })
                .collect(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].inputs];
        s.extend(self.layers.iter().map(|l| l.outputs));
        s
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(Dense::num_params).sum()
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut cur = x.to_vec();
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            cur = affine(layer, &cur);
            if k != last {
                cur.iter_mut().for_each(|v| *v = v.tanh());
            }
        }
        cur[0]
    }

    pub fn forward_cached(&self, x: &[f64]) -> ForwardCache {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (k, layer) in self.layers.iter().enumerate() {
            let mut out = affine(layer, activations.last().expect("non-empty"));
            if k != last {
                out.iter_mut().for_each(|v| *v = v.tanh());
            }
            activations.push(out);
        }
        ForwardCache { activations }
    }

    /// Accumulates `d_out * d(output)/d(param)` into `grad`, laid out like
    /// [`Mlp::write_flat`].
    pub fn backward(&self, cache: &ForwardCache, d_out: f64, grad: &mut [f64]) {
        debug_assert_eq!(grad.len(), self.num_params());
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut off = 0;
        for layer in &self.layers {
            offsets.push(off);
            off += layer.num_params();
        }

        let mut delta = vec![d_out];
        for k in (0..self.layers.len()).rev() {
            let layer = &self.layers[k];
            let input = &cache.activations[k];
            let base = offsets[k];
            let (gw, gb) = grad[base..base + layer.num_params()].split_at_mut(layer.weights.len());
            for o in 0..layer.outputs {
                let d = delta[o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                row.iter_mut().zip(input).for_each(|(g, x)| *g += d * x);
            }
            if k > 0 {
                // input of layer k is tanh output of layer k-1
                delta = (0..layer.inputs)
                    .map(|i| {
                        let back: f64 = (0..layer.outputs)
                            .map(|o| layer.weights[o * layer.inputs + i] * delta[o])
                            .sum();
                        back * (1.0 - input[i] * input[i])
                    })
                    .collect();
            }
        }
    }

    /// Appends parameters as, per layer, weights (row-major) then bias.
    pub fn write_flat(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend_from_slice(&layer.weights);
            out.extend_from_slice(&layer.bias);
        }
    }

    /// Inverse of [`Mlp::write_flat`]; returns the number of values consumed.
    pub fn read_flat(&mut self, src: &[f64]) -> usize {
        let mut off = 0;
        for layer in &mut self.layers {
            let nw = layer.weights.len();
            layer.weights.copy_from_slice(&src[off..off + nw]);
            off += nw;
            let nb = layer.bias.len();
            layer.bias.copy_from_slice(&src[off..off + nb]);
            off += nb;
        }
        off
    }

    pub fn is_finite(&self) -> bool {
        self.layers
            .iter()
            .all(|l| l.weights.iter().chain(&l.bias).all(|v| v.is_finite()))
    }
}

fn affine(layer: &Dense, x: &[f64]) -> Vec<f64> {
    (0..layer.outputs)
        .map(|o| {
            let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
            layer.bias[o] + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>()
        })
        .collect()
}
