//! Gaussian policy with a state-independent log standard deviation, plus the
//! state-value network.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;

use super::mlp::Mlp;
use crate::domain::{NormalizedAction, Observation};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
/// Initial exploration scale, sigma of about 0.14 in action units. Starting
/// wider leaves Adam at the default learning rate too few steps to shrink the
/// single log-std parameter within a few episodes.
pub const LOG_STD_INIT: f64 = -2.0;
pub const OBS_DIM: usize = 2;

const HIDDEN_GAIN: f64 = std::f64::consts::SQRT_2;
const MEAN_HEAD_GAIN: f64 = 0.01;
const VALUE_HEAD_GAIN: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParameters {
    /// Mean head network.
    pub policy: Mlp,
    pub log_std: f64,
    pub value: Mlp,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyOutput {
    /// Raw, unclamped Gaussian mean.
    pub mean: f64,
    pub log_std: f64,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionSample {
    pub action: NormalizedAction,
    /// Pre-clamp draw; `log_prob` is evaluated here.
    pub raw: f64,
    pub log_prob: f64,
    pub value: f64,
}

impl PolicyParameters {
    /// Default architecture: `2 -> 64 -> 64 -> 1` for both networks.
    pub fn new<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Self::with_hidden(&[64, 64], rng)
    }

    pub fn with_hidden<R: Rng + ?Sized>(hidden: &[usize], rng: &mut R) -> Self {
        let sizes = layer_sizes(hidden);
        Self {
            policy: Mlp::orthogonal(&sizes, HIDDEN_GAIN, MEAN_HEAD_GAIN, rng),
            log_std: LOG_STD_INIT,
            value: Mlp::orthogonal(&sizes, HIDDEN_GAIN, VALUE_HEAD_GAIN, rng),
        }
    }

    /// All weights and biases zero, `log_std = 0`.
    pub fn zeros(hidden: &[usize]) -> Self {
        let sizes = layer_sizes(hidden);
        Self {
            policy: Mlp::zeros(&sizes),
            log_std: 0.0,
            value: Mlp::zeros(&sizes),
        }
    }

    pub fn num_params(&self) -> usize {
        self.policy.num_params() + 1 + self.value.num_params()
    }

    /// Flat layout: policy net, `log_std`, value net.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        self.policy.write_flat(&mut out);
        out.push(self.log_std);
        self.value.write_flat(&mut out);
        out
    }

    /// Loads a flat vector as produced by [`PolicyParameters::to_flat`].
    /// Values are taken as-is; `log_std` is not clamped here.
    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let n = self.policy.read_flat(flat);
        self.log_std = flat[n];
        self.value.read_flat(&flat[n + 1..]);
    }

    pub fn log_std_index(&self) -> usize {
        self.policy.num_params()
    }

    pub fn is_finite(&self) -> bool {
        self.log_std.is_finite() && self.policy.is_finite() && self.value.is_finite()
    }

    pub fn forward(&self, obs: &Observation) -> Result<PolicyOutput> {
        if !self.is_finite() {
            return Err(Error::Fault("non-finite policy parameters".into()));
        }
        let x = obs.as_array();
        Ok(PolicyOutput {
            mean: self.policy.forward(&x),
            log_std: self.log_std,
            value: self.value.forward(&x),
        })
    }

    pub fn sample_action<R: Rng + ?Sized>(&self, obs: &Observation, rng: &mut R) -> Result<ActionSample> {
        let out = self.forward(obs)?;
        let noise: f64 = rng.sample(StandardNormal);
        let raw = out.mean + out.log_std.exp() * noise;
        Ok(ActionSample {
            action: NormalizedAction::new(raw),
            raw,
            log_prob: gaussian_log_prob(raw, out.mean, out.log_std),
            value: out.value,
        })
    }

    /// `clamp(mean)`, no exploration noise.
    pub fn deterministic_action(&self, obs: &Observation) -> Result<NormalizedAction> {
        Ok(NormalizedAction::new(self.forward(obs)?.mean))
    }
}

fn layer_sizes(hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![OBS_DIM];
    sizes.extend_from_slice(hidden);
    sizes.push(1);
    sizes
}

pub fn gaussian_log_prob(x: f64, mean: f64, log_std: f64) -> f64 {
    let z = (x - mean) / log_std.exp();
    -0.5 * z * z - log_std - 0.5 * (2.0 * PI).ln()
}

pub fn gaussian_entropy(log_std: f64) -> f64 {
    0.5 + 0.5 * (2.0 * PI).ln() + log_std
}
