//! Clipped-surrogate PPO loss with exact gradients.

use std::f64::consts::PI;

use crate::domain::Observation;
use crate::error::{Error, Result};

use super::policy::{gaussian_entropy, PolicyParameters};
use super::PpoHyperparams;

/// One training sample: rollout data plus its advantage and return target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub state: Observation,
    pub raw_action: f64,
    pub old_log_prob: f64,
    pub advantage: f64,
    pub ret: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossBreakdown {
    pub total: f64,
    pub policy: f64,
    pub value: f64,
    pub entropy: f64,
    /// Fraction of samples whose ratio fell outside `[1 - eps, 1 + eps]`.
    pub clip_fraction: f64,
}

/// Loss and its gradient with respect to [`PolicyParameters::to_flat`].
///
/// `policy = -mean(min(r A, clip(r, 1-eps, 1+eps) A))`,
/// `value = value_coef * mean((V(s) - ret)^2)`,
/// `entropy = -entropy_coef * H`.
pub fn ppo_loss(
    params: &PolicyParameters,
    batch: &[Sample],
    hp: &PpoHyperparams,
) -> Result<(LossBreakdown, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::Contract("PPO loss on an empty minibatch".into()));
    }
    let n = batch.len() as f64;
    let n_policy = params.policy.num_params();
    let ls_idx = params.log_std_index();
    let mut grad = vec![0.0; params.num_params()];
    let (g_policy, rest) = grad.split_at_mut(n_policy);
    let (g_log_std, g_value) = rest.split_at_mut(1);

    let log_std = params.log_std;
    let std = log_std.exp();
    let half_ln_2pi = 0.5 * (2.0 * PI).ln();
    let (lo, hi) = (1.0 - hp.clip_eps, 1.0 + hp.clip_eps);

    let mut out = LossBreakdown::default();
    let mut clipped = 0usize;
    for (index, s) in batch.iter().enumerate() {
        let x = s.state.as_array();
        let pc = params.policy.forward_cached(&x);
        let mean = pc.output();
        let z = (s.raw_action - mean) / std;
        let log_prob = -0.5 * z * z - log_std - half_ln_2pi;
        let ratio = (log_prob - s.old_log_prob).exp();
        let unclipped = ratio * s.advantage;
        let clipped_term = ratio.clamp(lo, hi) * s.advantage;
        let surrogate = unclipped.min(clipped_term);
        if !(lo..=hi).contains(&ratio) {
            clipped += 1;
        }
        // the clipped branch is flat in the ratio wherever it is selected
        let d_surrogate_d_logp = if unclipped <= clipped_term { unclipped } else { 0.0 };
        let d_loss_d_logp = -d_surrogate_d_logp / n;

        let vc = params.value.forward_cached(&x);
        let v_err = vc.output() - s.ret;
        let value_term = hp.value_coef * v_err * v_err;

        if !(surrogate.is_finite() && value_term.is_finite()) {
            return Err(Error::NonFiniteLoss { index });
        }
        out.policy -= surrogate / n;
        out.value += value_term / n;

        if d_loss_d_logp != 0.0 {
            params.policy.backward(&pc, d_loss_d_logp * z / std, g_policy);
            g_log_std[0] += d_loss_d_logp * (z * z - 1.0);
        }
        params
            .value
            .backward(&vc, 2.0 * hp.value_coef * v_err / n, g_value);
    }
    out.entropy = -hp.entropy_coef * gaussian_entropy(log_std);
    g_log_std[0] -= hp.entropy_coef;
    out.total = out.policy + out.value + out.entropy;
    out.clip_fraction = clipped as f64 / n;
    debug_assert_eq!(ls_idx, n_policy);
    if !out.total.is_finite() {
        return Err(Error::NonFiniteLoss { index: batch.len() - 1 });
    }
    Ok((out, grad))
}
