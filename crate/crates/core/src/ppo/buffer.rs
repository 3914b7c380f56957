use crate::domain::{NormalizedAction, Observation};
use crate::error::{Error, Result};

use super::PpoHyperparams;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub state: Observation,
    pub action: NormalizedAction,
    pub raw_action: f64,
    pub log_prob: f64,
    pub value: f64,
    pub reward: f64,
    pub next_state: Observation,
    pub done: bool,
}

/// On-policy experience for one update.
#[derive(Debug, Clone, Default)]
pub struct TrajectoryBuffer {
    transitions: Vec<Transition>,
}

impl TrajectoryBuffer {
    pub fn with_capacity(n: usize) -> Self {
        Self {
            transitions: Vec::with_capacity(n),
        }
    }

    pub fn push(&mut self, t: Transition) {
        self.transitions.push(t);
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn clear(&mut self) {
        self.transitions.clear();
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }
}

impl FromIterator<Transition> for TrajectoryBuffer {
    fn from_iter<I: IntoIterator<Item = Transition>>(iter: I) -> Self {
        Self {
            transitions: iter.into_iter().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gae {
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Generalized advantage estimates before batch normalization.
///
/// `bootstrap_value` stands in for `V(s_T)` after the last transition.
pub fn gae_unnormalized(
    buffer: &TrajectoryBuffer,
    hp: &PpoHyperparams,
    bootstrap_value: f64,
) -> Result<Gae> {
    let ts = buffer.transitions();
    if ts.is_empty() {
        return Err(Error::Contract("GAE on an empty buffer".into()));
    }
    let mut advantages = vec![0.0; ts.len()];
    let mut next_adv = 0.0;
    let mut next_value = bootstrap_value;
    for (t, tr) in ts.iter().enumerate().rev() {
        let live = if tr.done { 0.0 } else { 1.0 };
        let delta = tr.reward + hp.gamma * next_value * live - tr.value;
        next_adv = delta + hp.gamma * hp.gae_lambda * live * next_adv;
        advantages[t] = next_adv;
        next_value = tr.value;
    }
    let returns = advantages.iter().zip(ts).map(|(a, tr)| a + tr.value).collect();
    Ok(Gae {
        advantages,
        returns,
    })
}

/// GAE with advantages standardized to zero mean and unit (population)
/// variance; left as-is when their std is below `1e-8`. Returns are not
/// affected by the normalization.
pub fn compute_gae(buffer: &TrajectoryBuffer, hp: &PpoHyperparams, bootstrap_value: f64) -> Result<Gae> {
    let mut gae = gae_unnormalized(buffer, hp, bootstrap_value)?;
    normalize(&mut gae.advantages);
    Ok(gae)
}

fn normalize(xs: &mut [f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let std = (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n).sqrt();
    if std >= 1e-8 {
        xs.iter_mut().for_each(|x| *x = (*x - mean) / std);
    }
}
