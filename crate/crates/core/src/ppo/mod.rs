//! Proximal policy optimization on small MLPs, all in `f64`.

mod adam;
mod buffer;
mod checkpoint;
mod loss;
mod mlp;
mod policy;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::domain::Observation;
use crate::error::{Error, Result};

pub use adam::{clip_grad_norm, Adam};
pub use buffer::{compute_gae, gae_unnormalized, Gae, TrajectoryBuffer, Transition};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, Checkpoint};
pub use loss::{ppo_loss, LossBreakdown, Sample};
pub use mlp::{Dense, ForwardCache, Mlp};
pub use policy::{
    gaussian_entropy, gaussian_log_prob, ActionSample, PolicyOutput, PolicyParameters, LOG_STD_INIT,
    LOG_STD_MAX, LOG_STD_MIN, OBS_DIM,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PpoHyperparams {
    pub learning_rate: f64,
    pub gamma: f64,
    /// Environment steps per update.
    pub rollout_len: usize,
    /// Actions barely influence later states here, so long GAE traces mostly
    /// add other steps' reward noise to each advantage.
    pub gae_lambda: f64,
    pub clip_eps: f64,
    pub epochs_per_update: usize,
    pub minibatch_size: usize,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub max_grad_norm: f64,
}

impl Default for PpoHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 3e-4,
            gamma: 0.99,
            rollout_len: 32,
            gae_lambda: 0.5,
            clip_eps: 0.2,
            epochs_per_update: 10,
            minibatch_size: 32,
            value_coef: 0.5,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoHyperparams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate >= 0.0
            && self.gamma > 0.0
            && self.gamma <= 1.0
            && (0.0..=1.0).contains(&self.gae_lambda)
            && self.clip_eps > 0.0
            && self.rollout_len > 0
            && self.minibatch_size > 0
            && self.max_grad_norm > 0.0
            && self.value_coef >= 0.0
            && self.entropy_coef >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid PPO hyperparameters: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UpdateStats {
    /// Loss of the last minibatch of the last epoch.
    pub last_loss: LossBreakdown,
    pub grad_norm: f64,
    pub minibatches: usize,
}

/// Runs `epochs_per_update` passes of shuffled minibatches over `buffer`.
///
/// The buffer must hold exactly `rollout_len` transitions. On a numerical
/// fault nothing is committed: `params` and `optimizer` keep their state.
pub fn update<R: rand::Rng + ?Sized>(
    params: &PolicyParameters,
    buffer: &TrajectoryBuffer,
    bootstrap_value: f64,
    hp: &PpoHyperparams,
    optimizer: &mut Adam,
    rng: &mut R,
) -> Result<(PolicyParameters, UpdateStats)> {
    if buffer.len() != hp.rollout_len {
        return Err(Error::Contract(format!(
            "update expects {} transitions, buffer holds {}",
            hp.rollout_len,
            buffer.len()
        )));
    }
    let gae = compute_gae(buffer, hp, bootstrap_value)?;
    let samples: Vec<Sample> = buffer
        .transitions()
        .iter()
        .zip(gae.advantages.iter().zip(&gae.returns))
        .map(|(t, (&advantage, &ret))| Sample {
            state: t.state,
            raw_action: t.raw_action,
            old_log_prob: t.log_prob,
            advantage,
            ret,
        })
        .collect();

    let mut next = params.clone();
    let mut opt = optimizer.clone();
    let mut flat = next.to_flat();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut stats = UpdateStats::default();
    let mut minibatch = Vec::with_capacity(hp.minibatch_size);
    for _ in 0..hp.epochs_per_update {
        order.shuffle(rng);
        for chunk in order.chunks(hp.minibatch_size) {
            minibatch.clear();
            minibatch.extend(chunk.iter().map(|&i| samples[i]));
            let (loss, mut grad) = ppo_loss(&next, &minibatch, hp)?;
            stats.grad_norm = clip_grad_norm(&mut grad, hp.max_grad_norm);
            stats.last_loss = loss;
            stats.minibatches += 1;
            opt.step(&mut flat, &grad);
            let ls = next.log_std_index();
            flat[ls] = flat[ls].clamp(LOG_STD_MIN, LOG_STD_MAX);
            if flat.iter().any(|v| !v.is_finite()) {
                return Err(Error::Fault("non-finite parameter after optimizer step".into()));
            }
            next.set_flat(&flat);
        }
    }
    *optimizer = opt;
    Ok((next, stats))
}

/// Policy, optimizer state and sampling stream for online training.
#[derive(Debug, Clone)]
pub struct PpoAgent {
    pub params: PolicyParameters,
    pub hp: PpoHyperparams,
    optimizer: Adam,
    rng: ChaCha8Rng,
}

impl PpoAgent {
    /// Fresh agent with the default architecture, initialized from `seed`.
    pub fn new(hp: PpoHyperparams, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = PolicyParameters::new(&mut rng);
        Self::from_parts(params, hp, rng)
    }

    pub fn with_params(params: PolicyParameters, hp: PpoHyperparams, seed: u64) -> Result<Self> {
        Self::from_parts(params, hp, ChaCha8Rng::seed_from_u64(seed))
    }

    fn from_parts(params: PolicyParameters, hp: PpoHyperparams, rng: ChaCha8Rng) -> Result<Self> {
        hp.validate()?;
        if !params.is_finite() {
            return Err(Error::Fault("non-finite initial parameters".into()));
        }
        let optimizer = Adam::new(params.num_params(), hp.learning_rate);
        Ok(Self {
            params,
            hp,
            optimizer,
            rng,
        })
    }

    pub fn act(&mut self, obs: &Observation) -> Result<ActionSample> {
        self.params.sample_action(obs, &mut self.rng)
    }

    pub fn value(&self, obs: &Observation) -> Result<f64> {
        Ok(self.params.forward(obs)?.value)
    }

    pub fn optimizer_steps(&self) -> u64 {
        self.optimizer.steps()
    }

    /// PPO update on a full rollout. On error the agent is unchanged.
    pub fn update(&mut self, buffer: &TrajectoryBuffer, bootstrap_value: f64) -> Result<UpdateStats> {
        let (params, stats) = update(
            &self.params,
            buffer,
            bootstrap_value,
            &self.hp,
            &mut self.optimizer,
            &mut self.rng,
        )?;
        self.params = params;
        Ok(stats)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::NormalizedAction;
    use rand::Rng;

    fn rollout(agent: &mut PpoAgent, n: usize, reward: impl Fn(f64) -> f64) -> TrajectoryBuffer {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        (0..n)
            .map(|_| {
                let state = Observation::new(rng.random(), rng.random());
                let s = agent.act(&state).unwrap();
                Transition {
                    state,
                    action: s.action,
                    raw_action: s.raw,
                    log_prob: s.log_prob,
                    value: s.value,
                    reward: reward(s.action.value()),
                    next_state: state,
                    done: false,
                }
            })
            .collect()
    }

    #[test]
    fn null_step_leaves_parameters_unchanged() {
        // V == 0.5 everywhere, r = V (1 - gamma) and bootstrap 0.5 make every
        // TD error exactly zero, so all gradients vanish.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut params = PolicyParameters::new(&mut rng);
        let last = params.value.layers.len() - 1;
        params.value.layers[last].weights.iter_mut().for_each(|w| *w = 0.0);
        params.value.layers[last].bias[0] = 0.5;
        let hp = PpoHyperparams {
            gamma: 0.5,
            ..PpoHyperparams::default()
        };
        let buffer: TrajectoryBuffer = (0..hp.rollout_len)
            .map(|i| {
                let state = Observation::new(i as f64 / 32.0, 0.2);
                let s = params.sample_action(&state, &mut rng).unwrap();
                Transition {
                    state,
                    action: s.action,
                    raw_action: s.raw,
                    log_prob: s.log_prob,
                    value: s.value,
                    reward: 0.25,
                    next_state: state,
                    done: false,
                }
            })
            .collect();
        let mut opt = Adam::new(params.num_params(), hp.learning_rate);
        let (next, _) = update(&params, &buffer, 0.5, &hp, &mut opt, &mut rng).unwrap();
        assert_eq!(next, params);
    }

    #[test]
    fn update_is_deterministic() {
        let run = || {
            let mut agent = PpoAgent::new(PpoHyperparams::default(), 7).unwrap();
            let buf = rollout(&mut agent, 32, |a| 1.0 - (a - 0.4).abs());
            agent.update(&buf, 0.0).unwrap();
            agent.params.to_flat()
        };
        let (a, b) = (run(), run());
        assert!(a.iter().zip(&b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }

    #[test]
    fn wrong_buffer_length_rejected() {
        let mut agent = PpoAgent::new(PpoHyperparams::default(), 0).unwrap();
        let buf = rollout(&mut agent, 31, |_| 0.5);
        assert!(matches!(agent.update(&buf, 0.0), Err(Error::Contract(_))));
    }

    #[test]
    fn value_head_fits_constant() {
        let hp = PpoHyperparams::default();
        let mut agent = PpoAgent::new(hp, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut last = f64::INFINITY;
        for _ in 0..200 {
            // done on every step: the return target is the reward itself
            let buffer: TrajectoryBuffer = (0..hp.rollout_len)
                .map(|_| {
                    let state = Observation::new(rng.random(), rng.random());
                    let s = agent.act(&state).unwrap();
                    Transition {
                        state,
                        action: s.action,
                        raw_action: s.raw,
                        log_prob: s.log_prob,
                        value: s.value,
                        reward: 0.5,
                        next_state: state,
                        done: true,
                    }
                })
                .collect();
            last = agent.update(&buffer, 0.0).unwrap().last_loss.value / hp.value_coef;
            assert!(agent.params.is_finite());
        }
        assert!(last < 1e-3, "value loss {last}");
    }

    #[test]
    fn fault_keeps_previous_parameters() {
        let mut agent = PpoAgent::new(PpoHyperparams::default(), 5).unwrap();
        let mut buf = rollout(&mut agent, 32, |_| 0.5);
        let before = agent.params.clone();
        let steps = agent.optimizer_steps();
        let mut ts: Vec<Transition> = buf.transitions().to_vec();
        ts[3].reward = f64::NAN;
        buf = ts.into_iter().collect();
        assert!(agent.update(&buf, 0.0).is_err());
        assert_eq!(agent.params, before);
        assert_eq!(agent.optimizer_steps(), steps);
    }

    #[test]
    fn learns_toward_rewarded_action() {
        let hp = PpoHyperparams::default();
        let mut agent = PpoAgent::new(hp, 11).unwrap();
        let obs = Observation::new(0.5, 0.5);
        let start = agent.params.forward(&obs).unwrap().mean;
        for _ in 0..60 {
            let buf = rollout(&mut agent, 32, |a| 1.0 - (a - 0.6).abs());
            agent.update(&buf, 0.0).unwrap();
        }
        let end = agent.params.forward(&obs).unwrap().mean;
        assert!((end - 0.6).abs() < (start - 0.6).abs(), "{start} -> {end}");
        assert!(NormalizedAction::new(end).value() > 0.2);
    }
}
