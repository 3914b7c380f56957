use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SliceConfig;
use crate::domain::{normalize_observation, NormalizedAction};
use crate::env::EnvInterface;
use crate::error::{Error, Result};
use crate::ppo::{
    gaussian_log_prob, save_checkpoint, PolicyParameters, PpoAgent, PpoHyperparams, TrajectoryBuffer,
    Transition,
};

use super::episode::{advance, LoopState};
use super::trace::{RunTrace, TraceMeta};

pub const MOVING_AVERAGE_WINDOW: usize = 100;

/// Per-step training rewards with a trailing moving average.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RewardCurve {
    pub rewards: Vec<f64>,
    /// Mean of the last `window` rewards, or of all so far while fewer exist.
    pub moving_avg: Vec<f64>,
    pub window: usize,
}

impl RewardCurve {
    pub fn from_rewards(rewards: Vec<f64>, window: usize) -> Self {
        assert!(window > 0, "moving-average window must be positive");
        let mut moving_avg = Vec::with_capacity(rewards.len());
        let mut sum = 0.0;
        for (t, r) in rewards.iter().enumerate() {
            sum += r;
            if t >= window {
                sum -= rewards[t - window];
            }
            moving_avg.push(sum / (t + 1).min(window) as f64);
        }
        Self {
            rewards,
            moving_avg,
            window,
        }
    }

    /// Moving average at `t`, only once a full window exists.
    pub fn full_window_avg(&self, t: usize) -> Option<f64> {
        (t + 1 >= self.window).then(|| self.moving_avg[t])
    }

    /// First step whose full-window average reaches `level`.
    pub fn first_reaching(&self, level: f64) -> Option<usize> {
        (self.window - 1..self.moving_avg.len()).find(|&t| self.moving_avg[t] >= level)
    }

    /// Lowest full-window average from step `from` on.
    pub fn min_from(&self, from: usize) -> Option<f64> {
        self.moving_avg
            .get(from.max(self.window - 1)..)
            .and_then(|tail| tail.iter().copied().reduce(f64::min))
    }

    /// `step,reward,moving_avg`, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("step,reward,moving_avg\n");
        for (t, (r, m)) in self.rewards.iter().zip(&self.moving_avg).enumerate() {
            let _ = writeln!(out, "{t},{r:.6},{m:.6}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOptions {
    pub episodes: usize,
    pub steps: usize,
    pub seed: u64,
    pub hp: PpoHyperparams,
    /// Where to write the final (or last good) parameters.
    pub checkpoint: Option<PathBuf>,
    pub realtime: bool,
}

impl TrainOptions {
    pub fn new(episodes: usize, seed: u64) -> Self {
        Self {
            episodes,
            steps: 900,
            seed,
            hp: PpoHyperparams::default(),
            checkpoint: None,
            realtime: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: PolicyParameters,
    pub trace: RunTrace,
    pub curve: RewardCurve,
    pub updates: usize,
    /// Cause of an early stop. `params` are then the last good ones.
    pub halted: Option<String>,
}

/// Seed of the environment for each episode, independent of the agent's stream.
pub fn episode_seeds(seed: u64, episodes: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..episodes).map(|_| rng.random()).collect()
}

/// Trains a fresh agent seeded with `opts.seed`.
pub fn train(env: &mut dyn EnvInterface, cfg: &SliceConfig, opts: &TrainOptions) -> Result<TrainOutcome> {
    let mut agent = PpoAgent::new(opts.hp, opts.seed)?;
    train_agent(&mut agent, env, cfg, opts)
}

/// Online PPO: every `rollout_len` steps inside an episode the buffer is
/// used for one update and cleared. The value of the next state bootstraps
/// each rollout; transitions left over at the end of an episode are dropped.
pub fn train_agent(
    agent: &mut PpoAgent,
    env: &mut dyn EnvInterface,
    cfg: &SliceConfig,
    opts: &TrainOptions,
) -> Result<TrainOutcome> {
    if opts.episodes == 0 || opts.steps == 0 {
        return Err(Error::Contract("training needs at least one episode and one step".into()));
    }
    let hp = agent.hp;
    let mut trace = RunTrace::new(TraceMeta {
        seed: opts.seed,
        config_hash: cfg.hash(),
        controller: "ppo".into(),
        episodes: opts.episodes,
        incomplete: None,
    });
    let mut rewards = Vec::with_capacity(opts.episodes * opts.steps);
    let mut buffer = TrajectoryBuffer::with_capacity(hp.rollout_len);
    let mut updates = 0;
    let mut step = 0u64;

    'episodes: for env_seed in episode_seeds(opts.seed, opts.episodes) {
        buffer.clear();
        let mut state = LoopState::start(env.reset(env_seed), cfg);
        for _ in 0..opts.steps {
            let obs = state.obs;
            let outcome = agent.act(&obs).and_then(|s| {
                let sample = advance(env, &mut state, s.action, cfg)?;
                Ok((s, sample))
            });
            let (act, mut sample) = match outcome {
                Ok(v) => v,
                Err(e) => {
                    trace.meta.incomplete = Some(e.to_string());
                    break 'episodes;
                }
            };
            let reward = sample.reward.expect("advance sets the reward");
            sample.step = step;
            step += 1;
            trace.push(sample)?;
            rewards.push(reward);
            buffer.push(Transition {
                state: obs,
                action: act.action,
                raw_action: act.raw,
                log_prob: act.log_prob,
                value: act.value,
                reward,
                next_state: state.obs,
                done: false,
            });
            if buffer.len() == hp.rollout_len {
                let result = agent
                    .value(&state.obs)
                    .and_then(|bootstrap| agent.update(&buffer, bootstrap));
                if let Err(e) = result {
                    trace.meta.incomplete = Some(format!("update halted: {e}"));
                    break 'episodes;
                }
                updates += 1;
                buffer.clear();
            }
            if opts.realtime {
                std::thread::sleep(Duration::from_secs_f64(cfg.control_period_s));
            }
        }
    }

    if let Some(path) = &opts.checkpoint {
        save_checkpoint(path, &agent.params, &hp)?;
    }
    let halted = trace.meta.incomplete.clone();
    Ok(TrainOutcome {
        params: agent.params.clone(),
        trace,
        curve: RewardCurve::from_rewards(rewards, MOVING_AVERAGE_WINDOW),
        updates,
        halted,
    })
}

/// Experimental: PPO updates on transitions rebuilt from a logged trace.
///
/// Each row becomes a transition whose action is the logged allocation and
/// whose observation pairs the row's users with the previous row's usage.
/// Log-probabilities and values come from the current policy, so the first
/// epoch sees a ratio of one. Returns the number of updates run.
pub fn replay_pretrain(agent: &mut PpoAgent, trace: &RunTrace, cfg: &SliceConfig) -> Result<usize> {
    let rows = trace.samples();
    let reward_of = |i: usize| {
        rows[i]
            .reward
            .ok_or_else(|| Error::Contract(format!("trace row {} has no reward", rows[i].step)))
    };
    let mut obs = Vec::with_capacity(rows.len() + 1);
    let mut last_usage = 0.0;
    for s in rows {
        obs.push(normalize_observation(s.active_users, last_usage, cfg));
        last_usage = s.cpu_usage_mc;
    }
    let rollout = agent.hp.rollout_len;
    let mut updates = 0;
    for start in (0..rows.len().saturating_sub(1)).step_by(rollout) {
        if start + rollout >= rows.len() {
            break;
        }
        let mut buffer = TrajectoryBuffer::with_capacity(rollout);
        for i in start..start + rollout {
            let out = agent.params.forward(&obs[i])?;
            let action = NormalizedAction::for_allocation(rows[i].allocation_mc, cfg);
            buffer.push(Transition {
                state: obs[i],
                action,
                raw_action: action.value(),
                log_prob: gaussian_log_prob(action.value(), out.mean, out.log_std),
                value: out.value,
                reward: reward_of(i)?,
                next_state: obs[i + 1],
                done: false,
            });
        }
        let bootstrap = agent.value(&obs[start + rollout])?;
        agent.update(&buffer, bootstrap)?;
        updates += 1;
    }
    Ok(updates)
}

/// Writes `trace.csv`, `reward_curve.csv` and `checkpoint.txt` under `dir`.
pub fn write_training_outputs(dir: &Path, outcome: &TrainOutcome, hp: &PpoHyperparams) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    outcome.trace.save(dir.join("trace.csv"))?;
    std::fs::write(dir.join("reward_curve.csv"), outcome.curve.to_csv())?;
    save_checkpoint(dir.join("checkpoint.txt"), &outcome.params, hp)
}
