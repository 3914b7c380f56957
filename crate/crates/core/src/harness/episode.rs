use std::time::Duration;

use crate::config::SliceConfig;
use crate::controllers::Controller;
use crate::domain::{map_action, KpiSample, NormalizedAction, Observation};
use crate::env::EnvInterface;
use crate::error::{Error, Result};
use crate::metrics::{load_estimate, reward_single};

use super::trace::{RunTrace, TraceMeta};

/// Rounds an allocation to the 6 decimals the CSV keeps, so a parsed trace
/// holds exactly the values the run used.
pub fn quantize_allocation(mc: f64) -> f64 {
    (mc * 1e6).round() / 1e6
}

/// Reward of one step from the enforced limit and the users it served.
///
/// The action fed to the reward is the enforced allocation normalized back to
/// `[0, 1]`, i.e. after clamping and snapping.
pub fn step_reward(allocation_mc: f64, active_users: u32, cfg: &SliceConfig) -> f64 {
    reward_single(
        NormalizedAction::for_allocation(allocation_mc, cfg),
        load_estimate(active_users, cfg),
    )
}

/// Limit actually enforced for an action.
pub fn enforced_allocation(action: NormalizedAction, cfg: &SliceConfig) -> f64 {
    quantize_allocation(map_action(action, cfg))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpisodeOptions {
    pub steps: usize,
    pub seed: u64,
    /// Sleep one control period per step.
    pub realtime: bool,
}

impl EpisodeOptions {
    pub fn new(steps: usize, seed: u64) -> Self {
        Self {
            steps,
            seed,
            realtime: false,
        }
    }
}

/// Controller state carried from one step to the next.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LoopState {
    pub obs: Observation,
    pub last_usage_mc: f64,
    pub last_alloc_mc: f64,
}

impl LoopState {
    pub fn start(obs: Observation, cfg: &SliceConfig) -> Self {
        Self {
            obs,
            last_usage_mc: 0.0,
            last_alloc_mc: cfg.cpu_min_mc,
        }
    }
}

/// Enforces `action`, advances the environment one period and scores it.
pub(crate) fn advance(
    env: &mut dyn EnvInterface,
    state: &mut LoopState,
    action: NormalizedAction,
    cfg: &SliceConfig,
) -> Result<KpiSample> {
    let alloc = enforced_allocation(action, cfg);
    env.apply_cpu_limit(alloc);
    let (next, mut sample) = env.step()?;
    if sample.allocation_mc != alloc {
        return Err(Error::Environment(format!(
            "requested {alloc} mc, environment enforced {}",
            sample.allocation_mc
        )));
    }
    sample.reward = Some(step_reward(alloc, sample.active_users, cfg));
    *state = LoopState {
        obs: next,
        last_usage_mc: sample.cpu_usage_mc,
        last_alloc_mc: alloc,
    };
    Ok(sample)
}

/// Runs one episode of the control loop.
///
/// A fault in the environment or the controller ends the episode early; the
/// returned trace keeps the rows so far and records the cause.
pub fn run_episode(
    env: &mut dyn EnvInterface,
    controller: &mut dyn Controller,
    cfg: &SliceConfig,
    opts: EpisodeOptions,
) -> Result<RunTrace> {
    if opts.steps == 0 {
        return Err(Error::Contract("an episode needs at least one step".into()));
    }
    let mut trace = RunTrace::new(TraceMeta {
        seed: opts.seed,
        config_hash: cfg.hash(),
        controller: controller.id().to_string(),
        episodes: 1,
        incomplete: None,
    });
    let mut state = LoopState::start(env.reset(opts.seed), cfg);
    for _ in 0..opts.steps {
        let step = controller
            .act(&state.obs, state.last_usage_mc, state.last_alloc_mc)
            .and_then(|a| advance(env, &mut state, a, cfg));
        match step {
            Ok(sample) => trace.push(sample)?,
            Err(e) => {
                trace.meta.incomplete = Some(e.to_string());
                break;
            }
        }
        if opts.realtime {
            std::thread::sleep(Duration::from_secs_f64(cfg.control_period_s));
        }
    }
    Ok(trace)
}
