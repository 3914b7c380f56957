//! Discrete-time simulated slice.
//!
//! Each control period, a batch of users arrives (truncated normal, rounded),
//! stays active for `session_len_s` periods, and needs `per_ue_demand_mc` of
//! user-plane CPU each. Under a CPU limit below demand the slice serves the
//! fraction `phi = allocation / demand` and per-UE throughput collapses as
//! `phi^p`.
//!
//! [`SliceEnv`] pre-admits the next batch of arrivals at the end of every
//! step, so the observation the controller acts on carries the traffic its
//! allocation will serve and the CPU usage measured during the previous step.

mod arrivals;
mod calibrate;

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SliceConfig;
use crate::domain::{normalize_observation, KpiSample, Observation};
use crate::error::Result;

pub use arrivals::generate_arrivals;
pub use calibrate::{
    calibrate, calibrate_with, fixed_allocation_beta, Calibration, CalibrationGrid,
};

/// What a controller loop needs from a slice, simulated or live.
pub trait EnvInterface {
    /// Starts a new run and returns the first observation.
    fn reset(&mut self, seed: u64) -> Observation;

    /// Enforces a CPU limit from the next step on.
    fn apply_cpu_limit(&mut self, mc: f64);

    /// Runs one control period under the current limit.
    fn step(&mut self) -> Result<(Observation, KpiSample)>;
}

#[derive(Debug, Clone)]
pub struct EnvState {
    pub step: u64,
    pub active_users: u32,
    pub demand_mc: f64,
    pub allocation_mc: f64,
    pub cpu_usage_mc: f64,
    pub throughput_mbps: f64,
    recent_arrivals: VecDeque<u32>,
    rng: ChaCha8Rng,
}

impl EnvState {
    pub fn new(seed: u64, cfg: &SliceConfig) -> Self {
        Self {
            step: 0,
            active_users: 0,
            demand_mc: 0.0,
            allocation_mc: cfg.cpu_min_mc,
            cpu_usage_mc: 0.0,
            throughput_mbps: cfg.per_ue_target_rate_mbps,
            recent_arrivals: VecDeque::with_capacity(cfg.session_len_s as usize),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Sets the enforced limit, clamped to the configured safe range.
    pub fn set_allocation(&mut self, mc: f64, cfg: &SliceConfig) {
        self.allocation_mc = mc.clamp(cfg.cpu_min_mc, cfg.cpu_max_mc);
    }

    /// Draws this period's arrivals and updates the active user count.
    pub fn admit_arrivals(&mut self, cfg: &SliceConfig) {
        let arrivals = generate_arrivals(&mut self.rng, cfg);
        if self.recent_arrivals.len() == cfg.session_len_s as usize {
            self.recent_arrivals.pop_front();
        }
        self.recent_arrivals.push_back(arrivals);
        self.active_users = self
            .recent_arrivals
            .iter()
            .fold(0u32, |acc, &a| acc.saturating_add(a));
    }

    /// Serves the currently active users under the current limit.
    pub fn serve(&mut self, cfg: &SliceConfig) -> KpiSample {
        self.demand_mc = f64::from(self.active_users) * cfg.per_ue_demand_mc;
        let service_ratio = if self.demand_mc == 0.0 {
            1.0
        } else {
            (self.allocation_mc / self.demand_mc).min(1.0)
        };
        // always drawn so the stream does not depend on the noise setting
        let u: f64 = self.rng.random();
        let eps = cfg.usage_noise_rel * (2.0 * u - 1.0);
        self.cpu_usage_mc = (self.allocation_mc.min(self.demand_mc) * (1.0 + eps)).max(0.0);
        self.throughput_mbps = if self.active_users > 0 {
            cfg.per_ue_target_rate_mbps * service_ratio.powf(cfg.degradation_exponent)
        } else {
            cfg.per_ue_target_rate_mbps
        };
        let sample = KpiSample {
            step: self.step,
            active_users: self.active_users,
            cpu_usage_mc: self.cpu_usage_mc,
            throughput_mbps: self.throughput_mbps,
            allocation_mc: self.allocation_mc,
            reward: None,
        };
        self.step += 1;
        sample
    }
}

/// One period: admit arrivals, then serve them under `state.allocation_mc`.
pub fn env_step(mut state: EnvState, cfg: &SliceConfig) -> (EnvState, KpiSample) {
    state.admit_arrivals(cfg);
    let sample = state.serve(cfg);
    (state, sample)
}

/// Simulated backend for [`EnvInterface`].
#[derive(Debug, Clone)]
pub struct SliceEnv {
    cfg: SliceConfig,
    state: EnvState,
}

impl SliceEnv {
    pub fn new(cfg: SliceConfig) -> Result<Self> {
        cfg.validate()?;
        let state = EnvState::new(0, &cfg);
        Ok(Self { cfg, state })
    }

    pub fn config(&self) -> &SliceConfig {
        &self.cfg
    }

    pub fn state(&self) -> &EnvState {
        &self.state
    }
}

impl EnvInterface for SliceEnv {
    fn reset(&mut self, seed: u64) -> Observation {
        self.state = EnvState::new(seed, &self.cfg);
        self.state.admit_arrivals(&self.cfg);
        normalize_observation(self.state.active_users, 0.0, &self.cfg)
    }

    fn apply_cpu_limit(&mut self, mc: f64) {
        self.state.set_allocation(mc, &self.cfg);
    }

    fn step(&mut self) -> Result<(Observation, KpiSample)> {
        let sample = self.state.serve(&self.cfg);
        self.state.admit_arrivals(&self.cfg);
        let obs = normalize_observation(self.state.active_users, sample.cpu_usage_mc, &self.cfg);
        Ok((obs, sample))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fixed_users(users: f64) -> SliceConfig {
        SliceConfig {
            traffic_mean: users,
            traffic_std: 0.0,
            usage_noise_rel: 0.0,
            ..SliceConfig::default()
        }
    }

    fn step_with(cfg: &SliceConfig, alloc: f64) -> KpiSample {
        let mut state = EnvState::new(1, cfg);
        state.set_allocation(alloc, cfg);
        env_step(state, cfg).1
    }

    #[test]
    fn idle_slice() {
        let cfg = fixed_users(0.0);
        let s = step_with(&cfg, 500.0);
        assert_eq!(s.active_users, 0);
        assert_eq!(s.throughput_mbps, 20.0);
        assert_eq!(s.cpu_usage_mc, 0.0);
    }

    #[test]
    fn fully_served() {
        let cfg = fixed_users(5.0);
        let s = step_with(&cfg, 2000.0);
        assert_eq!(s.active_users, 5);
        assert_eq!(s.throughput_mbps, 20.0);
        assert_eq!(s.cpu_usage_mc, 1400.0);
    }

    #[test]
    fn under_allocated_collapse() {
        let cfg = SliceConfig {
            cpu_min_mc: 500.0,
            ..fixed_users(10.0)
        };
        let s = step_with(&cfg, 700.0);
        assert_eq!(s.active_users, 10);
        assert!((s.throughput_mbps - 0.3125).abs() < 1e-12);
        assert!(s.throughput_mbps <= cfg.qos_threshold_mbps);
        assert_eq!(s.cpu_usage_mc, 700.0);
    }

    #[test]
    fn sessions_accumulate_users() {
        let cfg = SliceConfig {
            session_len_s: 3,
            ..fixed_users(4.0)
        };
        let mut state = EnvState::new(0, &cfg);
        let users: Vec<u32> = (0..5)
            .map(|_| {
                let (s, k) = env_step(state.clone(), &cfg);
                state = s;
                k.active_users
            })
            .collect();
        assert_eq!(users, vec![4, 8, 12, 12, 12]);
    }

    #[test]
    fn usage_noise_bounded() {
        let cfg = SliceConfig {
            usage_noise_rel: 0.05,
            ..SliceConfig::default()
        };
        let mut env = SliceEnv::new(cfg.clone()).unwrap();
        env.reset(9);
        for i in 0..2000 {
            env.apply_cpu_limit(500.0 + (i % 8) as f64 * 500.0);
            let (_, s) = env.step().unwrap();
            assert!(s.cpu_usage_mc <= s.allocation_mc * (1.0 + cfg.usage_noise_rel) + 1e-9);
            assert!(s.cpu_usage_mc >= 0.0);
            assert!((0.0..=cfg.per_ue_target_rate_mbps).contains(&s.throughput_mbps));
        }
    }

    #[test]
    fn limit_is_clamped_to_safe_range() {
        let mut env = SliceEnv::new(SliceConfig::default()).unwrap();
        env.reset(0);
        env.apply_cpu_limit(10.0);
        assert_eq!(env.step().unwrap().1.allocation_mc, 500.0);
        env.apply_cpu_limit(1e6);
        assert_eq!(env.step().unwrap().1.allocation_mc, 4000.0);
    }

    #[test]
    fn slice_env_matches_pure_step_function() {
        let cfg = SliceConfig::calibrated();
        let mut env = SliceEnv::new(cfg.clone()).unwrap();
        let first = env.reset(42);
        let mut state = EnvState::new(42, &cfg);
        let mut prev_usage = 0.0;
        let mut expected_obs = first;
        for i in 0..300 {
            let alloc = 500.0 + (i * 37 % 3500) as f64;
            env.apply_cpu_limit(alloc);
            state.set_allocation(alloc, &cfg);
            let (obs, from_env) = env.step().unwrap();
            let (next, from_fn) = env_step(state, &cfg);
            state = next;
            assert_eq!(from_env, from_fn);
            assert_eq!(
                expected_obs,
                normalize_observation(from_fn.active_users, prev_usage, &cfg),
                "observation carries the traffic about to be served"
            );
            prev_usage = from_fn.cpu_usage_mc;
            expected_obs = obs;
        }
    }

    #[test]
    fn same_seed_same_samples() {
        let run = |seed| {
            let mut env = SliceEnv::new(SliceConfig::default()).unwrap();
            env.reset(seed);
            (0..500)
                .map(|_| env.step().unwrap().1)
                .collect::<Vec<_>>()
        };
        assert_eq!(run(3), run(3));
        assert_ne!(run(3), run(4));
    }

    #[test]
    fn throughput_monotone_in_allocation() {
        let cfg = SliceConfig::calibrated();
        let trace = |alloc: f64| {
            let mut env = SliceEnv::new(cfg.clone()).unwrap();
            env.reset(11);
            env.apply_cpu_limit(alloc);
            (0..400)
                .map(|_| env.step().unwrap().1.throughput_mbps)
                .collect::<Vec<_>>()
        };
        let mut prev = trace(500.0);
        for alloc in (1000..=4000).step_by(250) {
            let cur = trace(f64::from(alloc));
            assert!(prev.iter().zip(&cur).all(|(a, b)| a <= b));
            prev = cur;
        }
    }
}
