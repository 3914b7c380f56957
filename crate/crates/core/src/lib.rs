//! Closed-loop CPU allocation for a simulated 5G network slice.
//!
//! A PPO agent observes normalized traffic and CPU usage once per control
//! period and picks the slice's CPU limit. The reward penalizes the gap
//! between the normalized allocation and the estimated load in either
//! direction. Around it sit a simulated slice ([`env`]), QoS metrics
//! ([`metrics`]), baseline controllers ([`controllers`]) and an experiment
//! harness ([`harness`]) that writes CSV traces.
//!
//! ```no_run
//! use rl_loop::{env::SliceEnv, harness, SliceConfig};
//!
//! let cfg = SliceConfig::calibrated();
//! let mut env = SliceEnv::new(cfg.clone())?;
//! let out = harness::train(&mut env, &cfg, &harness::TrainOptions::new(3, 42))?;
//! println!("final moving average {:.3}", out.curve.moving_avg.last().unwrap());
//! # Ok::<(), rl_loop::Error>(())
//! ```

pub mod config;
pub mod controllers;
pub mod domain;
pub mod env;
mod error;
pub mod harness;
pub mod metrics;
pub mod ppo;

pub use config::SliceConfig;
pub use domain::{map_action, normalize_observation, KpiSample, NormalizedAction, Observation};
pub use error::{Error, Result};
