//! Experiment runner: episodes, training, allocation sweeps, trace analysis
//! and the config files that drive them.

mod analyze;
mod episode;
mod sweep;
mod trace;
mod train;

use std::collections::HashSet;
use std::path::Path;

use crate::config::SliceConfig;
use crate::controllers::ControllerSpec;
use crate::error::{Error, Result};
use crate::ppo::PpoHyperparams;

pub use analyze::{analyze, analyze_trace, Analysis, Reference};
pub use episode::{enforced_allocation, quantize_allocation, run_episode, step_reward, EpisodeOptions};
pub use sweep::{
    allocation_grid, default_grid, is_unimodal, sign_changes, sweep_allocation, SweepResult, SweepRow,
};
pub use trace::{RunTrace, TraceMeta, CSV_HEADER};
pub use train::{
    episode_seeds, replay_pretrain, train, train_agent, write_training_outputs, RewardCurve, TrainOptions,
    TrainOutcome, MOVING_AVERAGE_WINDOW,
};

/// Slice, controller and PPO settings read from one `key=value` file.
///
/// Slice keys start from [`SliceConfig::default`]. Controller keys:
/// `controller=ppo|static|threshold|proportional`, `static_mc`, `theta_hi`,
/// `theta_lo`, `step_mc`, `headroom`, `deterministic`. PPO keys use the
/// [`PpoHyperparams`] field names.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub slice: SliceConfig,
    pub controller: ControllerSpec,
    pub hp: PpoHyperparams,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            slice: SliceConfig::calibrated(),
            controller: ControllerSpec::from_id("ppo").expect("known id"),
            hp: PpoHyperparams::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut slice = SliceConfig::default();
        let mut hp = PpoHyperparams::default();
        let mut controller_keys = Vec::new();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got {line:?}")))?;
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(line_no, format!("duplicate key {key:?}")));
            }
            if SliceConfig::is_known_key(key) {
                slice.set(key, value).map_err(|m| Error::parse(line_no, m))?;
            } else if set_hp(&mut hp, key, value).map_err(|m| Error::parse(line_no, m))? {
            } else {
                controller_keys.push((line_no, key.to_string(), value.to_string()));
            }
        }
        slice.validate()?;
        hp.validate()?;
        let controller = parse_controller(&controller_keys)?;
        Ok(Self { slice, controller, hp })
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

fn set_hp(hp: &mut PpoHyperparams, key: &str, value: &str) -> std::result::Result<bool, String> {
    fn p<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
        value.parse().map_err(|_| format!("{key}: bad value {value:?}"))
    }
    match key {
        "learning_rate" => hp.learning_rate = p(key, value)?,
        "gamma" => hp.gamma = p(key, value)?,
        "rollout_len" => hp.rollout_len = p(key, value)?,
        "gae_lambda" => hp.gae_lambda = p(key, value)?,
        "clip_eps" => hp.clip_eps = p(key, value)?,
        "epochs_per_update" => hp.epochs_per_update = p(key, value)?,
        "minibatch_size" => hp.minibatch_size = p(key, value)?,
        "value_coef" => hp.value_coef = p(key, value)?,
        "entropy_coef" => hp.entropy_coef = p(key, value)?,
        "max_grad_norm" => hp.max_grad_norm = p(key, value)?,
        _ => return Ok(false),
    }
    Ok(true)
}

fn parse_controller(keys: &[(usize, String, String)]) -> Result<ControllerSpec> {
    let id = keys
        .iter()
        .find(|(_, k, _)| k == "controller")
        .map_or("ppo", |(_, _, v)| v.as_str());
    let mut spec = ControllerSpec::from_id(id)?;
    for (line, key, value) in keys {
        let num = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| Error::parse(*line, format!("{key}: not a number: {value:?}")))
        };
        match (key.as_str(), &mut spec) {
            ("controller", _) => {}
            ("static_mc", ControllerSpec::Static { fixed_mc }) => *fixed_mc = num()?,
            ("theta_hi", ControllerSpec::Threshold { theta_hi, .. }) => *theta_hi = num()?,
            ("theta_lo", ControllerSpec::Threshold { theta_lo, .. }) => *theta_lo = num()?,
            ("step_mc", ControllerSpec::Threshold { step_mc, .. }) => *step_mc = num()?,
            ("headroom", ControllerSpec::Proportional { headroom }) => *headroom = num()?,
            ("deterministic", ControllerSpec::Ppo { deterministic }) => {
                *deterministic = value
                    .parse()
                    .map_err(|_| Error::parse(*line, format!("deterministic: expected true/false, got {value:?}")))?
            }
            ("static_mc" | "theta_hi" | "theta_lo" | "step_mc" | "headroom" | "deterministic", _) => {
                return Err(Error::parse(
                    *line,
                    format!("{key} does not apply to controller {}", spec.id()),
                ))
            }
            _ => return Err(Error::parse(*line, format!("unknown key {key:?}"))),
        }
    }
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_sections() {
        let cfg = ExperimentConfig::parse(
            "# threshold run\ncontroller=threshold\ntheta_hi=0.9\ntraffic_std=2\nlearning_rate=0.001\n",
        )
        .unwrap();
        assert_eq!(
            cfg.controller,
            ControllerSpec::Threshold {
                theta_hi: 0.9,
                theta_lo: 0.3,
                step_mc: 500.0
            }
        );
        assert_eq!(cfg.slice.traffic_std, 2.0);
        assert_eq!(cfg.hp.learning_rate, 0.001);
    }

    #[test]
    fn defaults_to_ppo() {
        let cfg = ExperimentConfig::parse("").unwrap();
        assert_eq!(cfg.controller, ControllerSpec::Ppo { deterministic: true });
        assert_eq!(cfg.slice, SliceConfig::default());
    }

    #[test]
    fn rejects_bad_keys() {
        let err = |text: &str| match ExperimentConfig::parse(text) {
            Err(Error::Parse { line, .. }) => line,
            other => panic!("expected parse error for {text:?}, got {other:?}"),
        };
        assert_eq!(err("controller=static\nheadroom=1.5\n"), 2);
        assert_eq!(err("bogus=1\n"), 1);
        assert_eq!(err("gamma=x\n"), 1);
        assert_eq!(err("\ncontroller=static\ncontroller=ppo\n"), 3);
        assert!(ExperimentConfig::parse("controller=pid\n").is_err());
        assert!(ExperimentConfig::parse("gamma=0\n").is_err());
    }
}
