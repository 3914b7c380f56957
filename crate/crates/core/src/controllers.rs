//! Allocation controllers: the PPO policy and the static, threshold and
//! proportional baselines.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::SliceConfig;
use crate::domain::{map_action, NormalizedAction, Observation};
use crate::error::{Error, Result};
use crate::ppo::{PolicyParameters, OBS_DIM};

/// Picks the next normalized allocation from the latest observation and the
/// previous step's measured usage and applied limit.
pub trait Controller {
    fn id(&self) -> &str;

    fn act(&mut self, obs: &Observation, last_usage_mc: f64, last_alloc_mc: f64) -> Result<NormalizedAction>;
}

/// Holds one allocation forever.
#[derive(Debug, Clone)]
pub struct StaticController {
    action: NormalizedAction,
}

impl StaticController {
    pub fn new(fixed_mc: f64, cfg: &SliceConfig) -> Result<Self> {
        if !(cfg.cpu_min_mc..=cfg.cpu_max_mc).contains(&fixed_mc) || fixed_mc > cfg.load_norm_max_mc {
            return Err(Error::Config(format!(
                "static allocation {fixed_mc} mc outside [{}, {}]",
                cfg.cpu_min_mc,
                cfg.cpu_max_mc.min(cfg.load_norm_max_mc)
            )));
        }
        Ok(Self {
            action: NormalizedAction::for_allocation(fixed_mc, cfg),
        })
    }
}

impl Controller for StaticController {
    fn id(&self) -> &str {
        "static"
    }

    fn act(&mut self, _: &Observation, _: f64, _: f64) -> Result<NormalizedAction> {
        Ok(self.action)
    }
}

/// Steps the allocation up when utilization exceeds `theta_hi` and down when
/// it drops below `theta_lo`.
#[derive(Debug, Clone)]
pub struct ThresholdController {
    theta_hi: f64,
    theta_lo: f64,
    step_mc: f64,
    cfg: SliceConfig,
}

impl ThresholdController {
    pub const DEFAULT_THETA_HI: f64 = 0.8;
    pub const DEFAULT_THETA_LO: f64 = 0.3;
    pub const DEFAULT_STEP_MC: f64 = 500.0;

    pub fn new(theta_hi: f64, theta_lo: f64, step_mc: f64, cfg: &SliceConfig) -> Result<Self> {
        if !(0.0 < theta_lo && theta_lo < theta_hi && theta_hi < 1.0) {
            return Err(Error::Config(format!(
                "thresholds need 0 < theta_lo < theta_hi < 1, got {theta_lo} and {theta_hi}"
            )));
        }
        if !(step_mc > 0.0 && step_mc.is_finite()) {
            return Err(Error::Config(format!("step_mc must be > 0, got {step_mc}")));
        }
        Ok(Self {
            theta_hi,
            theta_lo,
            step_mc,
            cfg: cfg.clone(),
        })
    }

    /// Next limit in millicores, before normalization.
    pub fn next_allocation(&self, last_usage_mc: f64, last_alloc_mc: f64) -> f64 {
        let utilization = if last_alloc_mc > 0.0 {
            last_usage_mc / last_alloc_mc
        } else {
            1.0
        };
        let next = if utilization > self.theta_hi {
            last_alloc_mc + self.step_mc
        } else if utilization < self.theta_lo {
            last_alloc_mc - self.step_mc
        } else {
            last_alloc_mc
        };
        next.clamp(self.cfg.cpu_min_mc, self.cfg.cpu_max_mc)
    }
}

impl Controller for ThresholdController {
    fn id(&self) -> &str {
        "threshold"
    }

    fn act(&mut self, _: &Observation, last_usage_mc: f64, last_alloc_mc: f64) -> Result<NormalizedAction> {
        Ok(NormalizedAction::for_allocation(
            self.next_allocation(last_usage_mc, last_alloc_mc),
            &self.cfg,
        ))
    }
}

/// Allocates `headroom` times the CPU demand implied by the observed traffic.
#[derive(Debug, Clone)]
pub struct ProportionalController {
    headroom: f64,
    cfg: SliceConfig,
}

impl ProportionalController {
    pub const DEFAULT_HEADROOM: f64 = 1.2;

    pub fn new(headroom: f64, cfg: &SliceConfig) -> Result<Self> {
        if !(headroom >= 1.0 && headroom.is_finite()) {
            return Err(Error::Config(format!("headroom must be >= 1, got {headroom}")));
        }
        Ok(Self {
            headroom,
            cfg: cfg.clone(),
        })
    }

    pub fn next_allocation(&self, obs: &Observation) -> f64 {
        let demand = obs.traffic_norm * self.cfg.traffic_norm_max * self.cfg.per_ue_demand_mc;
        (self.headroom * demand).clamp(self.cfg.cpu_min_mc, self.cfg.cpu_max_mc)
    }
}

impl Controller for ProportionalController {
    fn id(&self) -> &str {
        "proportional"
    }

    fn act(&mut self, obs: &Observation, _: f64, _: f64) -> Result<NormalizedAction> {
        Ok(NormalizedAction::for_allocation(self.next_allocation(obs), &self.cfg))
    }
}

/// PPO policy as a controller: the clamped Gaussian mean when
/// `deterministic`, otherwise a sampled action.
#[derive(Debug, Clone)]
pub struct RlController {
    params: PolicyParameters,
    deterministic: bool,
    rng: ChaCha8Rng,
}

impl RlController {
    pub fn new(params: PolicyParameters, deterministic: bool, seed: u64) -> Result<Self> {
        for (name, net) in [("policy", &params.policy), ("value", &params.value)] {
            let sizes = net.sizes();
            if sizes.first() != Some(&OBS_DIM) || sizes.last() != Some(&1) {
                return Err(Error::Checkpoint(format!(
                    "{name} network shape {sizes:?} does not map {OBS_DIM} inputs to 1 output"
                )));
            }
        }
        if !params.is_finite() {
            return Err(Error::Checkpoint("non-finite parameters".into()));
        }
        Ok(Self {
            params,
            deterministic,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn params(&self) -> &PolicyParameters {
        &self.params
    }
}

impl Controller for RlController {
    fn id(&self) -> &str {
        "ppo"
    }

    fn act(&mut self, obs: &Observation, _: f64, _: f64) -> Result<NormalizedAction> {
        if self.deterministic {
            self.params.deterministic_action(obs)
        } else {
            Ok(self.params.sample_action(obs, &mut self.rng)?.action)
        }
    }
}

/// Controller choice as named in config files and on the command line.
#[derive(Debug, Clone, PartialEq)]
pub enum ControllerSpec {
    Ppo { deterministic: bool },
    Static { fixed_mc: f64 },
    Threshold { theta_hi: f64, theta_lo: f64, step_mc: f64 },
    Proportional { headroom: f64 },
}

impl ControllerSpec {
    pub const REFERENCE_ALLOCATION_MC: f64 = 2945.72;

    /// Default parameters for `ppo|static|threshold|proportional`.
    pub fn from_id(id: &str) -> Result<Self> {
        Ok(match id {
            "ppo" => Self::Ppo { deterministic: true },
            "static" => Self::Static {
                fixed_mc: Self::REFERENCE_ALLOCATION_MC,
            },
            "threshold" => Self::Threshold {
                theta_hi: ThresholdController::DEFAULT_THETA_HI,
                theta_lo: ThresholdController::DEFAULT_THETA_LO,
                step_mc: ThresholdController::DEFAULT_STEP_MC,
            },
            "proportional" => Self::Proportional {
                headroom: ProportionalController::DEFAULT_HEADROOM,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown controller {other:?} (expected ppo|static|threshold|proportional)"
                )))
            }
        })
    }

    pub fn id(&self) -> &'static str {
        match self {
            Self::Ppo { .. } => "ppo",
            Self::Static { .. } => "static",
            Self::Threshold { .. } => "threshold",
            Self::Proportional { .. } => "proportional",
        }
    }

    /// Builds a baseline. PPO needs parameters: use [`RlController::new`].
    pub fn build_baseline(&self, cfg: &SliceConfig) -> Result<Box<dyn Controller>> {
        Ok(match *self {
            Self::Static { fixed_mc } => Box::new(StaticController::new(fixed_mc, cfg)?),
            Self::Threshold {
                theta_hi,
                theta_lo,
                step_mc,
            } => Box::new(ThresholdController::new(theta_hi, theta_lo, step_mc, cfg)?),
            Self::Proportional { headroom } => Box::new(ProportionalController::new(headroom, cfg)?),
            Self::Ppo { .. } => {
                return Err(Error::Config("the ppo controller needs a checkpoint".into()))
            }
        })
    }
}

/// Millicores a controller's action resolves to.
pub fn allocation_of(action: NormalizedAction, cfg: &SliceConfig) -> f64 {
    map_action(action, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::normalize_observation;
    use proptest::prelude::*;

    fn cfg() -> SliceConfig {
        SliceConfig::default()
    }

    #[test]
    fn static_controller_holds_reference() {
        let c = cfg();
        let mut ctl = StaticController::new(2945.72, &c).unwrap();
        for users in [0, 5, 40] {
            let a = ctl.act(&normalize_observation(users, 100.0, &c), 0.0, 0.0).unwrap();
            assert!((map_action(a, &c) - 2945.72).abs() < 1e-9);
        }
        let snapped = SliceConfig {
            snap_to_grid: true,
            ..cfg()
        };
        let mut ctl = StaticController::new(2945.72, &snapped).unwrap();
        let a = ctl.act(&Observation::default(), 0.0, 0.0).unwrap();
        assert_eq!(map_action(a, &snapped), 3000.0);
        let mut floor = StaticController::new(500.0, &c).unwrap();
        assert_eq!(map_action(floor.act(&Observation::default(), 0.0, 0.0).unwrap(), &c), 500.0);
    }

    #[test]
    fn static_controller_range_checked() {
        assert!(StaticController::new(499.0, &cfg()).is_err());
        assert!(StaticController::new(4000.5, &cfg()).is_err());
    }

    #[test]
    fn threshold_rule() {
        let c = cfg();
        let t = ThresholdController::new(0.8, 0.3, 500.0, &c).unwrap();
        assert_eq!(t.next_allocation(900.0, 1000.0), 1500.0);
        assert_eq!(t.next_allocation(50.0, 500.0), 500.0);
        assert_eq!(t.next_allocation(100.0, 1000.0), 500.0);
        assert_eq!(t.next_allocation(500.0, 1000.0), 1000.0);
        assert_eq!(t.next_allocation(3900.0, 4000.0), 4000.0);
    }

    #[test]
    fn threshold_validation() {
        let c = cfg();
        assert!(ThresholdController::new(0.3, 0.8, 500.0, &c).is_err());
        assert!(ThresholdController::new(1.0, 0.3, 500.0, &c).is_err());
        assert!(ThresholdController::new(0.8, 0.0, 500.0, &c).is_err());
        assert!(ThresholdController::new(0.8, 0.3, 0.0, &c).is_err());
    }

    #[test]
    fn threshold_mid_band_is_stable() {
        let c = cfg();
        let mut t = ThresholdController::new(0.8, 0.3, 500.0, &c).unwrap();
        let mut alloc = 2000.0;
        let usage = 1000.0; // constant demand, utilization 0.5
        for _ in 0..100 {
            let next = map_action(t.act(&Observation::default(), usage, alloc).unwrap(), &c);
            assert_eq!(next, alloc);
            alloc = next;
        }
    }

    #[test]
    fn proportional_examples() {
        let c = cfg();
        let mut p = ProportionalController::new(1.2, &c).unwrap();
        let a = p.act(&Observation::new(0.0, 0.0), 0.0, 0.0).unwrap();
        assert_eq!(map_action(a, &c), 500.0);
        let obs = normalize_observation(5, 0.0, &c);
        assert!((p.next_allocation(&obs) - 1680.0).abs() < 1e-9);
        let mut unit = ProportionalController::new(1.0, &c).unwrap();
        let a = unit.act(&normalize_observation(19, 0.0, &c), 0.0, 0.0).unwrap();
        assert_eq!(map_action(a, &c), 4000.0);
        assert!(ProportionalController::new(0.9, &c).is_err());
    }

    #[test]
    fn rl_controller_zero_network() {
        let c = cfg();
        let mut ctl = RlController::new(PolicyParameters::zeros(&[64, 64]), true, 0).unwrap();
        let a = ctl.act(&Observation::new(0.4, 0.2), 0.0, 0.0).unwrap();
        assert_eq!(a.value(), 0.0);
        assert_eq!(map_action(a, &c), 500.0);
    }

    #[test]
    fn rl_controller_rejects_wrong_shape() {
        let mut p = PolicyParameters::zeros(&[4]);
        p.policy = crate::ppo::Mlp::zeros(&[3, 4, 1]);
        assert!(matches!(RlController::new(p, true, 0), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn rl_controller_sampling_is_seeded() {
        use rand::SeedableRng;
        let params = PolicyParameters::new(&mut ChaCha8Rng::seed_from_u64(1));
        let run = |seed| {
            let mut ctl = RlController::new(params.clone(), false, seed).unwrap();
            (0..50)
                .map(|i| ctl.act(&Observation::new(i as f64 / 50.0, 0.1), 0.0, 0.0).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(run(4), run(4));
        assert_ne!(run(4), run(5));
    }

    #[test]
    fn spec_ids() {
        for id in ["ppo", "static", "threshold", "proportional"] {
            assert_eq!(ControllerSpec::from_id(id).unwrap().id(), id);
        }
        assert!(ControllerSpec::from_id("pid").is_err());
        assert!(ControllerSpec::from_id("ppo").unwrap().build_baseline(&cfg()).is_err());
    }

    proptest! {
        #[test]
        fn outputs_within_cpu_bounds(
            users in 0u32..60,
            usage in 0.0f64..6000.0,
            alloc in 500.0f64..=4000.0,
            which in 0usize..3,
        ) {
            let c = cfg();
            let mut ctl: Box<dyn Controller> = match which {
                0 => Box::new(StaticController::new(1234.5, &c).unwrap()),
                1 => Box::new(ThresholdController::new(0.8, 0.3, 500.0, &c).unwrap()),
                _ => Box::new(ProportionalController::new(1.2, &c).unwrap()),
            };
            let a = ctl.act(&normalize_observation(users, usage, &c), usage, alloc).unwrap();
            let mc = map_action(a, &c);
            prop_assert!((c.cpu_min_mc..=c.cpu_max_mc).contains(&mc));
        }

        #[test]
        fn threshold_moves_by_one_step(usage in 0.0f64..6000.0, alloc in 1000.0f64..=3500.0) {
            let t = ThresholdController::new(0.8, 0.3, 500.0, &cfg()).unwrap();
            let d = t.next_allocation(usage, alloc) - alloc;
            prop_assert!(d == 0.0 || (d.abs() - 500.0).abs() < 1e-9);
        }
    }
}
