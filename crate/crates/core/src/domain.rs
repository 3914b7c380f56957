//! Value types shared by the environment, controllers and metrics.

use crate::config::SliceConfig;

/// Agent input: traffic load and CPU usage, each min-max scaled to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Observation {
    pub traffic_norm: f64,
    pub cpu_usage_norm: f64,
}

impl Observation {
    pub fn new(traffic_norm: f64, cpu_usage_norm: f64) -> Self {
        Self {
            traffic_norm: clamp01(traffic_norm),
            cpu_usage_norm: clamp01(cpu_usage_norm),
        }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.traffic_norm, self.cpu_usage_norm]
    }
}

/// Normalized CPU allocation in `[0, 1]`. Construction clamps.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct NormalizedAction(f64);

impl NormalizedAction {
    pub fn new(a: f64) -> Self {
        Self(clamp01(a))
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// The action whose unclamped mapping is `mc`.
    pub fn for_allocation(mc: f64, cfg: &SliceConfig) -> Self {
        Self::new(mc / cfg.load_norm_max_mc)
    }
}

/// One control period of observed slice state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KpiSample {
    pub step: u64,
    pub active_users: u32,
    pub cpu_usage_mc: f64,
    /// Per-UE throughput observed at the UE side.
    pub throughput_mbps: f64,
    pub allocation_mc: f64,
    pub reward: Option<f64>,
}

/// Maps a normalized action to a CPU limit in millicores.
///
/// Linear over `[0, load_norm_max_mc]`, clamped to `[cpu_min_mc, cpu_max_mc]`,
/// then optionally snapped to the `cpu_grid_mc` grid.
pub fn map_action(a: NormalizedAction, cfg: &SliceConfig) -> f64 {
    let mc = (a.value() * cfg.load_norm_max_mc).clamp(cfg.cpu_min_mc, cfg.cpu_max_mc);
    if cfg.snap_to_grid {
        // re-clamp: bounds need not sit on the grid
        ((mc / cfg.cpu_grid_mc).round() * cfg.cpu_grid_mc).clamp(cfg.cpu_min_mc, cfg.cpu_max_mc)
    } else {
        mc
    }
}

pub fn normalize_observation(users: u32, usage_mc: f64, cfg: &SliceConfig) -> Observation {
    Observation::new(
        f64::from(users) / cfg.traffic_norm_max,
        usage_mc.max(0.0) / cfg.load_norm_max_mc,
    )
}

pub(crate) fn clamp01(x: f64) -> f64 {
    if x.is_nan() {
        0.0
    } else {
        x.clamp(0.0, 1.0)
    }
}
