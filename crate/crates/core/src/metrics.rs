//! Reward, load estimate, QoS degradation and trace aggregates.

use std::fmt;

use crate::config::SliceConfig;
use crate::domain::{clamp01, KpiSample, NormalizedAction};
use crate::error::{Error, Result};

/// Normalized slice load estimate `d` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct LoadEstimate(f64);

impl LoadEstimate {
    pub fn new(d: f64) -> Self {
        Self(clamp01(d))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Load estimate from the active user count: CPU demand of the active UEs
/// scaled by `load_norm_max_mc`.
pub fn load_estimate(active_users: u32, cfg: &SliceConfig) -> LoadEstimate {
    LoadEstimate::new(f64::from(active_users) * cfg.per_ue_demand_mc / cfg.load_norm_max_mc)
}

/// `1 - mean |a_i - d_i|` over slices. Equal to 1 iff allocation matches load.
pub fn reward(actions: &[NormalizedAction], loads: &[LoadEstimate]) -> Result<f64> {
    if actions.is_empty() || actions.len() != loads.len() {
        return Err(Error::Contract(format!(
            "reward needs equal non-empty inputs, got {} actions and {} loads",
            actions.len(),
            loads.len()
        )));
    }
    let gap: f64 = actions
        .iter()
        .zip(loads)
        .map(|(a, d)| (a.value() - d.value()).abs())
        .sum();
    Ok(1.0 - gap / actions.len() as f64)
}

/// Single-slice reward.
pub fn reward_single(a: NormalizedAction, d: LoadEstimate) -> f64 {
    1.0 - (a.value() - d.value()).abs()
}

/// Per-step traffic `x(t)` and throughput `q(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QosTrace {
    x: Vec<f64>,
    q: Vec<f64>,
}

impl QosTrace {
    pub fn new(x: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != q.len() {
            return Err(Error::Contract(format!(
                "QoS trace needs equal non-empty columns, got {} and {}",
                x.len(),
                q.len()
            )));
        }
        if x.iter().chain(&q).any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Contract(
                "QoS trace values must be finite and non-negative".into(),
            ));
        }
        Ok(Self { x, q })
    }

    pub fn from_samples(samples: &[KpiSample]) -> Result<Self> {
        Self::new(
            samples.iter().map(|s| f64::from(s.active_users)).collect(),
            samples.iter().map(|s| s.throughput_mbps).collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn traffic(&self) -> &[f64] {
        &self.x
    }

    pub fn throughput(&self) -> &[f64] {
        &self.q
    }
}

/// Traffic-weighted fraction of steps with `q(t) <= q_thresh`.
///
/// A trace with zero total traffic has no degradation: returns 0.
pub fn qos_degradation(trace: &QosTrace, q_thresh: f64) -> f64 {
    let (violating, total) = trace
        .x
        .iter()
        .zip(&trace.q)
        .fold((0.0, 0.0), |(v, t), (&x, &q)| {
            (if q <= q_thresh { v + x } else { v }, t + x)
        });
    if total == 0.0 {
        0.0
    } else {
        violating / total
    }
}

/// Fraction of steps with throughput strictly above `q_thresh`.
pub fn sla_fraction(trace: &QosTrace, q_thresh: f64) -> f64 {
    let ok = trace.q.iter().filter(|&&q| q > q_thresh).count();
    ok as f64 / trace.len() as f64
}

pub fn mean_allocation(samples: &[KpiSample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Contract("mean_allocation of an empty trace".into()));
    }
    Ok(samples.iter().map(|s| s.allocation_mc).sum::<f64>() / samples.len() as f64)
}

/// Mean of the rewards that are set; `None` when none are.
pub fn mean_reward(samples: &[KpiSample]) -> Option<f64> {
    let (sum, n) = samples
        .iter()
        .filter_map(|s| s.reward)
        .fold((0.0, 0usize), |(s, n), r| (s + r, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Aggregates reported for a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsSummary {
    pub mean_allocation_mc: f64,
    pub beta: f64,
    pub sla_fraction: f64,
    pub mean_reward: f64,
}

impl MetricsSummary {
    pub fn from_samples(samples: &[KpiSample], cfg: &SliceConfig) -> Result<Self> {
        let qos = QosTrace::from_samples(samples)?;
        Ok(Self {
            mean_allocation_mc: mean_allocation(samples)?,
            beta: qos_degradation(&qos, cfg.qos_threshold_mbps),
            sla_fraction: sla_fraction(&qos, cfg.qos_threshold_mbps),
            mean_reward: mean_reward(samples).unwrap_or(f64::NAN),
        })
    }
}

impl fmt::Display for MetricsSummary {
    /// `key=value` lines, 6 decimals.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mean_allocation_mc={:.6}", self.mean_allocation_mc)?;
        writeln!(f, "beta={:.6}", self.beta)?;
        writeln!(f, "sla_fraction={:.6}", self.sla_fraction)?;
        writeln!(f, "mean_reward={:.6}", self.mean_reward)?;
        writeln!(f, "beta_zero_traffic_convention=0")
    }
}
