//! Slice configuration and its flat `key=value` file format.
//!
//! One key per line, keys are the field names of [`SliceConfig`]. Blank lines
//! and lines starting with `#` are ignored. Unknown or duplicated keys are
//! rejected; missing keys keep their default.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Calibrated environment constants shipped with the crate.
const CALIBRATED_CONF: &str = include_str!("../configs/calibrated.conf");

/// Everything the controller, environment and metrics need to agree on.
///
/// Units: `*_mc` are millicores, `*_mbps` megabits per second,
/// `traffic_*` users per second.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceConfig {
    pub cpu_min_mc: f64,
    pub cpu_max_mc: f64,
    pub cpu_grid_mc: f64,
    pub snap_to_grid: bool,
    pub traffic_mean: f64,
    pub traffic_std: f64,
    pub session_len_s: u32,
    pub per_ue_demand_mc: f64,
    pub per_ue_target_rate_mbps: f64,
    pub degradation_exponent: f64,
    pub usage_noise_rel: f64,
    pub qos_threshold_mbps: f64,
    pub load_norm_max_mc: f64,
    pub traffic_norm_max: f64,
    /// Always 1 second; kept as a field so config files can state it.
    pub control_period_s: f64,
}

impl Default for SliceConfig {
    fn default() -> Self {
        Self {
            cpu_min_mc: 500.0,
            cpu_max_mc: 4000.0,
            cpu_grid_mc: 500.0,
            snap_to_grid: false,
            traffic_mean: 5.0,
            traffic_std: 3.0,
            session_len_s: 1,
            per_ue_demand_mc: 280.0,
            per_ue_target_rate_mbps: 20.0,
            degradation_exponent: 3.0,
            usage_noise_rel: 0.02,
            qos_threshold_mbps: 1.0,
            load_norm_max_mc: 4000.0,
            traffic_norm_max: 20.0,
            control_period_s: 1.0,
        }
    }
}

const KEYS: [&str; 15] = [
    "cpu_min_mc",
    "cpu_max_mc",
    "cpu_grid_mc",
    "snap_to_grid",
    "traffic_mean",
    "traffic_std",
    "session_len_s",
    "per_ue_demand_mc",
    "per_ue_target_rate_mbps",
    "degradation_exponent",
    "usage_noise_rel",
    "qos_threshold_mbps",
    "load_norm_max_mc",
    "traffic_norm_max",
    "control_period_s",
];

impl SliceConfig {
    /// The environment calibrated so that a fixed 2945.72 mc allocation at
    /// 5 users/s sees a QoS degradation of about 0.10. See `configs/calibrated.conf`.
    pub fn calibrated() -> Self {
        Self::parse(CALIBRATED_CONF).expect("bundled calibrated.conf is valid")
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [
            self.cpu_min_mc,
            self.cpu_max_mc,
            self.cpu_grid_mc,
            self.traffic_mean,
            self.traffic_std,
            self.per_ue_demand_mc,
            self.per_ue_target_rate_mbps,
            self.degradation_exponent,
            self.usage_noise_rel,
            self.qos_threshold_mbps,
            self.load_norm_max_mc,
            self.traffic_norm_max,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !all_finite {
            return Err(Error::Config("all numeric fields must be finite".into()));
        }
        let checks: [(bool, &str); 11] = [
            (self.cpu_min_mc > 0.0, "cpu_min_mc must be > 0"),
            (self.cpu_min_mc <= self.cpu_max_mc, "cpu_min_mc must be <= cpu_max_mc"),
            (self.cpu_grid_mc > 0.0, "cpu_grid_mc must be > 0"),
            (self.load_norm_max_mc > 0.0, "load_norm_max_mc must be > 0"),
            (self.traffic_norm_max > 0.0, "traffic_norm_max must be > 0"),
            (self.qos_threshold_mbps > 0.0, "qos_threshold_mbps must be > 0"),
            (self.degradation_exponent >= 1.0, "degradation_exponent must be >= 1"),
            (self.traffic_std >= 0.0, "traffic_std must be >= 0"),
            (self.traffic_mean >= 0.0, "traffic_mean must be >= 0"),
            (
                self.session_len_s >= 1 && self.per_ue_demand_mc >= 0.0,
                "session_len_s must be >= 1 and per_ue_demand_mc >= 0",
            ),
            (
                (0.0..1.0).contains(&self.usage_noise_rel) && self.per_ue_target_rate_mbps > 0.0,
                "usage_noise_rel must be in [0, 1) and per_ue_target_rate_mbps > 0",
            ),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::Config(msg.into()));
            }
        }
        if self.control_period_s != 1.0 {
            return Err(Error::Config("control_period_s is fixed at 1".into()));
        }
        Ok(())
    }

    /// Parses a config file body. The result is validated.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let mut seen = HashSet::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("expected key=value, got {line:?}")))?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(Error::parse(line_no, format!("duplicate key {key:?}")));
            }
            cfg.set(key, value).map_err(|msg| Error::parse(line_no, msg))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Sets one field from its textual value. Errors are plain messages so the
    /// caller can attach a line number.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num(key: &str, value: &str) -> std::result::Result<f64, String> {
            value
                .parse::<f64>()
                .map_err(|_| format!("{key}: not a number: {value:?}"))
        }
        match key {
            "cpu_min_mc" => self.cpu_min_mc = num(key, value)?,
            "cpu_max_mc" => self.cpu_max_mc = num(key, value)?,
            "cpu_grid_mc" => self.cpu_grid_mc = num(key, value)?,
            "snap_to_grid" => {
                self.snap_to_grid = value
                    .parse()
                    .map_err(|_| format!("snap_to_grid: expected true/false, got {value:?}"))?
            }
            "traffic_mean" => self.traffic_mean = num(key, value)?,
            "traffic_std" => self.traffic_std = num(key, value)?,
            "session_len_s" => {
                self.session_len_s = value
                    .parse()
                    .map_err(|_| format!("session_len_s: expected a positive integer, got {value:?}"))?
            }
            "per_ue_demand_mc" => self.per_ue_demand_mc = num(key, value)?,
            "per_ue_target_rate_mbps" => self.per_ue_target_rate_mbps = num(key, value)?,
            "degradation_exponent" => self.degradation_exponent = num(key, value)?,
            "usage_noise_rel" => self.usage_noise_rel = num(key, value)?,
            "qos_threshold_mbps" => self.qos_threshold_mbps = num(key, value)?,
            "load_norm_max_mc" => self.load_norm_max_mc = num(key, value)?,
            "traffic_norm_max" => self.traffic_norm_max = num(key, value)?,
            "control_period_s" => self.control_period_s = num(key, value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn is_known_key(key: &str) -> bool {
        KEYS.contains(&key)
    }

    /// Canonical `key=value` rendering; parses back to an identical config.
    pub fn to_kv_string(&self) -> String {
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k}={v}");
        };
        put("cpu_min_mc", self.cpu_min_mc.to_string());
        put("cpu_max_mc", self.cpu_max_mc.to_string());
        put("cpu_grid_mc", self.cpu_grid_mc.to_string());
        put("snap_to_grid", self.snap_to_grid.to_string());
        put("traffic_mean", self.traffic_mean.to_string());
        put("traffic_std", self.traffic_std.to_string());
        put("session_len_s", self.session_len_s.to_string());
        put("per_ue_demand_mc", self.per_ue_demand_mc.to_string());
        put("per_ue_target_rate_mbps", self.per_ue_target_rate_mbps.to_string());
        put("degradation_exponent", self.degradation_exponent.to_string());
        put("usage_noise_rel", self.usage_noise_rel.to_string());
        put("qos_threshold_mbps", self.qos_threshold_mbps.to_string());
        put("load_norm_max_mc", self.load_norm_max_mc.to_string());
        put("traffic_norm_max", self.traffic_norm_max.to_string());
        put("control_period_s", self.control_period_s.to_string());
        out
    }

    /// Short stable fingerprint of the canonical rendering, recorded in trace headers.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.to_kv_string().as_bytes());
        digest[..8].iter().fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}
