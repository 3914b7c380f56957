use std::fmt::Write as _;

use crate::config::SliceConfig;
use crate::controllers::StaticController;
use crate::env::SliceEnv;
use crate::error::{Error, Result};
use crate::metrics::{qos_degradation, sla_fraction, QosTrace};

use super::episode::{run_episode, EpisodeOptions};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub allocation_mc: f64,
    /// `allocation_mc / load_norm_max_mc`, the x-axis in action units.
    pub allocation_norm: f64,
    pub mean_reward: f64,
    pub beta: f64,
    pub sla_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// `allocation_mc,mean_reward,beta,sla_fraction`, 6 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("allocation_mc,mean_reward,beta,sla_fraction\n");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:.6},{:.6},{:.6},{:.6}",
                r.allocation_mc, r.mean_reward, r.beta, r.sla_fraction
            );
        }
        out
    }

    pub fn argmax(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .reduce(|best, r| if r.mean_reward > best.mean_reward { r } else { best })
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.mean_reward).collect()
    }
}

/// `[lo, lo + step, ..., hi]`.
pub fn allocation_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + step * i as f64).collect()
}

/// The default grid: `cpu_min_mc` to `cpu_max_mc` in `cpu_grid_mc` steps.
pub fn default_grid(cfg: &SliceConfig) -> Vec<f64> {
    allocation_grid(cfg.cpu_min_mc, cfg.cpu_max_mc, cfg.cpu_grid_mc)
}

/// Number of times the sign of consecutive differences flips, ignoring flat
/// steps. A unimodal curve has at most one flip, from rising to falling.
pub fn sign_changes(values: &[f64]) -> usize {
    let signs: Vec<f64> = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(f64::signum)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

pub fn is_unimodal(values: &[f64]) -> bool {
    let changes = sign_changes(values);
    let first_rising = values
        .windows(2)
        .map(|w| w[1] - w[0])
        .find(|d| *d != 0.0)
        .is_none_or(|d| d > 0.0);
    changes == 0 || (changes == 1 && first_rising)
}

/// Runs the static controller at every grid point for each seed. Rewards,
/// beta and SLA fraction are per-run values averaged over seeds. Grid points
/// run on separate threads.
pub fn sweep_allocation(cfg: &SliceConfig, grid: &[f64], steps: usize, seeds: &[u64]) -> Result<SweepResult> {
    if grid.is_empty() || seeds.is_empty() {
        return Err(Error::Contract("sweep needs a non-empty grid and at least one seed".into()));
    }
    cfg.validate()?;
    let rows = std::thread::scope(|scope| {
        let handles: Vec<_> = grid
            .iter()
            .map(|&mc| scope.spawn(move || sweep_point(cfg, mc, steps, seeds)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sweep worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(SweepResult { rows })
}

fn sweep_point(cfg: &SliceConfig, mc: f64, steps: usize, seeds: &[u64]) -> Result<SweepRow> {
    let mut env = SliceEnv::new(cfg.clone())?;
    let (mut reward, mut beta, mut sla) = (0.0, 0.0, 0.0);
    for &seed in seeds {
        let mut ctl = StaticController::new(mc, cfg)?;
        let trace = run_episode(&mut env, &mut ctl, cfg, EpisodeOptions::new(steps, seed))?;
        if let Some(cause) = &trace.meta.incomplete {
            return Err(Error::Environment(cause.clone()));
        }
        let s = trace.samples();
        let qos = QosTrace::from_samples(s)?;
        reward += s.iter().filter_map(|s| s.reward).sum::<f64>() / s.len() as f64;
        beta += qos_degradation(&qos, cfg.qos_threshold_mbps);
        sla += sla_fraction(&qos, cfg.qos_threshold_mbps);
    }
    let n = seeds.len() as f64;
    Ok(SweepRow {
        allocation_mc: mc,
        allocation_norm: mc / cfg.load_norm_max_mc,
        mean_reward: reward / n,
        beta: beta / n,
        sla_fraction: sla / n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid() {
        let g = default_grid(&SliceConfig::default());
        assert_eq!(g, vec![500.0, 1000.0, 1500.0, 2000.0, 2500.0, 3000.0, 3500.0, 4000.0]);
    }

    #[test]
    fn unimodality() {
        assert!(is_unimodal(&[0.1, 0.5, 0.9, 0.4, 0.2]));
        assert!(is_unimodal(&[0.9, 0.4, 0.2]));
        assert!(is_unimodal(&[0.1, 0.5, 0.5, 0.2]));
        assert!(!is_unimodal(&[0.1, 0.5, 0.3, 0.4]));
        assert!(!is_unimodal(&[0.5, 0.1, 0.4]));
        assert_eq!(sign_changes(&[1.0, 2.0, 1.0, 2.0]), 2);
    }

    #[test]
    fn single_point() {
        let cfg = SliceConfig::calibrated();
        let r = sweep_allocation(&cfg, &[cfg.cpu_min_mc], 50, &[0]).unwrap();
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.to_csv().lines().count(), 2);
        assert!(sweep_allocation(&cfg, &[], 50, &[0]).is_err());
        assert!(sweep_allocation(&cfg, &[1000.0], 50, &[]).is_err());
    }

    #[test]
    fn over_allocation_penalized() {
        let cfg = SliceConfig::calibrated();
        let r = sweep_allocation(&cfg, &default_grid(&cfg), 900, &[0, 1, 2]).unwrap();
        let best = r.argmax().unwrap();
        assert!(r.rows.last().unwrap().mean_reward < best.mean_reward);
        let betas: Vec<f64> = r.rows.iter().map(|r| r.beta).collect();
        assert!(betas.windows(2).all(|w| w[1] <= w[0]));
    }
}
