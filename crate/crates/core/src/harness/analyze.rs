use std::fmt;
use std::path::Path;

use crate::config::SliceConfig;
use crate::error::Result;
use crate::metrics::MetricsSummary;

use super::episode::step_reward;
use super::trace::RunTrace;

/// Reference operating point to compare a trace against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub allocation_mc: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub summary: MetricsSummary,
    pub rows: usize,
    /// Rows whose reward column differs from the reward recomputed from
    /// allocation and users, compared at the CSV's 6-decimal precision.
    pub reward_mismatches: usize,
    pub reference: Option<Reference>,
}

impl Analysis {
    /// Mean allocation as a fraction of the reference allocation.
    pub fn cpu_ratio(&self) -> Option<f64> {
        self.reference
            .map(|r| self.summary.mean_allocation_mc / r.allocation_mc)
    }
}

impl fmt::Display for Analysis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.summary)?;
        writeln!(f, "rows={}", self.rows)?;
        writeln!(f, "reward_mismatches={}", self.reward_mismatches)?;
        if let (Some(r), Some(ratio)) = (self.reference, self.cpu_ratio()) {
            writeln!(f, "reference_allocation_mc={:.6}", r.allocation_mc)?;
            writeln!(f, "reference_beta={:.6}", r.beta)?;
            writeln!(f, "cpu_ratio={ratio:.6}")?;
            writeln!(f, "beta_delta={:.6}", self.summary.beta - r.beta)?;
        }
        Ok(())
    }
}

pub fn analyze_trace(trace: &RunTrace, cfg: &SliceConfig, reference: Option<Reference>) -> Result<Analysis> {
    let summary = MetricsSummary::from_samples(trace.samples(), cfg)?;
    let reward_mismatches = trace
        .samples()
        .iter()
        .filter(|s| match s.reward {
            Some(r) => {
                let again = step_reward(s.allocation_mc, s.active_users, cfg);
                format!("{again:.6}") != format!("{r:.6}")
            }
            None => false,
        })
        .count();
    Ok(Analysis {
        summary,
        rows: trace.len(),
        reward_mismatches,
        reference,
    })
}

pub fn analyze(path: impl AsRef<Path>, cfg: &SliceConfig, reference: Option<Reference>) -> Result<Analysis> {
    analyze_trace(&RunTrace::load(path)?, cfg, reference)
}
