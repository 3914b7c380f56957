//! Run traces and their CSV form.
//!
//! ```text
//! # seed=42
//! # config_hash=3f2a9c0d11e4b7a5
//! # controller=static
//! # episodes=1
//! step,active_users,cpu_usage_mc,throughput_mbps,allocation_mc,reward
//! 0,4,1108.532211,20.000000,2945.720000,0.425430
//! ```
//!
//! Metadata lines start with `# ` and precede the header. A trace cut short by
//! a fault carries `# incomplete=<cause>`. Rows without a reward leave the
//! last column empty.

use std::fmt::Write as _;
use std::path::Path;

use crate::domain::KpiSample;
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "step,active_users,cpu_usage_mc,throughput_mbps,allocation_mc,reward";

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TraceMeta {
    pub seed: u64,
    pub config_hash: String,
    pub controller: String,
    pub episodes: usize,
    /// Why the run stopped early, if it did.
    pub incomplete: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunTrace {
    pub meta: TraceMeta,
    samples: Vec<KpiSample>,
}

impl RunTrace {
    pub fn new(meta: TraceMeta) -> Self {
        Self {
            meta,
            samples: Vec::new(),
        }
    }

    /// Appends a row. Steps must strictly increase.
    pub fn push(&mut self, sample: KpiSample) -> Result<()> {
        if let Some(last) = self.samples.last() {
            if sample.step <= last.step {
                return Err(Error::Contract(format!(
                    "trace step {} does not follow {}",
                    sample.step, last.step
                )));
            }
        }
        self.samples.push(sample);
        Ok(())
    }

    pub fn samples(&self) -> &[KpiSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn is_complete(&self) -> bool {
        self.meta.incomplete.is_none()
    }

    /// Appends another trace's rows, renumbered to continue this one.
    pub fn extend_renumbered(&mut self, other: &RunTrace) {
        let offset = self.samples.last().map_or(0, |s| s.step + 1);
        self.samples.extend(other.samples.iter().enumerate().map(|(i, s)| KpiSample {
            step: offset + i as u64,
            ..*s
        }));
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.samples.len() + 6));
        let m = &self.meta;
        let _ = writeln!(out, "# seed={}", m.seed);
        let _ = writeln!(out, "# config_hash={}", m.config_hash);
        let _ = writeln!(out, "# controller={}", m.controller);
        let _ = writeln!(out, "# episodes={}", m.episodes);
        if let Some(cause) = &m.incomplete {
            let _ = writeln!(out, "# incomplete={}", cause.replace('\n', " "));
        }
        out.push_str(CSV_HEADER);
        out.push('\n');
        for s in &self.samples {
            let _ = write!(
                out,
                "{},{},{:.6},{:.6},{:.6},",
                s.step, s.active_users, s.cpu_usage_mc, s.throughput_mbps, s.allocation_mc
            );
            if let Some(r) = s.reward {
                let _ = write!(out, "{r:.6}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut meta = TraceMeta::default();
        let mut trace = None::<RunTrace>;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if trace.is_none() {
                if let Some(kv) = line.strip_prefix('#') {
                    parse_meta(&mut meta, kv.trim(), line_no)?;
                    continue;
                }
                if line.trim() != CSV_HEADER {
                    return Err(Error::parse(line_no, format!("expected header {CSV_HEADER:?}")));
                }
                trace = Some(RunTrace::new(std::mem::take(&mut meta)));
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let sample = parse_row(line, line_no)?;
            let t = trace.as_mut().expect("header seen");
            t.push(sample).map_err(|e| Error::parse(line_no, e.to_string()))?;
        }
        trace.ok_or_else(|| Error::parse(text.lines().count().max(1), "missing CSV header"))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse_csv(&std::fs::read_to_string(path)?)
    }
}

fn parse_meta(meta: &mut TraceMeta, kv: &str, line_no: usize) -> Result<()> {
    let Some((key, value)) = kv.split_once('=') else {
        // free-form comment
        return Ok(());
    };
    let bad = |what: &str| Error::parse(line_no, format!("bad {what} {value:?}"));
    match key.trim() {
        "seed" => meta.seed = value.parse().map_err(|_| bad("seed"))?,
        "config_hash" => meta.config_hash = value.to_string(),
        "controller" => meta.controller = value.to_string(),
        "episodes" => meta.episodes = value.parse().map_err(|_| bad("episode count"))?,
        "incomplete" => meta.incomplete = Some(value.to_string()),
        _ => {}
    }
    Ok(())
}

fn parse_row(line: &str, line_no: usize) -> Result<KpiSample> {
    let fields: Vec<&str> = line.split(',').collect();
    if fields.len() != 6 {
        return Err(Error::parse(line_no, format!("expected 6 fields, got {}", fields.len())));
    }
    let num = |i: usize, name: &str| -> Result<f64> {
        let v: f64 = fields[i]
            .trim()
            .parse()
            .map_err(|_| Error::parse(line_no, format!("{name}: not a number: {:?}", fields[i])))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::parse(line_no, format!("{name}: non-finite value")))
        }
    };
    let step = fields[0]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("step: not an integer: {:?}", fields[0])))?;
    let active_users = fields[1]
        .trim()
        .parse()
        .map_err(|_| Error::parse(line_no, format!("active_users: not an integer: {:?}", fields[1])))?;
    let sample = KpiSample {
        step,
        active_users,
        cpu_usage_mc: num(2, "cpu_usage_mc")?,
        throughput_mbps: num(3, "throughput_mbps")?,
        allocation_mc: num(4, "allocation_mc")?,
        reward: if fields[5].trim().is_empty() {
            None
        } else {
            Some(num(5, "reward")?)
        },
    };
    if sample.cpu_usage_mc < 0.0 || sample.throughput_mbps < 0.0 || sample.allocation_mc <= 0.0 {
        return Err(Error::parse(line_no, "negative usage, throughput or allocation"));
    }
    if let Some(r) = sample.reward {
        if !(0.0..=1.0).contains(&r) {
            return Err(Error::parse(line_no, format!("reward {r} outside [0, 1]")));
        }
    }
    Ok(sample)
}
