//! Plain-text parameter checkpoints.
//!
//! ```text
//! rl-loop-checkpoint v1
//! policy_layers=2,64,64,1
//! value_layers=2,64,64,1
//! learning_rate=0.0003
//! gamma=0.99
//! rollout_len=32
//! gae_lambda=0.5
//! clip_eps=0.2
//! epochs_per_update=10
//! minibatch_size=32
//! value_coef=0.5
//! entropy_coef=0
//! max_grad_norm=0.5
//! params=8899
//! <one value per line>
//! ```
//!
//! Values follow the flat order of [`PolicyParameters::to_flat`]: per policy
//! layer the row-major weights then the bias, `log_std`, then the value
//! layers in the same way. Floats use Rust's shortest round-trip formatting,
//! so save/load is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::mlp::Mlp;
use super::policy::PolicyParameters;
use super::PpoHyperparams;
use crate::error::{Error, Result};

const MAGIC: &str = "rl-loop-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParameters,
    pub hp: PpoHyperparams,
}

pub fn write_checkpoint(params: &PolicyParameters, hp: &PpoHyperparams) -> String {
    let mut s = String::new();
    let join = |sizes: Vec<usize>| {
        sizes
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    };
    let _ = writeln!(s, "{MAGIC}");
    let _ = writeln!(s, "policy_layers={}", join(params.policy.sizes()));
    let _ = writeln!(s, "value_layers={}", join(params.value.sizes()));
    let _ = writeln!(s, "learning_rate={}", hp.learning_rate);
    let _ = writeln!(s, "gamma={}", hp.gamma);
    let _ = writeln!(s, "rollout_len={}", hp.rollout_len);
    let _ = writeln!(s, "gae_lambda={}", hp.gae_lambda);
    let _ = writeln!(s, "clip_eps={}", hp.clip_eps);
    let _ = writeln!(s, "epochs_per_update={}", hp.epochs_per_update);
    let _ = writeln!(s, "minibatch_size={}", hp.minibatch_size);
    let _ = writeln!(s, "value_coef={}", hp.value_coef);
    let _ = writeln!(s, "entropy_coef={}", hp.entropy_coef);
    let _ = writeln!(s, "max_grad_norm={}", hp.max_grad_norm);
    let flat = params.to_flat();
    let _ = writeln!(s, "params={}", flat.len());
    for v in flat {
        let _ = writeln!(s, "{v}");
    }
    s
}

pub fn read_checkpoint(text: &str) -> Result<Checkpoint> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let bad = |line: usize, msg: String| Error::Checkpoint(format!("line {line}: {msg}"));

    match lines.next() {
        Some((_, MAGIC)) => {}
        Some((n, other)) => return Err(bad(n, format!("unsupported header {other:?}"))),
        None => return Err(Error::Checkpoint("empty file".into())),
    }

    let mut field = |key: &str| -> Result<(usize, String)> {
        let (n, line) = lines
            .next()
            .ok_or_else(|| Error::Checkpoint(format!("missing {key}")))?;
        match line.split_once('=') {
            Some((k, v)) if k == key => Ok((n, v.to_string())),
            _ => Err(bad(n, format!("expected {key}=..., got {line:?}"))),
        }
    };
    fn parse<T: std::str::FromStr>(n: usize, key: &str, v: &str) -> Result<T> {
        v.parse()
            .map_err(|_| Error::Checkpoint(format!("line {n}: bad {key} value {v:?}")))
    }
    let sizes = |n: usize, v: &str| -> Result<Vec<usize>> {
        let s: Vec<usize> = v
            .split(',')
            .map(|p| parse(n, "layer size", p))
            .collect::<Result<_>>()?;
        if s.len() < 2 || s.contains(&0) {
            return Err(bad(n, format!("bad layer shape {v:?}")));
        }
        Ok(s)
    };

    let (n, v) = field("policy_layers")?;
    let policy_sizes = sizes(n, &v)?;
    let (n, v) = field("value_layers")?;
    let value_sizes = sizes(n, &v)?;

    let mut hp = PpoHyperparams::default();
    macro_rules! hp_field {
        ($name:ident) => {{
            let (n, v) = field(stringify!($name))?;
            hp.$name = parse(n, stringify!($name), &v)?;
        }};
    }
    hp_field!(learning_rate);
    hp_field!(gamma);
    hp_field!(rollout_len);
    hp_field!(gae_lambda);
    hp_field!(clip_eps);
    hp_field!(epochs_per_update);
    hp_field!(minibatch_size);
    hp_field!(value_coef);
    hp_field!(entropy_coef);
    hp_field!(max_grad_norm);

    let (n, v) = field("params")?;
    let count: usize = parse(n, "params", &v)?;
    let mut params = PolicyParameters {
        policy: Mlp::zeros(&policy_sizes),
        log_std: 0.0,
        value: Mlp::zeros(&value_sizes),
    };
    if count != params.num_params() {
        return Err(bad(
            n,
            format!("params={count} but layer shapes need {}", params.num_params()),
        ));
    }
    let mut flat = Vec::with_capacity(count);
    for (n, line) in lines.by_ref() {
        if line.is_empty() {
            continue;
        }
        if flat.len() == count {
            return Err(bad(n, "trailing data after parameters".into()));
        }
        let v: f64 = parse(n, "parameter", line)?;
        if !v.is_finite() {
            return Err(bad(n, "non-finite parameter".into()));
        }
        flat.push(v);
    }
    if flat.len() != count {
        return Err(Error::Checkpoint(format!(
            "expected {count} parameters, found {}",
            flat.len()
        )));
    }
    params.set_flat(&flat);
    Ok(Checkpoint { params, hp })
}

pub fn save_checkpoint(path: impl AsRef<Path>, params: &PolicyParameters, hp: &PpoHyperparams) -> Result<()> {
    std::fs::write(path, write_checkpoint(params, hp))?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Checkpoint> {
    read_checkpoint(&std::fs::read_to_string(path)?)
}
