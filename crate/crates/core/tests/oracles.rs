//! Library results checked against independently written reference
//! computations.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Normal};

use rl_loop::env::generate_arrivals;
use rl_loop::metrics::{load_estimate, qos_degradation, reward, sla_fraction, LoadEstimate, QosTrace};
use rl_loop::ppo::{gae_unnormalized, Mlp, PolicyParameters, PpoHyperparams, TrajectoryBuffer, Transition};
use rl_loop::{NormalizedAction, Observation, SliceConfig};

fn brute_reward(a: &[f64], d: &[f64]) -> f64 {
    let mut gap = 0.0;
    for i in 0..a.len() {
        gap += if a[i] > d[i] { a[i] - d[i] } else { d[i] - a[i] };
    }
    1.0 - gap / a.len() as f64
}

fn brute_beta(x: &[f64], q: &[f64], thr: f64) -> f64 {
    let (mut bad, mut total) = (0.0, 0.0);
    for t in 0..x.len() {
        total += x[t];
        if q[t] <= thr {
            bad += x[t];
        }
    }
    if total == 0.0 {
        0.0
    } else {
        bad / total
    }
}

#[test]
fn reward_matches_direct_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..1000 {
        let n = rng.random_range(1..8);
        let a: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let d: Vec<f64> = (0..n).map(|_| rng.random()).collect();
        let got = reward(
            &a.iter().map(|&v| NormalizedAction::new(v)).collect::<Vec<_>>(),
            &d.iter().map(|&v| LoadEstimate::new(v)).collect::<Vec<_>>(),
        )
        .unwrap();
        assert!((got - brute_reward(&a, &d)).abs() <= 1e-12);
    }
}

#[test]
fn beta_and_sla_match_loops() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..1000 {
        let n = rng.random_range(1..200);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0u32..15))).collect();
        let q: Vec<f64> = (0..n)
            .map(|_| if rng.random_bool(0.1) { 1.0 } else { rng.random_range(0.0..3.0) })
            .collect();
        let trace = QosTrace::new(x.clone(), q.clone()).unwrap();
        assert!((qos_degradation(&trace, 1.0) - brute_beta(&x, &q, 1.0)).abs() <= 1e-12);
        let above = q.iter().filter(|&&v| v > 1.0).count() as f64 / n as f64;
        assert!((sla_fraction(&trace, 1.0) - above).abs() <= 1e-12);
    }
}

#[test]
fn load_estimate_direct() {
    let cfg = SliceConfig::default();
    assert!((load_estimate(5, &cfg).value() - 0.35).abs() < 1e-15);
    assert_eq!(load_estimate(100, &cfg).value(), 1.0);
}

/// Mean of `round(Z)` for `Z ~ Normal(m, s)` conditioned on `Z >= 0`.
fn rounded_truncated_mean(m: f64, s: f64) -> f64 {
    let n = Normal::new(m, s).unwrap();
    let mass = 1.0 - n.cdf(0.0);
    let mut mean = 0.0;
    for k in 1..200 {
        let lo = (k as f64 - 0.5).max(0.0);
        let hi = k as f64 + 0.5;
        mean += k as f64 * (n.cdf(hi) - n.cdf(lo)) / mass;
    }
    mean
}

#[test]
fn arrivals_follow_truncated_normal() {
    for (m, s) in [(5.0, 3.0), (5.0, 3.75), (2.0, 4.0)] {
        let cfg = SliceConfig {
            traffic_mean: m,
            traffic_std: s,
            ..SliceConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000;
        let empirical = (0..n).map(|_| f64::from(generate_arrivals(&mut rng, &cfg))).sum::<f64>() / n as f64;
        let expected = rounded_truncated_mean(m, s);
        assert!(
            (empirical - expected).abs() / expected < 0.02,
            "mean {m} std {s}: {empirical} vs {expected}"
        );
    }
}

#[test]
fn sampled_actions_have_policy_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut params = PolicyParameters::new(&mut rng);
    params.log_std = -0.7;
    let obs = Observation::new(0.3, 0.6);
    let mean = params.forward(&obs).unwrap().mean;
    let n = 100_000;
    let raws: Vec<f64> = (0..n).map(|_| params.sample_action(&obs, &mut rng).unwrap().raw).collect();
    let m = raws.iter().sum::<f64>() / n as f64;
    let sd = (raws.iter().map(|r| (r - m).powi(2)).sum::<f64>() / n as f64).sqrt();
    let std = (-0.7f64).exp();
    assert!((m - mean).abs() < 0.02 * std, "{m} vs {mean}");
    assert!((sd - std).abs() / std < 0.02, "{sd} vs {std}");
}

#[test]
fn narrow_policy_stays_near_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut params = PolicyParameters::new(&mut rng);
    params.log_std = -5.0;
    let obs = Observation::new(0.5, 0.5);
    let mean = params.forward(&obs).unwrap().mean;
    let far = (0..100_000)
        .filter(|_| (params.sample_action(&obs, &mut rng).unwrap().raw - mean).abs() >= 0.05)
        .count();
    // 0.05 is over 7 sigma; allow the 0.01% the bound states
    assert!(far <= 10);
}

#[test]
fn gae_matches_recursion_oracle() {
    let hp = PpoHyperparams {
        gamma: 0.9,
        gae_lambda: 0.8,
        ..PpoHyperparams::default()
    };
    let r = [1.0, 0.5, 0.25];
    let v = [0.2, 0.4, 0.1];
    let bootstrap = 0.3;
    let buffer: TrajectoryBuffer = (0..3)
        .map(|t| Transition {
            state: Observation::default(),
            action: NormalizedAction::new(0.5),
            raw_action: 0.5,
            log_prob: 0.0,
            value: v[t],
            reward: r[t],
            next_state: Observation::default(),
            done: false,
        })
        .collect();
    let got = gae_unnormalized(&buffer, &hp, bootstrap).unwrap();

    // forward-looking sum of discounted TD errors
    let next_v = [v[1], v[2], bootstrap];
    let delta: Vec<f64> = (0..3).map(|t| r[t] + 0.9 * next_v[t] - v[t]).collect();
    for t in 0..3 {
        let mut adv = 0.0;
        for (k, d) in delta.iter().enumerate().skip(t) {
            adv += (0.9f64 * 0.8).powi((k - t) as i32) * d;
        }
        assert!((got.advantages[t] - adv).abs() < 1e-12);
        assert!((got.returns[t] - (adv + v[t])).abs() < 1e-12);
    }
}

fn matmul_forward(net: &Mlp, x: &[f64]) -> f64 {
    let mut h = x.to_vec();
    for (k, layer) in net.layers.iter().enumerate() {
        let mut next = Vec::new();
        for o in 0..layer.outputs {
            let mut z = layer.bias[o];
            for i in 0..layer.inputs {
                z += layer.weights[o * layer.inputs + i] * h[i];
            }
            next.push(if k + 1 < net.layers.len() { z.tanh() } else { z });
        }
        h = next;
    }
    h[0]
}

#[test]
fn forward_matches_matmul_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..50 {
        let mut params = PolicyParameters::new(&mut rng);
        let mut flat = params.to_flat();
        flat.iter_mut().for_each(|p| *p += rng.random_range(-0.3..0.3));
        params.set_flat(&flat);
        let obs = Observation::new(rng.random(), rng.random());
        let out = params.forward(&obs).unwrap();
        let x = obs.as_array();
        assert!((out.mean - matmul_forward(&params.policy, &x)).abs() < 1e-12);
        assert!((out.value - matmul_forward(&params.value, &x)).abs() < 1e-12);
    }
}
