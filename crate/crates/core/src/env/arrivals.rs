use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::config::SliceConfig;

/// Users arriving in one control period: `Normal(traffic_mean, traffic_std)`
/// truncated to `[0, inf)` by rejection, rounded to the nearest integer.
pub fn generate_arrivals<R: Rng + ?Sized>(rng: &mut R, cfg: &SliceConfig) -> u32 {
    let mean = cfg.traffic_mean.max(0.0);
    if cfg.traffic_std == 0.0 {
        return to_users(mean);
    }
    let normal = Normal::new(mean, cfg.traffic_std).expect("validated std");
    // mean >= 0, so each draw is accepted with probability >= 1/2
    loop {
        let z = normal.sample(rng);
        if z >= 0.0 {
            return to_users(z);
        }
    }
}

fn to_users(z: f64) -> u32 {
    z.round().min(f64::from(u32::MAX)) as u32
}
