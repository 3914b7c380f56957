// Drive the simulated slice directly through `EnvInterface`.

use rl_loop::env::{EnvInterface, SliceEnv};
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::calibrated();
    let mut env = SliceEnv::new(cfg)?;

    for limit in [800.0, 1500.0, 3000.0] {
        let first = env.reset(7);
        println!("limit {limit} mc, first observation {:?}", first.as_array());
        env.apply_cpu_limit(limit);
        println!("  step users usage_mc  tput_mbps");
        for _ in 0..8 {
            let (_, s) = env.step()?;
            println!(
                "  {:>4} {:>5} {:>8.1} {:>10.3}",
                s.step, s.active_users, s.cpu_usage_mc, s.throughput_mbps
            );
        }
    }
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
