// Mean reward, QoS degradation and SLA fraction against a fixed allocation.

use rl_loop::harness::{default_grid, is_unimodal, sweep_allocation};
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::calibrated();
    let seeds: Vec<u64> = (0..10).collect();
    let result = sweep_allocation(&cfg, &default_grid(&cfg), 900, &seeds)?;

    println!("{:>8} {:>6} {:>8} {:>7} {:>7}", "mc", "norm", "reward", "beta", "sla");
    for r in &result.rows {
        println!(
            "{:>8.0} {:>6.3} {:>8.4} {:>7.4} {:>7.4}",
            r.allocation_mc, r.allocation_norm, r.mean_reward, r.beta, r.sla_fraction
        );
    }
    if let Some(best) = result.argmax() {
        println!("peak at {} mc, unimodal: {}", best.allocation_mc, is_unimodal(&result.rewards()));
    }
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
