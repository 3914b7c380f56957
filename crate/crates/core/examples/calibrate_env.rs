// Fit the slice so that 2945.72 mc at 5 users/s sees a degradation of 0.10.

use rl_loop::env::{calibrate, fixed_allocation_beta};
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cal = calibrate(&SliceConfig::default(), 2945.72, 0.10)?;
    println!("searched {} grid points", cal.grid_points);
    println!("achieved beta {:.4}", cal.achieved_beta);
    print!("{}", cal.config.to_kv_string());
    println!("matches bundled calibrated.conf: {}", cal.config == SliceConfig::calibrated());

    let seeds: Vec<u64> = (0..10).collect();
    for mc in [1000.0, 1500.0, 2000.0, 2945.72, 4000.0] {
        println!("beta({mc} mc) = {:.4}", fixed_allocation_beta(&cal.config, mc, &seeds, 900)?);
    }
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
