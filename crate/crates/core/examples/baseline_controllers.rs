// Static, threshold and proportional controllers on the calibrated slice.

use rl_loop::controllers::{Controller, ProportionalController, StaticController, ThresholdController};
use rl_loop::env::SliceEnv;
use rl_loop::harness::{run_episode, EpisodeOptions};
use rl_loop::metrics::MetricsSummary;
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::calibrated();
    let mut env = SliceEnv::new(cfg.clone())?;
    let controllers: Vec<Box<dyn Controller>> = vec![
        Box::new(StaticController::new(2945.72, &cfg)?),
        Box::new(StaticController::new(1500.0, &cfg)?),
        Box::new(ThresholdController::new(0.8, 0.3, 500.0, &cfg)?),
        Box::new(ProportionalController::new(1.2, &cfg)?),
    ];

    println!("{:<13} {:>9} {:>7} {:>7} {:>7}", "controller", "alloc_mc", "beta", "sla", "reward");
    for mut ctl in controllers {
        let trace = run_episode(&mut env, ctl.as_mut(), &cfg, EpisodeOptions::new(900, 1))?;
        let m = MetricsSummary::from_samples(trace.samples(), &cfg)?;
        println!(
            "{:<13} {:>9.1} {:>7.3} {:>7.3} {:>7.3}",
            ctl.id(),
            m.mean_allocation_mc,
            m.beta,
            m.sla_fraction,
            m.mean_reward
        );
    }
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
