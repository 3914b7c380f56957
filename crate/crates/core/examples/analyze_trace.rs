// Write a trace to CSV, read it back and summarize it against a reference.

use rl_loop::controllers::ProportionalController;
use rl_loop::env::SliceEnv;
use rl_loop::harness::{analyze_trace, run_episode, EpisodeOptions, Reference, RunTrace};
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::calibrated();
    let mut env = SliceEnv::new(cfg.clone())?;
    let mut ctl = ProportionalController::new(1.2, &cfg)?;
    let trace = run_episode(&mut env, &mut ctl, &cfg, EpisodeOptions::new(900, 5))?;

    let csv = trace.to_csv();
    for line in csv.lines().take(8) {
        println!("{line}");
    }
    println!("...");

    let parsed = RunTrace::parse_csv(&csv)?;
    let reference = Reference {
        allocation_mc: 2945.72,
        beta: 0.10,
    };
    print!("{}", analyze_trace(&parsed, &cfg, Some(reference))?);

    match RunTrace::parse_csv(&csv.replacen(",20.000000,", ",fast,", 1)) {
        Err(e) => println!("tampered copy: {e}"),
        Ok(_) => println!("tampered copy parsed"),
    }
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
