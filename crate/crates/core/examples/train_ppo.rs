// Online PPO training, then a deterministic evaluation of the learned policy.

use rl_loop::controllers::RlController;
use rl_loop::env::SliceEnv;
use rl_loop::harness::{run_episode, train, EpisodeOptions, TrainOptions};
use rl_loop::metrics::MetricsSummary;
use rl_loop::ppo::{load_checkpoint, save_checkpoint};
use rl_loop::SliceConfig;

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::calibrated();
    let mut env = SliceEnv::new(cfg.clone())?;
    let opts = TrainOptions::new(3, 42);
    let out = train(&mut env, &cfg, &opts)?;

    println!("{} updates, final log_std {:.3}", out.updates, out.params.log_std);
    for t in (99..out.curve.rewards.len()).step_by(300) {
        println!("step {t:>5}  moving avg {:.3}", out.curve.moving_avg[t]);
    }
    match out.curve.first_reaching(0.8) {
        Some(t) => println!("moving average first reached 0.8 at step {t}"),
        None => println!("moving average never reached 0.8"),
    }

    let path = std::env::temp_dir().join("rl_loop_train_example.ckpt");
    save_checkpoint(&path, &out.params, &opts.hp)?;
    let restored = load_checkpoint(&path)?;
    std::fs::remove_file(&path)?;

    let mut policy = RlController::new(restored.params, true, 0)?;
    let trace = run_episode(&mut env, &mut policy, &cfg, EpisodeOptions::new(900, 1234))?;
    let m = MetricsSummary::from_samples(trace.samples(), &cfg)?;
    println!(
        "greedy policy: {:.1} mc ({:.1}% of 2945.72), beta {:.3}",
        m.mean_allocation_mc,
        100.0 * m.mean_allocation_mc / 2945.72,
        m.beta
    );
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
