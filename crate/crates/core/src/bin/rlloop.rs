use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use rl_loop::controllers::{Controller, ControllerSpec, RlController};
use rl_loop::env::{calibrate, SliceEnv};
use rl_loop::harness::{
    self, analyze, default_grid, episode_seeds, run_episode, sweep_allocation, EpisodeOptions, ExperimentConfig,
    Reference, RunTrace, TraceMeta, TrainOptions,
};
use rl_loop::metrics::MetricsSummary;
use rl_loop::ppo::{load_checkpoint, PpoAgent};

#[derive(Parser)]
#[command(name = "rlloop", version, about = "PPO CPU-allocation loop for a simulated network slice")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// key=value experiment config; the calibrated slice when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    episodes: usize,
    #[arg(long, default_value_t = 900)]
    steps: usize,
    /// Output directory
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Sleep one control period per step
    #[arg(long)]
    realtime: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Train a PPO policy online
    Train {
        #[command(flatten)]
        common: Common,
        /// Checkpoint to write (default <out>/checkpoint.txt)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Experimental: replay a logged trace before online training
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Run a controller without learning
    Eval {
        #[command(flatten)]
        common: Common,
        /// ppo|static|threshold|proportional (overrides the config)
        #[arg(long)]
        controller: Option<String>,
        /// Policy checkpoint, required for ppo
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Fixed-allocation sweep over the CPU grid
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of seeds, starting at --seed
        #[arg(long, default_value_t = 10)]
        seeds: u64,
    },
    /// Fit the slice so a reference allocation sees a target QoS degradation
    Calibrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = ControllerSpec::REFERENCE_ALLOCATION_MC)]
        reference_mc: f64,
        #[arg(long, default_value_t = 0.10)]
        target_beta: f64,
    },
    /// Summarize a trace CSV
    Analyze {
        trace: PathBuf,
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        reference_mc: Option<f64>,
        #[arg(long, default_value_t = 0.10)]
        reference_beta: f64,
    },
}

fn load_config(common: &Common) -> anyhow::Result<ExperimentConfig> {
    match &common.config {
        Some(path) => ExperimentConfig::from_file(path).with_context(|| format!("reading {}", path.display())),
        None => Ok(ExperimentConfig::default()),
    }
}

fn write(dir: &Path, name: &str, body: &str) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    std::fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Train {
            common,
            checkpoint,
            replay,
        } => {
            let exp = load_config(&common)?;
            let cfg = &exp.slice;
            let mut env = SliceEnv::new(cfg.clone())?;
            let opts = TrainOptions {
                episodes: common.episodes,
                steps: common.steps,
                seed: common.seed,
                hp: exp.hp,
                checkpoint: Some(checkpoint.unwrap_or_else(|| common.out.join("checkpoint.txt"))),
                realtime: common.realtime,
            };
            std::fs::create_dir_all(&common.out)?;
            if let Some(dir) = opts.checkpoint.as_deref().and_then(Path::parent) {
                std::fs::create_dir_all(dir)?;
            }
            let mut agent = PpoAgent::new(exp.hp, common.seed)?;
            if let Some(path) = replay {
                let updates = harness::replay_pretrain(&mut agent, &RunTrace::load(&path)?, cfg)?;
                eprintln!("replayed {} ({updates} updates)", path.display());
            }
            let out = harness::train_agent(&mut agent, &mut env, cfg, &opts)?;
            write(&common.out, "trace.csv", &out.trace.to_csv())?;
            write(&common.out, "reward_curve.csv", &out.curve.to_csv())?;
            let summary = MetricsSummary::from_samples(out.trace.samples(), cfg)?;
            write(&common.out, "summary.txt", &summary.to_string())?;
            print!("{summary}");
            println!("updates={}", out.updates);
            if let Some(cause) = out.halted {
                bail!("training halted: {cause}");
            }
        }
        Command::Eval {
            common,
            controller,
            checkpoint,
        } => {
            let exp = load_config(&common)?;
            let cfg = &exp.slice;
            let spec = match controller {
                Some(id) if id != exp.controller.id() => ControllerSpec::from_id(&id)?,
                _ => exp.controller.clone(),
            };
            if common.episodes == 0 {
                bail!("--episodes must be at least 1");
            }
            let mut env = SliceEnv::new(cfg.clone())?;
            let mut ctl: Box<dyn Controller> = match spec {
                ControllerSpec::Ppo { deterministic } => {
                    let path = checkpoint.context("--checkpoint is required for the ppo controller")?;
                    let ckpt = load_checkpoint(&path).with_context(|| format!("loading {}", path.display()))?;
                    Box::new(RlController::new(ckpt.params, deterministic, common.seed)?)
                }
                ref baseline => baseline.build_baseline(cfg)?,
            };
            let mut trace = RunTrace::new(TraceMeta {
                seed: common.seed,
                config_hash: cfg.hash(),
                controller: ctl.id().to_string(),
                episodes: common.episodes,
                incomplete: None,
            });
            for env_seed in episode_seeds(common.seed, common.episodes) {
                let mut opts = EpisodeOptions::new(common.steps, env_seed);
                opts.realtime = common.realtime;
                let ep = run_episode(&mut env, ctl.as_mut(), cfg, opts)?;
                trace.extend_renumbered(&ep);
                if ep.meta.incomplete.is_some() {
                    trace.meta.incomplete = ep.meta.incomplete;
                    break;
                }
            }
            write(&common.out, "trace.csv", &trace.to_csv())?;
            let summary = MetricsSummary::from_samples(trace.samples(), cfg)?;
            write(&common.out, "summary.txt", &summary.to_string())?;
            print!("{summary}");
            if let Some(cause) = &trace.meta.incomplete {
                bail!("run incomplete: {cause}");
            }
        }
        Command::Sweep { common, seeds } => {
            let exp = load_config(&common)?;
            let cfg = &exp.slice;
            let seed_list: Vec<u64> = (0..seeds).map(|i| common.seed + i).collect();
            let result = sweep_allocation(cfg, &default_grid(cfg), common.steps, &seed_list)?;
            write(&common.out, "sweep.csv", &result.to_csv())?;
            println!("allocation_mc allocation_norm mean_reward beta sla_fraction");
            for r in &result.rows {
                println!(
                    "{:>13.1} {:>15.4} {:>11.4} {:>6.4} {:>12.4}",
                    r.allocation_mc, r.allocation_norm, r.mean_reward, r.beta, r.sla_fraction
                );
            }
        }
        Command::Calibrate {
            common,
            reference_mc,
            target_beta,
        } => {
            let exp = load_config(&common)?;
            let cal = calibrate(&exp.slice, reference_mc, target_beta)?;
            let body = format!(
                "# calibrated: beta({reference_mc} mc) = {:.6}, target {target_beta}\n{}",
                cal.achieved_beta,
                cal.config.to_kv_string()
            );
            let path = write(&common.out, "calibrated.conf", &body)?;
            println!("achieved_beta={:.6}", cal.achieved_beta);
            println!("traffic_std={}", cal.config.traffic_std);
            println!("session_len_s={}", cal.config.session_len_s);
            println!("degradation_exponent={}", cal.config.degradation_exponent);
            println!("grid_points={}", cal.grid_points);
            eprintln!("wrote {}", path.display());
        }
        Command::Analyze {
            trace,
            common,
            reference_mc,
            reference_beta,
        } => {
            let exp = load_config(&common)?;
            let reference = reference_mc.map(|allocation_mc| Reference {
                allocation_mc,
                beta: reference_beta,
            });
            let analysis =
                analyze(&trace, &exp.slice, reference).with_context(|| format!("analyzing {}", trace.display()))?;
            print!("{analysis}");
            if common.config.is_some() || common.out != Path::new("out") {
                write(&common.out, "analysis.txt", &analysis.to_string())?;
            }
        }
    }
    Ok(())
}
