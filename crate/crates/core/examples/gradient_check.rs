// Analytic PPO-loss gradients against central finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rl_loop::ppo::{gaussian_log_prob, ppo_loss, PolicyParameters, PpoHyperparams, Sample};
use rl_loop::Observation;

pub fn run() -> rl_loop::Result<()> {
    let hp = PpoHyperparams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = PolicyParameters::with_hidden(&[4], &mut rng);
    let batch: Vec<Sample> = (0..8)
        .map(|_| {
            let state = Observation::new(rng.random(), rng.random());
            let out = params.forward(&state).expect("finite params");
            let raw = out.mean + rng.random_range(-0.3..0.3);
            Sample {
                state,
                raw_action: raw,
                old_log_prob: gaussian_log_prob(raw, out.mean, out.log_std) + rng.random_range(-0.2..0.2),
                advantage: rng.random_range(-1.0..1.0),
                ret: rng.random(),
            }
        })
        .collect();

    let (loss, grad) = ppo_loss(&params, &batch, &hp)?;
    println!(
        "loss {:.5} (policy {:.5}, value {:.5}), clipped {:.0}%",
        loss.total,
        loss.policy,
        loss.value,
        100.0 * loss.clip_fraction
    );

    let flat = params.to_flat();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for i in 0..flat.len() {
        let mut p = flat.clone();
        p[i] += h;
        params.set_flat(&p);
        let up = ppo_loss(&params, &batch, &hp)?.0.total;
        p[i] -= 2.0 * h;
        params.set_flat(&p);
        let down = ppo_loss(&params, &batch, &hp)?.0.total;
        let fd = (up - down) / (2.0 * h);
        worst = worst.max((fd - grad[i]).abs() / fd.abs().max(grad[i].abs()).max(1e-6));
    }
    println!("{} parameters, worst relative error {worst:.2e}", flat.len());
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
