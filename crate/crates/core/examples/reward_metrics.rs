// Reward, load estimate, QoS degradation and SLA fraction on small inputs.

use rl_loop::metrics::{load_estimate, qos_degradation, reward, sla_fraction, QosTrace};
use rl_loop::{NormalizedAction, SliceConfig};

pub fn run() -> rl_loop::Result<()> {
    let cfg = SliceConfig::default();

    for users in [0, 5, 10, 20] {
        let d = load_estimate(users, &cfg);
        println!("users={users:>2} load={:.3}", d.value());
        for a in [0.2, 0.35, 0.6] {
            let r = reward(&[NormalizedAction::new(a)], &[d])?;
            println!("    a={a:.2} reward={r:.3}");
        }
    }

    let trace = QosTrace::new(vec![2.0, 3.0, 5.0], vec![0.5, 2.0, 0.9])?;
    println!(
        "beta={:.3} sla_fraction={:.3}",
        qos_degradation(&trace, cfg.qos_threshold_mbps),
        sla_fraction(&trace, cfg.qos_threshold_mbps)
    );
    Ok(())
}

fn main() -> rl_loop::Result<()> {
    run()
}
