// Energy efficiency of an IRS link and a relay link over the average transmit power.

use fcomposite::config::{linspace, ExperimentConfig};
use fcomposite::energy::{energy_efficiency, irs_power, relay_power, Node};

pub fn run_example() -> fcomposite::Result<()> {
    let base = ExperimentConfig { samples: 100_000, n: 16, ..Default::default() };
    let node = base.node();
    println!("relay power {:.4} W, IRS power {:.4} W", relay_power(&node, &base.circuit()), irs_power(&node));
    for p in linspace(0.01, 1.0, 4) {
        let cfg = base.with_param("avg_power", p)?;
        let sc = cfg.scenario()?;
        let relay = energy_efficiency(&sc, Node::Relay, &cfg.mc())?;
        let irs = energy_efficiency(&sc, Node::Irs, &cfg.mc())?;
        println!("P = {p:.2} W: relay {:.4e} bit/J, IRS {:.4e} bit/J", relay.mean, irs.mean);
    }
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
