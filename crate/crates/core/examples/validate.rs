// Runs every oracle suite at the default configuration.

use fcomposite::config::ExperimentConfig;
use fcomposite::validate::run_all;

pub fn run_example() -> fcomposite::Result<()> {
    let cfg = ExperimentConfig { samples: 200_000, ..Default::default() };
    for r in run_all(&cfg)? {
        println!("{} {:<30} {:.3e} <= {:.3e}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.measured, r.tolerance);
    }
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
