// Joint bandwidth and power split over three subchannels of unequal gain.

use fcomposite::joint_alloc::{objective, solve_fixed_bandwidth, solve_quiet, JointProblem, SolverConfig};

pub fn run_example() -> fcomposite::Result<()> {
    let problem = JointProblem::new(vec![4.0, 5.0, 6.0], 200e6, 0.03, 5e-14)?;
    let cfg = SolverConfig::default();
    let sol = solve_quiet(&problem, &cfg)?;
    println!("converged: {} after {} iterations", sol.converged, sol.state.iteration);
    for (k, (b, p)) in sol.state.bandwidths.iter().zip(&sol.state.powers).enumerate() {
        println!("  channel {}: {:7.3} MHz  {:7.4} mW", k + 1, b / 1e6, p * 1e3);
    }
    let fixed = solve_fixed_bandwidth(&problem, &cfg)?;
    println!("capacity: adaptive {:.6e} bit/s, equal bandwidth {:.6e} bit/s", sol.capacity, objective(&problem, &fixed));
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
