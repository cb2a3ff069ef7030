// Water-filling over the composite law against the Rayleigh-designed policy.

use fcomposite::channel::{ChannelParams, FadingParams, SubchannelParams};
use fcomposite::numerics::QuadratureConfig;
use fcomposite::power_alloc::{
    average_power, capacity_gap, ergodic_capacity_p1, policy_closed_form, policy_eval, policy_exact, rayleigh_baseline,
    PowerBudget,
};

pub fn run_example() -> fcomposite::Result<()> {
    let sub = SubchannelParams::new(FadingParams::new(5.0, 1.0, 5.0)?, 8, 300.0, 1.0, 0.5)?;
    let cp = ChannelParams::identical(3, sub)?;
    let pb = PowerBudget::new(0.5, 1.0, 5e-14, 200e6)?;

    let exact = policy_exact(&cp, &pb)?;
    let approx = policy_closed_form(&cp, &pb)?;
    println!("cutoff gain: exact {:.6e}, closed form {:.6e}", exact.threshold, approx.threshold);
    println!("average power spent: exact {:.6e} W, closed form {:.6e} W", average_power(&cp, &exact)?, average_power(&cp, &approx)?);
    for h in [0.5, 1.0, 2.0, 4.0].map(|x| x * exact.threshold) {
        println!("  P({h:.4e}) = {:.4e} W", policy_eval(&exact, h));
    }
    let base = rayleigh_baseline(&cp, &pb)?;
    let gap = capacity_gap(&cp, &pb, &exact, &base.policy, base.scale, &QuadratureConfig::default())?;
    println!("ergodic capacity {:.6e} bit/s, {:.4e} bit/s above the Rayleigh design", ergodic_capacity_p1(&cp, &pb, &exact)?, gap.value);
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
