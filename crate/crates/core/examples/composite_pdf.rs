// Composite gain density for one to four subchannels, located by its mode.

use fcomposite::channel::{normalized_pdf_composite, ChannelParams, FadingParams, SubchannelParams};

pub fn run_example() -> fcomposite::Result<()> {
    let sub = SubchannelParams::new(FadingParams::new(2.0, 2.0, 5.0)?, 8, 300.0, 1.0, 0.5)?;
    for k in 1..=4 {
        let cp = ChannelParams::identical(k, sub.clone())?;
        let t = cp.typical_gain();
        let mut best = (0.0, 0.0);
        for i in 1..=400 {
            let h = 4.0 * t * i as f64 / 400.0;
            let d = normalized_pdf_composite(h, &cp)?;
            if d > best.1 {
                best = (h, d);
            }
        }
        println!("K = {k}: mode near h = {:.4e}, peak density {:.4e}", best.0, best.1);
    }
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
