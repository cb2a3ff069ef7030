// Gauss hypergeometric and Meijer G evaluations next to their closed forms.

use fcomposite::specfun::{gamma_ratio_epsilon, gauss_2f1, ln_gamma, meijer_g_2212};

pub fn run_example() -> fcomposite::Result<()> {
    let (a, b, z) = (16.0, 24.0, 0.8);
    let f = gauss_2f1(a, b, b, -z)?;
    println!("2F1({a},{b};{b};-{z}) = {f:.12e}  (1+z)^-a = {:.12e}", (1.0 + z).powf(-a));

    let g = meijer_g_2212(z, -a, 0.0, b - 1.0, 0.0)?;
    let closed = (ln_gamma(a + b)? + (b - 1.0) * z.ln() - (a + b) * z.ln_1p()).exp();
    println!("G(z | -A,0; B-1,0) = {g:.12e}  closed form = {closed:.12e}");

    println!("gamma ratio for (24, 16): {:.12}", gamma_ratio_epsilon(24.0, 16.0)?);
    Ok(())
}

fn main() -> fcomposite::Result<()> {
    run_example()
}
