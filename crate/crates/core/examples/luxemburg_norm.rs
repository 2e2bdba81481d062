//! Luxemburg norm of a two-point function with a variable exponent.

use varhardy::space::{build_dyadic_space, Exponent, RandomVariable};
use varhardy::varlp::{indicator_norm_profile, luxemburg_norm, modular};

fn main() -> varhardy::Result<()> {
    let space = build_dyadic_space(1)?;
    let p = Exponent::new(vec![1.0, 2.0])?;
    let f = RandomVariable::new(vec![1.0, 2.0]);

    let r = luxemburg_norm(&space, &f, &p)?;
    println!("||f||_p        = {:.15}", r.norm);
    println!("closed form    = {:.15}", (1.0 + 33f64.sqrt()) / 4.0);
    println!("rho(f / norm)  = {:.15}", modular(&space, &f, &p, r.norm)?);

    let chi = indicator_norm_profile(&space, &[0], &p)?;
    println!("chi_{{0}}: P = {}, norm = {}, bounds [{}, {}]", chi.prob, chi.norm, chi.lower, chi.upper);
    Ok(())
}
