//! Decompose a martingale into simple atoms and rebuild it.

use varhardy::hardy::{a_quantity, atomic_decompose, hs_norm, prop41_bounds, reconstruct};
use varhardy::martingale::Martingale;
use varhardy::space::{build_dyadic_space, Exponent, RandomVariable};

fn main() -> varhardy::Result<()> {
    let space = build_dyadic_space(2)?;
    let p = Exponent::new(vec![1.0, 1.0, 2.0, 2.0])?;
    let f = Martingale::from_terminal(&space, &RandomVariable::new(vec![3.0, -1.0, 0.5, -2.5]))?;

    let dec = atomic_decompose(&f, &p)?;
    for t in &dec.terms {
        println!("k = {:>3}  mu = {:<10.6} tau = {:?}", t.k, t.mu, t.tau.values());
    }
    let back = reconstruct(&space, &dec)?;
    let err = back.sub(&f).sup_abs();
    println!("reconstruction error {err:.2e}");
    println!("A = {:.6}, ||f||_H^s = {:.6}", a_quantity(&space, &dec, &p)?, hs_norm(&f, &p)?);
    let b = prop41_bounds(&space, &dec, &p)?;
    println!("(sum mu^p+)^(1/p+) = {:.6} <= A: {}", b.mu_lp_plus, b.first_holds);
    Ok(())
}
