//! Pairing of an H^s_p martingale with a Lipschitz functional.

use varhardy::bmo::{duality_pairing_ratio, lipschitz_norm, SupMode};
use varhardy::martingale::Martingale;
use varhardy::space::{build_dyadic_space, Exponent, RandomVariable};

fn main() -> varhardy::Result<()> {
    let space = build_dyadic_space(3)?;
    let p = Exponent::new(vec![0.6, 0.8, 0.7, 0.9, 0.75, 0.65, 0.85, 0.95])?;
    let f = Martingale::from_terminal(&space, &RandomVariable::new(vec![1.0, -1.0, 2.0, 0.0, -0.5, 0.5, 0.0, -2.0]))?;
    let phi = RandomVariable::new(vec![0.3, -0.2, 0.9, 0.1, -0.4, 0.4, 0.0, -1.1]);
    let alpha: Vec<f64> = p.values().iter().map(|q| 1.0 / q - 1.0).collect();
    let mode = SupMode::Exhaustive { cap: 1_000_000 };

    let phi_m = Martingale::from_terminal(&space, &phi)?;
    let centered = phi_m.sub(&Martingale::from_terminal(&space, &RandomVariable::constant(8, phi_m.level(0).values()[0]))?);
    println!("||phi||_Lambda_2(alpha) = {:.6}", lipschitz_norm(&centered, 2.0, &alpha, mode)?.value);
    println!("pairing ratio = {:.6}", duality_pairing_ratio(&f, &phi, &p, mode)?);
    Ok(())
}
