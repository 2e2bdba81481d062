//! BMO_p against BMO_1, and the exponential John-Nirenberg curve.

use varhardy::bmo::{bmo_norm, SupMode};
use varhardy::experiments::{exp_jn_curve, generate_martingale, ExpJnOptions, ExponentLaw, ExponentSpec, SpaceSpec, TrialConfig};
use varhardy::space::Exponent;

fn main() -> varhardy::Result<()> {
    let c = TrialConfig::new(SpaceSpec::Dyadic { depth: 3 }, ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 })
        .with_seed(5);
    let f = generate_martingale(&c)?;
    let mode = SupMode::Exhaustive { cap: 1_000_000 };
    let n = f.space().num_leaves();
    let b1 = bmo_norm(&f, &Exponent::constant(n, 1.0)?, mode)?;
    let p = Exponent::new(vec![1.1, 3.0, 2.0, 1.5, 2.5, 1.2, 2.8, 1.9])?;
    let bp = bmo_norm(&f, &p, mode)?;
    println!("BMO_1 = {:.6}, BMO_p = {:.6}, ratio {:.4} over {} stopping times", b1.value, bp.value, bp.value / b1.value, bp.candidates);

    let r = exp_jn_curve(&f, &p, None, ExpJnOptions::default())?;
    println!("c_hat = {:.4}, explicit c2 = {:.4}, fitted c2 = {:.4}", r.params["c_hat"], r.params["c2_explicit"], r.params["c2_fit"]);
    let bound: Vec<_> = r.points.iter().filter(|pt| pt.series == "bound").collect();
    for (pt, b) in r.points.iter().filter(|pt| pt.series == "envelope").zip(bound).step_by(8) {
        println!("  t = {:.4}  envelope {:.4}  bound {:.4}", pt.x, pt.y, b.y);
    }
    Ok(())
}
