//! Conditional Jensen fails for variable exponents.

use varhardy::experiments::{jensen_ratio_max, violation_33_search, ExponentLaw, ExponentSpec, SpaceSpec, TrialConfig, SCALING_FAMILY};
use varhardy::space::{build_dyadic_space, Exponent};

fn main() -> varhardy::Result<()> {
    let space = build_dyadic_space(1)?;
    let p = Exponent::new(vec![1.0, 2.0])?;
    for c in SCALING_FAMILY {
        let (r, _, _) = jensen_ratio_max(&space, &[c, 0.0], &p)?.expect("nonzero f");
        println!("f = ({c}, 0): ratio {r}");
    }
    let cfg = TrialConfig::new(SpaceSpec::Dyadic { depth: 3 }, ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.0, p_max: 3.0 })
        .with_trials(50);
    let r = violation_33_search(&cfg)?;
    println!("search: max {:.3e}, random trials max {:.3}", r.max, r.params["max_random"]);
    Ok(())
}
