//! Weak-type maximal inequality over random martingales.

use varhardy::experiments::{weak_type_sweep, ExponentLaw, ExponentSpec, SpaceSpec, TrialConfig};

fn main() -> varhardy::Result<()> {
    for law in [ExponentLaw::Constant, ExponentLaw::TwoBlock, ExponentLaw::IidUniform] {
        let c = TrialConfig::new(SpaceSpec::Dyadic { depth: 4 }, ExponentSpec { law, p_min: 1.1, p_max: 3.0 }).with_trials(100);
        let r = weak_type_sweep(&c)?;
        let q = |x: f64| r.quantiles.iter().find(|q| q.q == x).map_or(f64::NAN, |q| q.value);
        println!("{law:?}: max {:.4}, median {:.4}, p99 {:.4}, violations {}", r.max, q(0.5), q(0.99), r.violations);
    }
    Ok(())
}
