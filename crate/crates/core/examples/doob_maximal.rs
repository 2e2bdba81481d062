//! Doob's maximal inequality: empirical constant against p/(p-1).

use varhardy::experiments::{doob_strong_sweep, ExponentSpec, SpaceSpec, TrialConfig};

fn main() -> varhardy::Result<()> {
    for p in [1.5, 2.0, 4.0] {
        let c = TrialConfig::new(SpaceSpec::Dyadic { depth: 5 }, ExponentSpec::constant(p)).with_trials(200);
        let r = doob_strong_sweep(&c)?;
        println!("p = {p}: max ratio {:.4}, bound {:.4}, violations {}", r.max, p / (p - 1.0), r.violations);
    }
    Ok(())
}
