//! Pointwise block-average inequality behind the strong-type proof:
//! `(avg_B |f|)^(p(x)/p_-) <= K (avg_B |f|^(p/p_-) + 1)` for `||f||_p <= 1/2`.

use crate::error::{domain, Result};
use crate::space::{condition_k, ConditionKMode, Exponent, FilteredSpace, RandomVariable};
use crate::varlp::norm_values;

use super::{config_exponent, generate_trial, ConstantReport, TrialConfig, Witness, WitnessKind};

fn block_terms(space: &FilteredSpace, f: &[f64], p: &Exponent, level: usize, block: usize, leaf: usize) -> (f64, f64) {
    let pm = p.p_minus();
    let leaves = space.block(level, block);
    let pb = space.block_prob(level, block);
    let avg = leaves.iter().map(|&l| space.prob(l) * f[l].abs()).sum::<f64>() / pb;
    let q = p.values()[leaf] / pm;
    let avg_pow = leaves.iter().map(|&l| space.prob(l) * f[l].abs().powf(q)).sum::<f64>() / pb;
    (avg.powf(q), avg_pow)
}

/// LHS / RHS at one `(block, leaf)` for an already rescaled `f`.
pub(crate) fn pointwise_ratio(
    space: &FilteredSpace,
    f: &[f64],
    p: &Exponent,
    level: usize,
    block: usize,
    leaf: usize,
) -> Result<f64> {
    let k = condition_k(space, p, ConditionKMode::ExactPairwise)?.k;
    let (lhs, avg_pow) = block_terms(space, f, p, level, block, leaf);
    Ok(lhs / (k * (avg_pow + 1.0)))
}

/// Checks every filtration block and every leaf in it; `f` is first scaled
/// down to norm `1/2` if its norm is larger.
pub fn lemma34_check(f: &RandomVariable, p: &Exponent, space: &FilteredSpace) -> Result<ConstantReport> {
    f.check_len(space)?;
    p.check_len(space)?;
    p.require_finite("the block-average check")?;
    if p.p_minus() < 1.0 {
        return domain(format!("the block-average inequality needs p_- >= 1, got {}", p.p_minus()));
    }
    let norm = norm_values(space, f.values(), p)?;
    let scale = if norm > 0.5 { 0.5 / norm } else { 1.0 };
    let g: Vec<f64> = f.values().iter().map(|v| v * scale).collect();
    let k = condition_k(space, p, ConditionKMode::ExactPairwise)?.k;

    let mut report = ConstantReport::new(
        "block-average ratio (avg_B|f|)^(p(x)/p_-) / (K (avg_B |f|^(p/p_-) + 1))",
        "1",
    );
    let mut best: Option<(usize, f64, usize, usize, usize)> = None;
    for level in 0..space.num_levels() {
        for block in 0..space.num_blocks(level) {
            for &leaf in space.block(level, block) {
                let (lhs, avg_pow) = block_terms(space, &g, p, level, block, leaf);
                let r = lhs / (k * (avg_pow + 1.0));
                if r > 1.0 + 1e-9 {
                    report.violations += 1;
                }
                let idx = report.ratios.len();
                report.ratios.push(r);
                if best.map_or(true, |(_, b, ..)| r > b) {
                    best = Some((idx, r, level, block, leaf));
                }
            }
        }
    }
    if let Some((index, ratio, level, block, leaf)) = best {
        report.witness = Some(Witness {
            index,
            ratio,
            instance: WitnessKind::BlockAverage {
                space: space.clone(),
                exponent: p.values().to_vec(),
                function: g,
                level,
                block,
                leaf,
            },
        });
    }
    report.param("k", k);
    report.param("input_norm", norm);
    report.param("scale", scale);
    report.finalize();
    report.param("slack", 1.0 - report.max);
    Ok(report)
}

/// [`lemma34_check`] on the terminal values of every trial.
pub fn block_average_sweep(config: &TrialConfig) -> Result<ConstantReport> {
    config.validate()?;
    let space = config.space.build()?;
    let p = config_exponent(&space, config)?;
    let mut report = ConstantReport::new(
        "block-average ratio (avg_B|f|)^(p(x)/p_-) / (K (avg_B |f|^(p/p_-) + 1))",
        "1",
    );
    for i in 0..config.trials {
        let f = generate_trial(config, &space, i)?;
        let r = lemma34_check(f.terminal(), &p, &space)?;
        if let Some(k) = r.params.get("k") {
            report.param("k", *k);
        }
        report.absorb(r);
    }
    report.notes.push(format!("configuration {}", config.label()));
    report.param("trials", config.trials as f64);
    report.param("seed", config.seed as f64);
    report.finalize();
    report.param("slack", 1.0 - report.max);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExponentLaw, ExponentSpec, SpaceSpec};
    use crate::space::build_dyadic_space;

    #[test]
    fn zero_function() {
        let s = build_dyadic_space(2).unwrap();
        let p = Exponent::new(vec![1.0, 2.0, 1.5, 3.0]).unwrap();
        let r = lemma34_check(&RandomVariable::zeros(4), &p, &s).unwrap();
        assert_eq!(r.max, 0.0);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn constant_exponent_reduces_to_average() {
        let s = build_dyadic_space(3).unwrap();
        let p = Exponent::constant(8, 2.0).unwrap();
        let f = RandomVariable::new(vec![3.0, -1.0, 0.0, 2.0, 5.0, -4.0, 1.0, 1.0]);
        let r = lemma34_check(&f, &p, &s).unwrap();
        assert_eq!(r.params["k"], 1.0);
        // with q = 1 every ratio is avg / (avg + 1) < 1
        assert!(r.max < 1.0 && r.violations == 0);
        let w = r.witness.as_ref().unwrap();
        assert!((w.replay().unwrap() - w.ratio).abs() <= 1e-12);
    }

    #[test]
    fn rescaling_is_recorded() {
        let s = build_dyadic_space(1).unwrap();
        let p = Exponent::constant(2, 2.0).unwrap();
        let r = lemma34_check(&RandomVariable::new(vec![3.0, 4.0]), &p, &s).unwrap();
        let norm = (12.5f64).sqrt();
        assert!((r.params["input_norm"] - norm).abs() < 1e-14);
        assert!((r.params["scale"] - 0.5 / norm).abs() < 1e-14);
    }

    #[test]
    fn random_depth_three_holds() {
        let config = TrialConfig::new(
            SpaceSpec::Dyadic { depth: 3 },
            ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.0, p_max: 2.0 },
        )
        .with_trials(100)
        .with_seed(11);
        let r = block_average_sweep(&config).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.params["slack"] > 0.0);
    }
}
