//! Failure of conditional Jensen for variable exponents:
//! `|E_n f|^p(w) / E_n(|f|^p)(w)` is unbounded.

use crate::error::Result;
use crate::space::{build_dyadic_space, Exponent, FilteredSpace};

use super::{config_exponent, generate_trial, ConstantReport, TrialConfig, Witness, WitnessKind};

/// Scales of the deterministic family `f_c = (c, 0)` with `p = (1, 2)`.
pub const SCALING_FAMILY: [f64; 3] = [8.0, 100.0, 1e4];

pub(crate) fn pointwise_ratio(space: &FilteredSpace, f: &[f64], p: &Exponent, level: usize, leaf: usize) -> Result<f64> {
    p.check_len(space)?;
    let b = space.block_of(level, leaf);
    let leaves = space.block(level, b);
    let pb = space.block_prob(level, b);
    let e = leaves.iter().map(|&l| space.prob(l) * f[l]).sum::<f64>() / pb;
    let q = p.values()[leaf];
    let den = leaves.iter().map(|&l| space.prob(l) * f[l].abs().powf(p.values()[l])).sum::<f64>() / pb;
    Ok(if den > 0.0 { e.abs().powf(q) / den } else { f64::NAN })
}

/// `(max ratio, level, leaf)` over all levels and leaves; `None` if every
/// ratio is `0/0`.
pub fn jensen_ratio_max(space: &FilteredSpace, f: &[f64], p: &Exponent) -> Result<Option<(f64, usize, usize)>> {
    let mut best: Option<(f64, usize, usize)> = None;
    for level in 0..space.num_levels() {
        for leaf in 0..space.num_leaves() {
            let r = pointwise_ratio(space, f, p, level, leaf)?;
            if !r.is_nan() && best.map_or(true, |(b, ..)| r > b) {
                best = Some((r, level, leaf));
            }
        }
    }
    Ok(best)
}

/// Per-trial maxima over the configuration's random functions, followed by
/// the scaling family `f_c = (c, 0)` on two uniform leaves with `p = (1, 2)`,
/// whose ratio is `c / 2`.
pub fn violation_33_search(config: &TrialConfig) -> Result<ConstantReport> {
    config.validate()?;
    let space = config.space.build()?;
    let p = config_exponent(&space, config)?;
    let mut report = ConstantReport::new("|E_n f|^p / E_n(|f|^p)", "none (unbounded)");
    let mut best: Option<(usize, f64, WitnessKind)> = None;
    let mut consider = |report: &mut ConstantReport, r: f64, kind: WitnessKind| {
        let idx = report.ratios.len();
        report.ratios.push(r);
        if best.as_ref().map_or(true, |(_, b, _)| r > *b) {
            best = Some((idx, r, kind));
        }
    };
    let mut max_random = 0.0f64;
    for i in 0..config.trials {
        let f = generate_trial(config, &space, i)?;
        let vals = f.terminal().values().to_vec();
        match jensen_ratio_max(&space, &vals, &p)? {
            None => report.skipped += 1,
            Some((r, level, leaf)) => {
                max_random = max_random.max(r);
                report.point("random", i as f64, r);
                let kind = WitnessKind::Jensen {
                    space: space.clone(),
                    exponent: p.values().to_vec(),
                    function: vals,
                    level,
                    leaf,
                };
                consider(&mut report, r, kind);
            }
        }
    }
    let two = build_dyadic_space(1)?;
    let q = Exponent::new(vec![1.0, 2.0])?;
    for c in SCALING_FAMILY {
        let f = vec![c, 0.0];
        let (r, level, leaf) = jensen_ratio_max(&two, &f, &q)?.expect("nonzero function");
        if (r - c / 2.0).abs() > 1e-12 * (c / 2.0) {
            report.violations += 1;
        }
        report.point("scaling", c, r);
        let kind = WitnessKind::Jensen { space: two.clone(), exponent: q.values().to_vec(), function: f, level, leaf };
        consider(&mut report, r, kind);
    }
    if let Some((index, ratio, instance)) = best {
        report.witness = Some(Witness { index, ratio, instance });
    }
    report.param("max_random", max_random);
    report.param("trials", config.trials as f64);
    report.param("seed", config.seed as f64);
    report.notes.push(format!("configuration {}", config.label()));
    report.notes.push("scaling family f_c = (c, 0), p = (1, 2): ratio c/2 grows without bound".into());
    report.finalize();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExponentSpec, SpaceSpec};

    #[test]
    fn scaling_family_is_exact() {
        let s = build_dyadic_space(1).unwrap();
        let p = Exponent::new(vec![1.0, 2.0]).unwrap();
        let (r, level, leaf) = jensen_ratio_max(&s, &[8.0, 0.0], &p).unwrap().unwrap();
        assert_eq!((r, level, leaf), (4.0, 0, 1));
        for c in SCALING_FAMILY {
            let r = jensen_ratio_max(&s, &[c, 0.0], &p).unwrap().unwrap().0;
            assert!((r - c / 2.0).abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn constant_one_obeys_jensen() {
        let config = TrialConfig::new(SpaceSpec::Dyadic { depth: 4 }, ExponentSpec::constant(1.0)).with_trials(50);
        let mut r = violation_33_search(&config).unwrap();
        assert!(r.params["max_random"] <= 1.0 + 1e-12);
        assert_eq!(r.violations, 0);
        assert_eq!(r.max, 5000.0);
        let w = r.witness.take().unwrap();
        assert!((w.replay().unwrap() - w.ratio).abs() <= 1e-9);
    }

    #[test]
    fn zero_function_skipped() {
        let s = build_dyadic_space(2).unwrap();
        let p = Exponent::new(vec![1.0, 2.0, 1.5, 1.2]).unwrap();
        assert!(jensen_ratio_max(&s, &[0.0; 4], &p).unwrap().is_none());
    }
}
