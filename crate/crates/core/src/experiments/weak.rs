//! Weak-type maximal inequality with the constant read off the proof chain.

use crate::error::{domain, validation, Result};
use crate::io::MartingaleFile;
use crate::martingale::{maximal, Martingale};
use crate::space::Exponent;

use super::{config_exponent, generate_trial, ConstantReport, TrialConfig, Witness, WitnessKind};

const SLACK: f64 = 1e-9;

/// Distinct values of `Mf`, the midpoints between them and half the
/// smallest positive one. Values within a relative `1e-12` count as one.
pub fn default_lambda_grid(f: &Martingale) -> Vec<f64> {
    let mut v: Vec<f64> = maximal(f, None).values().iter().copied().filter(|x| *x > 0.0).collect();
    v.sort_by(f64::total_cmp);
    v.dedup_by(|b, a| *b - *a <= 1e-12 * *b);
    let mut grid = Vec::with_capacity(2 * v.len());
    if let Some(&first) = v.first() {
        grid.push(first / 2.0);
    }
    for (i, &x) in v.iter().enumerate() {
        grid.push(x);
        if let Some(&next) = v.get(i + 1) {
            grid.push((x + next) / 2.0);
        }
    }
    grid
}

/// Returns `(ratio, bound, P(Mf > lambda))`; the ratio is `NaN` when the
/// integral vanishes.
pub(crate) fn weak_ratio(f: &Martingale, p: &Exponent, lambda: f64) -> (f64, f64, f64) {
    let space = f.space();
    let mf = maximal(f, None);
    let set: Vec<usize> = (0..space.num_leaves()).filter(|&l| mf.values()[l] > lambda).collect();
    let prob: f64 = set.iter().map(|&l| space.prob(l)).sum();
    let integral: f64 = f
        .terminal()
        .values()
        .iter()
        .zip(p.values())
        .zip(space.leaf_probs())
        .map(|((v, e), w)| w * (v.abs() / lambda).powf(*e))
        .sum();
    let bound = if set.is_empty() { 1.0 } else { p.p_plus_on(&set) / p.p_minus_on(&set) };
    let ratio = if integral > 0.0 { prob / integral } else { f64::NAN };
    (ratio, bound, prob)
}

/// Per `lambda`: `P(Mf > lambda) / E (|f_N| / lambda)^p`, checked against the
/// proof-chain constant `p_+(A) / p_-(A)` with `A = {Mf > lambda}`.
pub fn weak_type_check(f: &Martingale, p: &Exponent, lambda_grid: Option<&[f64]>) -> Result<ConstantReport> {
    let space = f.space();
    p.check_len(space)?;
    p.require_finite("the weak-type check")?;
    if p.p_minus() < 1.0 {
        return domain(format!("the weak-type proof chain needs p_- >= 1, got {}", p.p_minus()));
    }
    let grid = match lambda_grid {
        Some(g) => g.to_vec(),
        None => default_lambda_grid(f),
    };
    if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
        return validation(format!("lambda must be finite and positive, got {l}"));
    }
    let mut report = ConstantReport::new("weak-type ratio P(Mf > lambda) / E(|f|/lambda)^p", "proof-chain constant p_+(A)/p_-(A)");
    let mut best: Option<(usize, f64, f64)> = None;
    for &lambda in &grid {
        let (ratio, bound, prob) = weak_ratio(f, p, lambda);
        if ratio.is_nan() {
            report.skipped += 1;
            continue;
        }
        if prob > 0.0 && ratio > bound + SLACK {
            report.violations += 1;
        }
        let idx = report.ratios.len();
        report.ratios.push(ratio);
        report.bounds.push(bound);
        report.point("ratio", lambda, ratio);
        report.point("bound", lambda, bound);
        if best.map_or(true, |(_, r, _)| ratio > r) {
            best = Some((idx, ratio, lambda));
        }
    }
    if let Some((index, ratio, lambda)) = best {
        report.witness = Some(Witness {
            index,
            ratio,
            instance: WitnessKind::WeakType {
                space: space.clone(),
                exponent: p.values().to_vec(),
                martingale: MartingaleFile::from(f),
                lambda,
            },
        });
    }
    report.param("grid_size", grid.len() as f64);
    report.finalize();
    Ok(report)
}

/// [`weak_type_check`] on every trial of a configuration, default grids.
pub fn weak_type_sweep(config: &TrialConfig) -> Result<ConstantReport> {
    config.validate()?;
    let space = config.space.build()?;
    let p = config_exponent(&space, config)?;
    let mut report = ConstantReport::new("weak-type ratio P(Mf > lambda) / E(|f|/lambda)^p", "proof-chain constant p_+(A)/p_-(A)");
    for i in 0..config.trials {
        let f = generate_trial(config, &space, i)?;
        let mut r = weak_type_check(&f, &p, None)?;
        r.points.clear();
        report.absorb(r);
    }
    report.notes.push(format!("configuration {}", config.label()));
    report.param("trials", config.trials as f64);
    report.param("seed", config.seed as f64);
    report.finalize();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExponentLaw, ExponentSpec, SpaceSpec};
    use crate::space::{build_dyadic_space, RandomVariable};
    use proptest::prelude::*;

    #[test]
    fn depth_one_example() {
        let s = build_dyadic_space(1).unwrap();
        let f = Martingale::from_terminal(&s, &RandomVariable::new(vec![1.0, -1.0])).unwrap();
        let p = Exponent::constant(2, 2.0).unwrap();
        let r = weak_type_check(&f, &p, Some(&[0.5])).unwrap();
        assert!((r.ratios[0] - 0.25).abs() < 1e-15);
        assert_eq!(r.violations, 0);
    }

    #[test]
    fn lambda_above_max_gives_zero() {
        let s = build_dyadic_space(2).unwrap();
        let f = Martingale::from_terminal(&s, &RandomVariable::new(vec![1.0, -1.0, 2.0, -2.0])).unwrap();
        let p = Exponent::new(vec![1.5, 2.0, 1.2, 3.0]).unwrap();
        let r = weak_type_check(&f, &p, Some(&[5.0])).unwrap();
        assert_eq!(r.ratios, vec![0.0]);
    }

    #[test]
    fn default_grid_contents() {
        let s = build_dyadic_space(1).unwrap();
        let f = Martingale::from_terminal(&s, &RandomVariable::new(vec![1.0, -3.0])).unwrap();
        // Mf = (1, 3) since f_0 = -1
        assert_eq!(default_lambda_grid(&f), vec![0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn rejects_small_exponent_and_bad_lambda() {
        let s = build_dyadic_space(1).unwrap();
        let f = Martingale::from_terminal(&s, &RandomVariable::new(vec![1.0, -1.0])).unwrap();
        assert!(weak_type_check(&f, &Exponent::new(vec![0.5, 2.0]).unwrap(), None).is_err());
        assert!(weak_type_check(&f, &Exponent::constant(2, 2.0).unwrap(), Some(&[0.0])).is_err());
    }

    #[test]
    fn constant_exponent_is_chebyshev() {
        let config = TrialConfig::new(SpaceSpec::Dyadic { depth: 4 }, ExponentSpec::constant(1.7)).with_trials(30);
        let r = weak_type_sweep(&config).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.max <= 1.0 + 1e-9);
    }

    #[test]
    fn witness_replays() {
        let config = TrialConfig::new(
            SpaceSpec::Regular { arity: 3, depth: 2 },
            ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 },
        )
        .with_trials(10);
        let r = weak_type_sweep(&config).unwrap();
        let w = r.witness.as_ref().unwrap();
        assert!((w.replay().unwrap() - w.ratio).abs() <= 1e-9);
        assert_eq!(r.ratios[w.index], r.max);
    }

    proptest! {
        #[test]
        fn joint_scaling_invariance(seed in any::<u64>(), k in -20i32..20, c in 0.01f64..100.0) {
            let config = TrialConfig::new(
                SpaceSpec::Dyadic { depth: 3 },
                ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 },
            ).with_seed(seed);
            let s = config.space.build().unwrap();
            let p = config_exponent(&s, &config).unwrap();
            let f = generate_trial(&config, &s, 0).unwrap();
            let grid = default_lambda_grid(&f);
            // power-of-two factors scale exactly, so the whole grid is comparable
            let two = 2f64.powi(k);
            let a = weak_type_check(&f, &p, Some(&grid)).unwrap();
            let scaled: Vec<f64> = grid.iter().map(|l| l * two).collect();
            let b = weak_type_check(&f.scaled(two), &p, Some(&scaled)).unwrap();
            prop_assert_eq!(a.violations, 0);
            for (x, y) in a.ratios.iter().zip(&b.ratios) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{} vs {}", x, y);
            }
            // general factors: keep lambda away from the jumps at values of Mf
            let mf = maximal(&f, None);
            let safe: Vec<f64> = grid
                .iter()
                .copied()
                .filter(|l| mf.values().iter().all(|m| (m - l).abs() > 1e-9 * l))
                .collect();
            let a = weak_type_check(&f, &p, Some(&safe)).unwrap();
            let scaled: Vec<f64> = safe.iter().map(|l| l * c).collect();
            let b = weak_type_check(&f.scaled(c), &p, Some(&scaled)).unwrap();
            for (x, y) in a.ratios.iter().zip(&b.ratios) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{} vs {}", x, y);
            }
        }
    }
}
