//! John-Nirenberg experiments: equivalence of `BMO_p` and `BMO_1`, and the
//! exponential tail of `f - f_{tau-1}`.

use crate::bmo::{shifted_difference, BmoEvaluator, StoppingFamily, SupMode};
use crate::error::{domain, Result};
use crate::io::MartingaleFile;
use crate::martingale::{Martingale, DEFAULT_ENUMERATION_CAP};
use crate::space::{Exponent, FilteredSpace};
use crate::varlp::indicator_norm;

use super::{config_exponent, generate_trial, ConstantReport, TrialConfig, Witness, WitnessKind};

const SCALE: f64 = 10.0;

/// Powers `r` at which `BMO_{rp} / BMO_1` is measured; the `r -> inf` limit
/// is added separately.
pub const CHAIN_POWERS: [f64; 13] = [1.0, 1.25, 1.5, 2.0, 3.0, 4.0, 6.0, 8.0, 12.0, 16.0, 24.0, 32.0, 64.0];

fn exhaustive(space: &FilteredSpace) -> Result<StoppingFamily> {
    StoppingFamily::build(space, SupMode::Exhaustive { cap: DEFAULT_ENUMERATION_CAP })
}

fn require_p_minus_one(p: &Exponent) -> Result<()> {
    p.require_finite("BMO")?;
    if p.p_minus() < 1.0 {
        return domain(format!("the BMO equivalence needs p_- >= 1, got {}", p.p_minus()));
    }
    Ok(())
}

/// `BMO_p / BMO_1` for the given martingales over all stopping times.
///
/// Every ratio is recomputed for `10 f`; a relative change above `1e-9`
/// counts as a violation. The two-sided envelope is stored as `envelope`.
pub fn jn_equivalence_on(space: &FilteredSpace, p: &Exponent, fs: &[Martingale]) -> Result<ConstantReport> {
    p.check_len(space)?;
    require_p_minus_one(p)?;
    let family = exhaustive(space)?;
    let ev_p = BmoEvaluator::new(space, p, family.clone())?;
    let ev_1 = BmoEvaluator::new(space, &Exponent::constant(space.num_leaves(), 1.0)?, family)?;
    let mut report = ConstantReport::new("BMO_p / BMO_1 (and reciprocal)", "two-sided envelope");
    let mut best: Option<(usize, f64, &Martingale)> = None;
    let mut scale_dev = 0.0f64;
    for (i, f) in fs.iter().enumerate() {
        let bp = ev_p.eval(f)?.value;
        let b1 = ev_1.eval(f)?.value;
        if bp == 0.0 || b1 == 0.0 {
            report.skipped += 1;
            continue;
        }
        let r = bp / b1;
        let g = f.scaled(SCALE);
        let rs = ev_p.eval(&g)?.value / ev_1.eval(&g)?.value;
        let dev = (rs - r).abs() / r;
        scale_dev = scale_dev.max(dev);
        if dev > 1e-9 {
            report.violations += 1;
        }
        let idx = report.ratios.len();
        report.ratios.push(r);
        report.point("ratio", i as f64, r);
        report.point("reciprocal", i as f64, 1.0 / r);
        if best.map_or(true, |(_, b, _)| r > b) {
            best = Some((idx, r, f));
        }
    }
    if let Some((index, ratio, f)) = best {
        report.witness = Some(Witness {
            index,
            ratio,
            instance: WitnessKind::Jn {
                space: space.clone(),
                exponent: p.values().to_vec(),
                martingale: MartingaleFile::from(f),
            },
        });
    }
    report.finalize();
    if !report.ratios.is_empty() {
        report.param("envelope", report.max.max(1.0 / report.min));
        report.param("max_reciprocal", 1.0 / report.min);
    }
    report.param("stopping_times", ev_p.family().taus.len() as f64);
    report.param("max_scale_deviation", scale_dev);
    Ok(report)
}

/// [`jn_equivalence_on`] over the trials of `config`.
pub fn jn_equivalence(config: &TrialConfig, p: &Exponent) -> Result<ConstantReport> {
    config.validate()?;
    let space = config.space.build()?;
    let fs = (0..config.trials).map(|i| generate_trial(config, &space, i)).collect::<Result<Vec<_>>>()?;
    let mut report = jn_equivalence_on(&space, p, &fs)?;
    report.notes.push(format!("configuration {}", config.label()));
    report.param("trials", config.trials as f64);
    report.param("seed", config.seed as f64);
    Ok(report)
}

/// Same as [`jn_equivalence`] with the configuration's exponent.
pub fn jn_equivalence_sweep(config: &TrialConfig) -> Result<ConstantReport> {
    let space = config.space.build()?;
    jn_equivalence(config, &config_exponent(&space, config)?)
}

/// Measured chain constant `C = sup_{r >= 1} BMO_{rp}(f) / BMO_1(f)` over
/// [`CHAIN_POWERS`] and the `r -> inf` limit `max |f - f_{tau-1}|`.
/// Returns `(C, BMO_1(f))`.
pub fn chain_constant(f: &Martingale, p: &Exponent, family: &StoppingFamily) -> Result<(f64, f64)> {
    let space = f.space();
    let b1 = BmoEvaluator::new(space, &Exponent::constant(space.num_leaves(), 1.0)?, family.clone())?.eval(f)?.value;
    if b1 == 0.0 {
        return domain("BMO_1 norm is zero");
    }
    let mut c = 0.0f64;
    for r in CHAIN_POWERS {
        let br = BmoEvaluator::new(space, &p.scaled(r)?, family.clone())?.eval(f)?.value;
        c = c.max(br / b1);
    }
    let sup_diff = family
        .taus
        .iter()
        .flat_map(|t| shifted_difference(f, t))
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok((c.max(sup_diff / b1), b1))
}

/// Tuning for [`exp_jn_curve`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpJnOptions {
    /// Number of intervals in the default `t` grid on `[0, 1.1 max|d|]`.
    pub grid_steps: usize,
    /// Enumeration cap for the exhaustive family.
    pub cap: u64,
}

impl Default for ExpJnOptions {
    fn default() -> Self {
        ExpJnOptions { grid_steps: 40, cap: DEFAULT_ENUMERATION_CAP }
    }
}

/// Tail curves `t -> ||chi_{tau<inf, f - f_{tau-1} >= t}||_p / ||chi_{tau<inf}||_p`
/// over all stopping times, against `4 exp(-c2 t / BMO_1)` with
/// `c2 = ln 2 / (2 C)`, `C` from [`chain_constant`].
///
/// `ratios[i]` is the envelope over `tau` at `t_i` divided by the bound.
/// Violations count bound failures and increases along a curve.
pub fn exp_jn_curve(f: &Martingale, p: &Exponent, t_grid: Option<&[f64]>, opts: ExpJnOptions) -> Result<ConstantReport> {
    let space = f.space();
    p.check_len(space)?;
    require_p_minus_one(p)?;
    let family = StoppingFamily::build(space, SupMode::Exhaustive { cap: opts.cap })?;
    let (c_hat, b1) = chain_constant(f, p, &family)?;
    let c2 = std::f64::consts::LN_2 / (2.0 * c_hat);
    let diffs: Vec<Vec<f64>> = family.taus.iter().map(|t| shifted_difference(f, t)).collect();
    let max_d = diffs.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut grid = match t_grid {
        Some(g) => g.to_vec(),
        None => (0..=opts.grid_steps).map(|i| 1.1 * max_d * i as f64 / opts.grid_steps as f64).collect(),
    };
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut report = ConstantReport::new(
        "tail envelope / (4 exp(-c2 t / BMO_1))",
        "1 (explicit constants c1 = 4, c2 = ln 2 / (2 C))",
    );
    let mut envelope = vec![0.0f64; grid.len()];
    let mut monotone_failures = 0usize;
    let mut worst: Option<(f64, usize, f64)> = None;
    for (ti, tau) in family.taus.iter().enumerate() {
        let finite = tau.finite_mask();
        let chi = indicator_norm(space, &finite, p)?;
        if chi == 0.0 {
            continue;
        }
        let mut prev = f64::INFINITY;
        for (gi, &t) in grid.iter().enumerate() {
            let mask: Vec<bool> = diffs[ti].iter().zip(&finite).map(|(d, &m)| m && *d >= t).collect();
            let lhs = indicator_norm(space, &mask, p)? / chi;
            if lhs > prev + 1e-12 {
                monotone_failures += 1;
            }
            prev = lhs;
            envelope[gi] = envelope[gi].max(lhs);
            let bound = 4.0 * (-c2 * t / b1).exp();
            if lhs > bound * (1.0 + 1e-9) {
                report.violations += 1;
            }
            let r = lhs / bound;
            if worst.map_or(true, |(b, ..)| r > b) {
                worst = Some((r, ti, t));
            }
        }
    }
    report.violations += monotone_failures;
    for (gi, &t) in grid.iter().enumerate() {
        let bound = 4.0 * (-c2 * t / b1).exp();
        report.ratios.push(envelope[gi] / bound);
        report.bounds.push(bound);
        report.point("envelope", t, envelope[gi]);
        report.point("bound", t, bound);
    }
    for (gi, w) in envelope.windows(2).enumerate() {
        if w[1] > w[0] + 1e-12 {
            report.notes.push(format!("envelope increases between t[{gi}] and t[{}]", gi + 1));
        }
    }

    // log-linear fit of the envelope over its positive part
    let pts: Vec<(f64, f64)> = grid
        .iter()
        .zip(&envelope)
        .filter(|(_, e)| **e > 0.0)
        .map(|(t, e)| (t / b1, e.ln()))
        .collect();
    let mut c2_fit = f64::NAN;
    if pts.len() >= 2 {
        let n = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        if sxx > 0.0 {
            c2_fit = -sxy / sxx;
        }
    }
    if !(c2_fit > 0.0) {
        report.notes.push("envelope too flat to fit; using the explicit c2".into());
        c2_fit = c2;
    }
    let c1_fit = grid
        .iter()
        .zip(&envelope)
        .map(|(t, e)| e * (c2_fit * t / b1).exp())
        .fold(0.0f64, f64::max);

    if let Some((_, ti, t)) = worst {
        let index = grid.iter().position(|g| *g == t).unwrap_or(0);
        report.witness = Some(Witness {
            index,
            ratio: report.ratios[index],
            instance: WitnessKind::ExpJn {
                space: space.clone(),
                exponent: p.values().to_vec(),
                martingale: MartingaleFile::from(f),
                tau: family.taus[ti].clone(),
                t,
                c2,
                bmo1: b1,
            },
        });
    }
    report.param("bmo1", b1);
    report.param("c_hat", c_hat);
    report.param("c1_explicit", 4.0);
    report.param("c2_explicit", c2);
    report.param("c1_fit", c1_fit);
    report.param("c2_fit", c2_fit);
    report.param("monotonicity_failures", monotone_failures as f64);
    report.param("stopping_times", family.taus.len() as f64);
    report.finalize();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ExponentLaw, ExponentSpec, SpaceSpec};
    use crate::space::{build_dyadic_space, RandomVariable};

    #[test]
    fn constant_one_gives_unit_ratios() {
        let config = TrialConfig::new(SpaceSpec::Dyadic { depth: 2 }, ExponentSpec::constant(1.0)).with_trials(20);
        let r = jn_equivalence_sweep(&config).unwrap();
        assert!(r.ratios.iter().all(|x| (x - 1.0).abs() < 1e-12));
        assert!((r.params["envelope"] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_martingale_is_skipped() {
        let s = build_dyadic_space(2).unwrap();
        let p = Exponent::new(vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let f = Martingale::zero(&s);
        let g = Martingale::from_terminal(&s, &RandomVariable::new(vec![1.0, -1.0, 2.0, -2.0])).unwrap();
        let r = jn_equivalence_on(&s, &p, &[f, g]).unwrap();
        assert_eq!(r.skipped, 1);
        assert_eq!(r.ratios.len(), 1);
        assert!(r.params["envelope"].is_finite());
    }

    #[test]
    fn refinement_leaves_envelope_unchanged() {
        let config = TrialConfig::new(
            SpaceSpec::Dyadic { depth: 2 },
            ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 },
        )
        .with_trials(15)
        .with_seed(4);
        let s = config.space.build().unwrap();
        let p = config_exponent(&s, &config).unwrap();
        let fs: Vec<Martingale> = (0..15).map(|i| generate_trial(&config, &s, i).unwrap()).collect();
        let fine = s.refine_by_halving();
        let lifted: Vec<Martingale> = fs
            .iter()
            .map(|f| {
                let t: Vec<f64> = (0..fine.num_leaves()).map(|l| f.terminal().values()[l / 2]).collect();
                Martingale::from_terminal(&fine, &RandomVariable::new(t)).unwrap()
            })
            .collect();
        let a = jn_equivalence_on(&s, &p, &fs).unwrap();
        let b = jn_equivalence_on(&fine, &p.refined_by_halving(), &lifted).unwrap();
        assert!((a.params["envelope"] / b.params["envelope"] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn exp_curve_depth_two() {
        let s = build_dyadic_space(2).unwrap();
        let f = Martingale::from_terminal(&s, &RandomVariable::new(vec![3.0, -1.0, 0.5, -2.5])).unwrap();
        let p = Exponent::new(vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let r = exp_jn_curve(&f, &p, None, ExpJnOptions::default()).unwrap();
        assert_eq!(r.violations, 0);
        assert!(r.params["c2_fit"] > 0.0);
        // t = 0 gives the whole set, ratio 1 against c1 = 4
        assert!((r.points[0].y - 1.0).abs() < 1e-12);
        // beyond max|d| the tail vanishes
        assert_eq!(r.points[r.points.len() - 2].y, 0.0);
        let w = r.witness.as_ref().unwrap();
        assert!((w.replay().unwrap() - w.ratio).abs() <= 1e-9);
    }

    #[test]
    fn exp_curve_rejects_zero() {
        let s = build_dyadic_space(1).unwrap();
        let p = Exponent::constant(2, 1.5).unwrap();
        assert!(exp_jn_curve(&Martingale::zero(&s), &p, None, ExpJnOptions::default()).is_err());
    }
}
