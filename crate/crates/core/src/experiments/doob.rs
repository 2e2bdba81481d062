//! Strong-type Doob inequality: measured `||Mf||_p / ||f_N||_p`.

use crate::error::{domain, Result};
use crate::io::MartingaleFile;
use crate::martingale::{maximal, Martingale};
use crate::space::Exponent;
use crate::varlp::norm_values;

use super::{config_exponent, generate_trial, ConstantReport, TrialConfig, Witness, WitnessKind};

const SCALE: f64 = 10.0;
const SCALE_TOLERANCE: f64 = 1e-9;

/// `||Mf||_p / ||f_N||_p`; `NaN` when `f_N = 0`.
pub fn doob_ratio(f: &Martingale, p: &Exponent) -> Result<f64> {
    let space = f.space();
    p.check_len(space)?;
    let denom = norm_values(space, f.terminal().values(), p)?;
    if denom == 0.0 {
        return Ok(f64::NAN);
    }
    Ok(norm_values(space, maximal(f, None).values(), p)? / denom)
}

/// Doob ratios over the trials of `config` with exponent `p`.
///
/// Each ratio is recomputed for `10 f`; a relative change above `1e-9`
/// counts as a violation, as does a ratio above `p' + 1e-9` when `p` is
/// constant.
pub fn doob_strong_check(config: &TrialConfig, p: &Exponent) -> Result<ConstantReport> {
    config.validate()?;
    let space = config.space.build()?;
    p.check_len(&space)?;
    p.require_finite("the Doob check")?;
    if p.p_minus() <= 1.0 {
        return domain(format!("the strong-type inequality needs p_- > 1, got {}", p.p_minus()));
    }
    let classical = p.constant_value().map(|q| q / (q - 1.0));
    let mut report = ConstantReport::new(
        "Doob ratio ||Mf||_p / ||f_N||_p",
        if classical.is_some() { "classical constant p/(p-1)" } else { "finite envelope (no explicit constant)" },
    );
    let mut scale_dev = 0.0f64;
    let mut best: Option<(usize, f64, Martingale)> = None;
    for i in 0..config.trials {
        let f = generate_trial(config, &space, i)?;
        let r = doob_ratio(&f, p)?;
        if r.is_nan() {
            report.skipped += 1;
            continue;
        }
        let rs = doob_ratio(&f.scaled(SCALE), p)?;
        let dev = (rs - r).abs() / r;
        scale_dev = scale_dev.max(dev);
        if dev > SCALE_TOLERANCE || classical.is_some_and(|c| r > c + 1e-9) {
            report.violations += 1;
        }
        let idx = report.ratios.len();
        report.ratios.push(r);
        report.point("ratio", i as f64, r);
        if best.as_ref().map_or(true, |(_, b, _)| r > *b) {
            best = Some((idx, r, f));
        }
    }
    if let Some((index, ratio, f)) = best {
        report.witness = Some(Witness {
            index,
            ratio,
            instance: WitnessKind::Doob {
                space: space.clone(),
                exponent: p.values().to_vec(),
                martingale: MartingaleFile::from(&f),
            },
        });
    }
    if let Some(c) = classical {
        report.param("classical_constant", c);
    }
    report.param("max_scale_deviation", scale_dev);
    report.param("trials", config.trials as f64);
    report.param("seed", config.seed as f64);
    report.notes.push(format!("configuration {}", config.label()));
    report.finalize();
    Ok(report)
}

/// [`doob_strong_check`] with the configuration's own exponent.
pub fn doob_strong_sweep(config: &TrialConfig) -> Result<ConstantReport> {
    let space = config.space.build()?;
    doob_strong_check(config, &config_exponent(&space, config)?)
}
