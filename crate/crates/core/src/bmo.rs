//! `BMO_{p(.)}` and Lipschitz `Lambda_q(alpha(.))` norms as suprema over
//! stopping times, and the finite duality pairing.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::hardy::hs_norm;
use crate::martingale::{
    count_stopping_times, enumerate_stopping_times, sample_stopping_times, Martingale, StoppingTime,
    DEFAULT_ENUMERATION_CAP, INF,
};
use crate::space::{Exponent, FilteredSpace, RandomVariable};
use crate::varlp::{indicator_norm, norm_values};

/// Default sample size when the stopping times cannot all be enumerated.
pub const DEFAULT_SAMPLE_COUNT: usize = 4096;

/// How the family of stopping times is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupMode {
    /// Every stopping time; resource error above `cap`.
    Exhaustive { cap: u64 },
    /// Seeded sample; values are lower bounds for the true supremum.
    Sampled { count: usize, seed: u64 },
    /// Exhaustive when the count is at most `cap`, sampled otherwise.
    Auto { cap: u64, count: usize, seed: u64 },
}

impl Default for SupMode {
    fn default() -> Self {
        SupMode::Auto { cap: DEFAULT_ENUMERATION_CAP, count: DEFAULT_SAMPLE_COUNT, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SupKind {
    Exhaustive,
    Sampled,
}

/// A fixed list of stopping times over which suprema are taken.
#[derive(Debug, Clone, PartialEq)]
pub struct StoppingFamily {
    pub taus: Vec<StoppingTime>,
    pub kind: SupKind,
}

impl StoppingFamily {
    pub fn build(space: &FilteredSpace, mode: SupMode) -> Result<Self> {
        match mode {
            SupMode::Exhaustive { cap } => Ok(StoppingFamily {
                taus: enumerate_stopping_times(space, cap)?,
                kind: SupKind::Exhaustive,
            }),
            SupMode::Sampled { count, seed } => Ok(StoppingFamily {
                taus: sample_stopping_times(space, count, seed),
                kind: SupKind::Sampled,
            }),
            SupMode::Auto { cap, count, seed } => {
                if count_stopping_times(space) <= cap {
                    Self::build(space, SupMode::Exhaustive { cap })
                } else {
                    Self::build(space, SupMode::Sampled { count, seed })
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupNormResult {
    pub value: f64,
    pub argmax_tau: StoppingTime,
    pub mode: SupKind,
    /// Size of the stopping-time family.
    pub candidates: usize,
}

fn require_zero_start(f: &Martingale) -> Result<()> {
    if f.level(0).sup_abs() > 1e-12 * f.sup_abs().max(1.0) {
        return domain("this norm is defined for martingales with f_0 = 0");
    }
    Ok(())
}

/// `f_N - f_{tau-1}` on `{tau < inf}` (with `f_{-1} = 0`), zero elsewhere.
pub fn shifted_difference(f: &Martingale, tau: &StoppingTime) -> Vec<f64> {
    let n = f.depth();
    (0..f.space().num_leaves())
        .map(|l| match tau.get(l) {
            INF => 0.0,
            0 => f.level(n).values()[l],
            t => f.level(n).values()[l] - f.level(t as usize - 1).values()[l],
        })
        .collect()
}

/// `f_N - f_tau` on `{tau < inf}`, zero elsewhere.
pub fn stopped_difference(f: &Martingale, tau: &StoppingTime) -> Vec<f64> {
    let n = f.depth();
    (0..f.space().num_leaves())
        .map(|l| match tau.get(l) {
            INF => 0.0,
            t => f.level(n).values()[l] - f.level(t as usize).values()[l],
        })
        .collect()
}

fn argmax(values: impl Iterator<Item = Option<f64>>) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, v) in values.enumerate() {
        if let Some(v) = v {
            if best.map_or(true, |(_, b)| v > b) {
                best = Some((i, v));
            }
        }
    }
    best
}

/// Evaluates `BMO_{p(.)}` ratios over a fixed family, caching `||chi_{tau<inf}||_p`.
#[derive(Debug, Clone)]
pub struct BmoEvaluator {
    space: FilteredSpace,
    p: Exponent,
    family: StoppingFamily,
    chi: Vec<f64>,
}

impl BmoEvaluator {
    pub fn new(space: &FilteredSpace, p: &Exponent, family: StoppingFamily) -> Result<Self> {
        p.check_len(space)?;
        p.require_finite("BMO")?;
        let chi = family
            .taus
            .iter()
            .map(|t| indicator_norm(space, &t.finite_mask(), p))
            .collect::<Result<_>>()?;
        Ok(BmoEvaluator { space: space.clone(), p: p.clone(), family, chi })
    }

    pub fn family(&self) -> &StoppingFamily {
        &self.family
    }

    pub fn exponent(&self) -> &Exponent {
        &self.p
    }

    /// `||chi_{tau<inf}||_p` for each family member.
    pub fn chi_norms(&self) -> &[f64] {
        &self.chi
    }

    /// Per stopping time, `||f - f^{tau-1}|| / ||chi_{tau<inf}||`, or `None`
    /// when `P(tau < inf) = 0`.
    pub fn ratios(&self, f: &Martingale) -> Result<Vec<Option<f64>>> {
        if f.space() != &self.space {
            return validation("martingale lives on a different space");
        }
        require_zero_start(f)?;
        self.family
            .taus
            .iter()
            .zip(&self.chi)
            .map(|(tau, &chi)| {
                if chi == 0.0 {
                    return Ok(None);
                }
                let g = shifted_difference(f, tau);
                Ok(Some(norm_values(&self.space, &g, &self.p)? / chi))
            })
            .collect()
    }

    pub fn eval(&self, f: &Martingale) -> Result<SupNormResult> {
        let r = self.ratios(f)?;
        let (i, value) = argmax(r.into_iter()).unwrap_or((0, 0.0));
        Ok(SupNormResult {
            value,
            argmax_tau: self.family.taus[i].clone(),
            mode: self.family.kind,
            candidates: self.family.taus.len(),
        })
    }
}

/// `sup_tau ||chi_{tau<inf}||_p^-1 ||f - f^{tau-1}||_p` over the chosen family.
pub fn bmo_norm(f: &Martingale, p: &Exponent, mode: SupMode) -> Result<SupNormResult> {
    let family = StoppingFamily::build(f.space(), mode)?;
    BmoEvaluator::new(f.space(), p, family)?.eval(f)
}

/// `sup_tau ||chi||_{1/alpha}^-1 ||chi||_q^-1 ||f - f^tau||_q` with
/// `chi = chi_{tau<inf}`; `alpha = 0` means `1/alpha = inf` (mixed modular).
pub fn lipschitz_norm(f: &Martingale, q: f64, alpha: &[f64], mode: SupMode) -> Result<SupNormResult> {
    let space = f.space();
    if !(q >= 1.0 && q.is_finite()) {
        return validation(format!("q must satisfy 1 <= q < inf, got {q}"));
    }
    if alpha.len() != space.num_leaves() {
        return validation("alpha length does not match the space");
    }
    if let Some(a) = alpha.iter().find(|a| !(a.is_finite() && **a >= 0.0)) {
        return validation(format!("alpha must be finite and nonnegative, got {a}"));
    }
    require_zero_start(f)?;
    let inv_alpha = Exponent::mixed(alpha.iter().map(|&a| if a == 0.0 { f64::INFINITY } else { 1.0 / a }).collect())?;
    let qe = Exponent::constant(space.num_leaves(), q)?;
    let family = StoppingFamily::build(space, mode)?;
    let mut vals = Vec::with_capacity(family.taus.len());
    for tau in &family.taus {
        let mask = tau.finite_mask();
        let chi_q = indicator_norm(space, &mask, &qe)?;
        if chi_q == 0.0 {
            vals.push(None);
            continue;
        }
        let chi_a = indicator_norm(space, &mask, &inv_alpha)?;
        let diff = norm_values(space, &stopped_difference(f, tau), &qe)?;
        vals.push(Some(diff / (chi_a * chi_q)));
    }
    let (i, value) = argmax(vals.into_iter()).unwrap_or((0, 0.0));
    Ok(SupNormResult {
        value,
        argmax_tau: family.taus[i].clone(),
        mode: family.kind,
        candidates: family.taus.len(),
    })
}

/// `|E(f_N phi)| / (||f||_{H^s_p} ||phi||_{Lambda_2(alpha)})` with `alpha = 1/p - 1`.
///
/// A zero pairing gives 0 regardless of the denominator.
pub fn duality_pairing_ratio(f: &Martingale, phi: &RandomVariable, p: &Exponent, mode: SupMode) -> Result<f64> {
    let space = f.space();
    phi.check_len(space)?;
    p.check_len(space)?;
    if p.p_plus() > 1.0 {
        return domain(format!("the pairing bound needs p_+ <= 1, got {}", p.p_plus()));
    }
    require_zero_start(f)?;
    let pairing: f64 = space
        .leaf_probs()
        .iter()
        .zip(f.terminal().values())
        .zip(phi.values())
        .map(|((w, a), b)| w * a * b)
        .sum::<f64>()
        .abs();
    if pairing == 0.0 {
        return Ok(0.0);
    }
    let alpha: Vec<f64> = p.values().iter().map(|v| (1.0 / v - 1.0).max(0.0)).collect();
    let phi_m = Martingale::from_terminal(space, phi)?;
    let phi0 = phi_m.level(0).clone();
    // Lambda norm ignores F_0-measurable shifts; evaluate it on phi - phi_0.
    let centered = phi_m.sub(&Martingale::from_terminal(space, &phi0)?);
    let lam = lipschitz_norm(&centered, 2.0, &alpha, mode)?.value;
    let hs = hs_norm(f, p)?;
    if hs == 0.0 || lam == 0.0 {
        return domain("duality pairing ratio has a zero denominator with a nonzero pairing");
    }
    Ok(pairing / (hs * lam))
}
