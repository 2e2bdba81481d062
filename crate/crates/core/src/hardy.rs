//! `H^s_{p(.)}` and `H^*_{p(.)}` norms, atoms, and the stopping-time atomic
//! decomposition.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Result};
use crate::martingale::{cond_square, cond_square_profile, maximal, stop, Martingale, StoppingTime, INF};
use crate::space::{Exponent, FilteredSpace, RandomVariable};
use crate::varlp::{indicator_norm, norm_values, CHECK_SLACK};

/// `||s(f)||_p`.
pub fn hs_norm(f: &Martingale, p: &Exponent) -> Result<f64> {
    p.check_len(f.space())?;
    norm_values(f.space(), cond_square(f, None).values(), p)
}

/// `||Mf||_p`.
pub fn hmax_norm(f: &Martingale, p: &Exponent) -> Result<f64> {
    p.check_len(f.space())?;
    norm_values(f.space(), maximal(f, None).values(), p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomDiagnostics {
    pub is_atom: bool,
    /// `E(a|F_n) = 0` wherever `n <= tau`.
    pub vanishing: bool,
    /// Largest `|E(a|F_n)|` over `{tau >= n}`.
    pub vanishing_residual: f64,
    /// `||s(a)||_inf <= ||chi_{tau < inf}||^-1`.
    pub size: bool,
    pub s_sup: f64,
    /// `||chi_{tau < inf}||^-1`, infinite when `P(tau < inf) = 0`.
    pub size_bound: f64,
}

/// Checks the two defining properties of a `(1, p, inf)`-atom.
///
/// The vanishing clause is read as `E(a|F_n) chi_{tau >= n} = 0` for every
/// `n`. When `P(tau < inf) = 0` the clause forces `a = 0`.
pub fn is_atom(space: &FilteredSpace, a: &RandomVariable, tau: &StoppingTime, p: &Exponent) -> Result<AtomDiagnostics> {
    a.check_len(space)?;
    p.check_len(space)?;
    if tau.len() != space.num_leaves() {
        return validation("stopping time length does not match the space");
    }
    let m = Martingale::from_terminal(space, a)?;
    let tol = 1e-10 * a.sup_abs().max(1.0);
    let mut residual = 0.0f64;
    for (n, lvl) in m.levels().iter().enumerate() {
        for (l, v) in lvl.values().iter().enumerate() {
            let t = tau.get(l);
            if t == INF || t as usize >= n {
                residual = residual.max(v.abs());
            }
        }
    }
    let vanishing = residual <= tol;
    let s_sup = cond_square(&m, None).sup_abs();
    let chi = indicator_norm(space, &tau.finite_mask(), p)?;
    let size_bound = if chi > 0.0 { 1.0 / chi } else { f64::INFINITY };
    let size = if chi > 0.0 {
        s_sup <= size_bound * (1.0 + CHECK_SLACK)
    } else {
        a.sup_abs() <= tol
    };
    Ok(AtomDiagnostics { is_atom: vanishing && size, vanishing, vanishing_residual: residual, size, s_sup, size_bound })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomTerm {
    pub k: i32,
    pub mu: f64,
    pub tau: StoppingTime,
    pub atom_terminal: RandomVariable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomicDecomposition {
    pub terms: Vec<AtomTerm>,
    /// Window `k_min..k_max` outside which every term vanishes.
    pub k_min: i32,
    pub k_max: i32,
}

impl AtomicDecomposition {
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }
}

fn pow2(k: i32) -> f64 {
    2f64.powi(k)
}

/// Stopping-time decomposition `f = sum_k mu_k a^k` with
/// `tau_k = inf { n : s_{n+1}(f) > 2^k }`, `mu_k = 3 2^k ||chi_{tau_k < inf}||`
/// and `a^k = (f^{tau_{k+1}} - f^{tau_k}) / mu_k`.
///
/// Requires `f_0 = 0`. Terms are produced for `k_min <= k < k_max`, where
/// `2^{k_max}` is the first power of two `>= max s(f)` (so `tau_{k_max} = inf`)
/// and `k_min` is the largest `k` with `2^k` below every first nonzero jump
/// `s_{n+1}` (so `tau_k` no longer moves below it).
pub fn atomic_decompose(f: &Martingale, p: &Exponent) -> Result<AtomicDecomposition> {
    let space = f.space();
    p.check_len(space)?;
    let scale = f.sup_abs().max(1.0);
    if f.level(0).sup_abs() > 1e-12 * scale {
        return domain("atomic decomposition needs f_0 = 0; decompose f - f_0 instead");
    }
    let depth = f.depth();
    let s: Vec<Vec<f64>> = cond_square_profile(f)
        .into_iter()
        .map(|v| v.into_iter().map(f64::sqrt).collect())
        .collect();
    let s_max = s[depth].iter().copied().fold(0.0, f64::max);
    if s_max == 0.0 {
        return Ok(AtomicDecomposition { terms: Vec::new(), k_min: 0, k_max: 0 });
    }

    let mut k_max = s_max.log2().ceil() as i32;
    while pow2(k_max) < s_max {
        k_max += 1;
    }
    while pow2(k_max - 1) >= s_max {
        k_max -= 1;
    }

    // first nonzero conditional square value on each leaf
    let first_jump = (0..space.num_leaves())
        .filter_map(|l| (1..=depth).map(|n| s[n][l]).find(|&v| v > 0.0))
        .fold(f64::INFINITY, f64::min);
    let mut k_min = first_jump.log2().floor() as i32;
    while pow2(k_min) >= first_jump {
        k_min -= 1;
    }
    while pow2(k_min + 1) < first_jump {
        k_min += 1;
    }

    let tau_of = |k: i32| -> StoppingTime {
        let thr = pow2(k);
        let v = (0..space.num_leaves())
            .map(|l| (0..depth).find(|&n| s[n + 1][l] > thr).map_or(INF, |n| n as u32))
            .collect();
        StoppingTime::from_raw(v)
    };

    let mut terms = Vec::new();
    let mut tau_k = tau_of(k_min);
    let mut stopped_k = stop(f, &tau_k)?;
    for k in k_min..k_max {
        let tau_next = tau_of(k + 1);
        let stopped_next = stop(f, &tau_next)?;
        let mu = 3.0 * pow2(k) * indicator_norm(space, &tau_k.finite_mask(), p)?;
        let atom = if mu > 0.0 {
            stopped_next
                .terminal()
                .values()
                .iter()
                .zip(stopped_k.terminal().values())
                .map(|(a, b)| (a - b) / mu)
                .collect()
        } else {
            vec![0.0; space.num_leaves()]
        };
        terms.push(AtomTerm { k, mu, tau: tau_k, atom_terminal: RandomVariable::new(atom) });
        tau_k = tau_next;
        stopped_k = stopped_next;
    }
    Ok(AtomicDecomposition { terms, k_min, k_max })
}

/// `(sum_k (mu_k chi_{Omega_k} / ||chi_{Omega_k}||)^pu)^(1/pu)` pointwise,
/// with `Omega_k = {tau_k < inf}` and `pu = min(p_-, 1)`.
pub fn a_function(space: &FilteredSpace, dec: &AtomicDecomposition, p: &Exponent) -> Result<Vec<f64>> {
    p.check_len(space)?;
    let pu = p.p_minus().min(1.0);
    let mut acc = vec![0.0; space.num_leaves()];
    for t in &dec.terms {
        let mask = t.tau.finite_mask();
        let chi = indicator_norm(space, &mask, p)?;
        if chi == 0.0 || t.mu == 0.0 {
            continue;
        }
        let h = (t.mu / chi).powf(pu);
        for (a, m) in acc.iter_mut().zip(&mask) {
            if *m {
                *a += h;
            }
        }
    }
    Ok(acc.into_iter().map(|v| v.powf(1.0 / pu)).collect())
}

/// The quantity `A({mu_k}, {a^k}, {tau_k})`: the `p(.)`-norm of [`a_function`].
pub fn a_quantity(space: &FilteredSpace, dec: &AtomicDecomposition, p: &Exponent) -> Result<f64> {
    if dec.terms.is_empty() {
        return Ok(0.0);
    }
    norm_values(space, &a_function(space, dec, p)?, p)
}

/// `sum_k mu_k a^k`, as the martingale it generates.
pub fn reconstruct(space: &FilteredSpace, dec: &AtomicDecomposition) -> Result<Martingale> {
    let mut acc = vec![0.0; space.num_leaves()];
    for t in &dec.terms {
        t.atom_terminal.check_len(space)?;
        for (a, v) in acc.iter_mut().zip(t.atom_terminal.values()) {
            *a += t.mu * v;
        }
    }
    Martingale::from_terminal(space, &RandomVariable::new(acc))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prop41Bounds {
    /// `(sum_k mu_k^{p_+})^{1/p_+}`
    pub mu_lp_plus: f64,
    /// `sum_k mu_k`
    pub mu_sum: f64,
    pub a: f64,
    /// `mu_lp_plus <= A`
    pub first_holds: bool,
    /// `p_+ <= 1`, so the second bound is asserted.
    pub second_applies: bool,
    /// `mu_sum <= A`; `true` when it does not apply.
    pub second_holds: bool,
}

/// Coefficient bounds in terms of `A`.
pub fn prop41_bounds(space: &FilteredSpace, dec: &AtomicDecomposition, p: &Exponent) -> Result<Prop41Bounds> {
    let pp = p.p_plus();
    let a = a_quantity(space, dec, p)?;
    let mu_lp_plus = dec.terms.iter().map(|t| t.mu.powf(pp)).sum::<f64>().powf(1.0 / pp);
    let mu_sum: f64 = dec.terms.iter().map(|t| t.mu).sum();
    let le = |x: f64, y: f64| x <= y * (1.0 + CHECK_SLACK) + CHECK_SLACK;
    let second_applies = pp <= 1.0;
    Ok(Prop41Bounds {
        mu_lp_plus,
        mu_sum,
        a,
        first_holds: le(mu_lp_plus, a),
        second_applies,
        second_holds: !second_applies || le(mu_sum, a),
    })
}

/// Per leaf in `Omega_{k_min}`, the ratio of
/// `(sum_k (3 2^k chi_{Omega_k})^pu)^(1/pu)` to `sup_k 3 2^k chi_{Omega_k}`,
/// together with the geometric bound `(1 - 2^-pu)^(-1/pu)`.
pub fn geometric_comparability(dec: &AtomicDecomposition, p: &Exponent) -> (Vec<f64>, f64) {
    let pu = p.p_minus().min(1.0);
    let bound = (1.0 - 2f64.powf(-pu)).powf(-1.0 / pu);
    let n = dec.terms.first().map_or(0, |t| t.tau.len());
    let mut sum = vec![0.0f64; n];
    let mut sup = vec![0.0f64; n];
    for t in &dec.terms {
        let h = 3.0 * pow2(t.k);
        for (l, m) in t.tau.finite_mask().into_iter().enumerate() {
            if m {
                sum[l] += h.powf(pu);
                sup[l] = sup[l].max(h);
            }
        }
    }
    let ratios = sum
        .iter()
        .zip(&sup)
        .filter(|(_, &s)| s > 0.0)
        .map(|(a, s)| a.powf(1.0 / pu) / s)
        .collect();
    (ratios, bound)
}
