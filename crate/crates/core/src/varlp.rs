//! Modular and Luxemburg quasi-norm of `L^{p(.)}` on a finite space.

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};
use crate::space::{condition_k, ConditionKMode, Exponent, FilteredSpace, RandomVariable};

/// Guaranteed relative bracket width; bisection continues to ulp resolution.
pub const BISECTION_TOLERANCE: f64 = 1e-12;
pub const MAX_BISECTION_ITERATIONS: usize = 200;
pub const MAX_HALVINGS: usize = 2000;

/// Default envelope for the Hölder check.
pub const DEFAULT_HOLDER_CONSTANT: f64 = 2.0;

/// Slack used by the assertion-style checks in this module.
pub const CHECK_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormResult {
    pub norm: f64,
    /// Bisection steps after the bracket was found.
    pub iterations: usize,
    /// `|rho(f / norm) - 1|`; for mixed exponents the relative bracket width.
    pub residual: f64,
}

impl NormResult {
    fn zero() -> Self {
        NormResult { norm: 0.0, iterations: 0, residual: 0.0 }
    }
}

fn modular_raw(probs: &[f64], values: &[f64], p: &[f64], lambda: f64) -> f64 {
    let mut sum = 0.0;
    for ((&w, &v), &e) in probs.iter().zip(values).zip(p) {
        let t = v.abs() / lambda;
        if e.is_infinite() {
            if t > 1.0 {
                return f64::INFINITY;
            }
        } else if t > 0.0 {
            sum += w * t.powf(e);
        }
    }
    sum
}

/// `rho(f / lambda) = sum_w P(w) (|f(w)| / lambda)^p(w)`.
///
/// Leaves with `p = inf` (mixed exponents only) contribute 0 when
/// `|f| <= lambda` and make the result `+inf` otherwise.
pub fn modular(space: &FilteredSpace, f: &RandomVariable, p: &Exponent, lambda: f64) -> Result<f64> {
    f.check_len(space)?;
    p.check_len(space)?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return validation(format!("lambda must be a finite positive number, got {lambda}"));
    }
    Ok(modular_raw(space.leaf_probs(), f.values(), p.values(), lambda))
}

pub(crate) fn bisect_norm(probs: &[f64], values: &[f64], p: &[f64], mixed: bool) -> Result<NormResult> {
    let sup = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if sup == 0.0 {
        return Ok(NormResult::zero());
    }
    let rho = |lam: f64| modular_raw(probs, values, p, lam);

    let mut hi = sup;
    let mut lo = sup;
    let mut halvings = 0;
    loop {
        lo *= 0.5;
        halvings += 1;
        if rho(lo) > 1.0 {
            break;
        }
        hi = lo;
        if halvings >= MAX_HALVINGS || lo == 0.0 {
            return Err(Error::Numerical {
                message: "no lower bracket found for the Luxemburg norm".into(),
                lo,
                hi,
            });
        }
    }

    // Bisect past the 1e-12 target down to ulp resolution, so the returned
    // value is accurate to the last few bits.
    let mut iterations = 0;
    loop {
        if iterations == MAX_BISECTION_ITERATIONS {
            return Err(Error::Numerical {
                message: "Luxemburg bisection did not converge".into(),
                lo,
                hi,
            });
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(mid) <= 1.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let residual = if mixed { (hi - lo) / hi } else { (rho(hi) - 1.0).abs() };
    Ok(NormResult { norm: hi, iterations, residual })
}

/// Luxemburg norm `inf { lambda > 0 : rho(f / lambda) <= 1 }` by bisection.
///
/// The upper bracket is `sup |f|`; the lower one is found by halving.
pub fn luxemburg_norm(space: &FilteredSpace, f: &RandomVariable, p: &Exponent) -> Result<NormResult> {
    f.check_len(space)?;
    p.check_len(space)?;
    bisect_norm(space.leaf_probs(), f.values(), p.values(), p.is_mixed())
}

/// Norm of a value slice, with a closed form when `p` is constant.
pub(crate) fn norm_values(space: &FilteredSpace, values: &[f64], p: &Exponent) -> Result<f64> {
    norm_values_raw(space.leaf_probs(), values, p)
}

pub(crate) fn norm_values_raw(probs: &[f64], values: &[f64], p: &Exponent) -> Result<f64> {
    if let Some(p0) = p.constant_value() {
        let s: f64 = probs.iter().zip(values).map(|(w, v)| w * v.abs().powf(p0)).sum();
        return Ok(s.powf(1.0 / p0));
    }
    Ok(bisect_norm(probs, values, p.values(), p.is_mixed())?.norm)
}

/// Norm of the indicator of a leaf mask.
pub(crate) fn indicator_norm(space: &FilteredSpace, mask: &[bool], p: &Exponent) -> Result<f64> {
    let v: Vec<f64> = mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect();
    norm_values(space, &v, p)
}

/// Returns `(|| |f|^r ||_p, ||f||_{rp}^r)`.
pub fn check_power_identity(
    space: &FilteredSpace,
    f: &RandomVariable,
    p: &Exponent,
    r: f64,
) -> Result<(f64, f64)> {
    if !(r > 0.0 && r.is_finite()) {
        return validation(format!("power r must be finite and positive, got {r}"));
    }
    if p.p_minus() < 1.0 {
        return domain(format!("power identity needs p_- >= 1, got {}", p.p_minus()));
    }
    let powered = RandomVariable::new(f.values().iter().map(|v| v.abs().powf(r)).collect());
    let left = luxemburg_norm(space, &powered, p)?.norm;
    let right = luxemburg_norm(space, f, &p.scaled(r)?)?.norm.powf(r);
    Ok((left, right))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolderCheck {
    /// `||f g||_p`
    pub product_norm: f64,
    /// `||f||_q`
    pub f_norm: f64,
    /// `||g||_r`
    pub g_norm: f64,
}

impl HolderCheck {
    /// `||fg||_p <= c ||f||_q ||g||_r` with relative slack.
    pub fn holds(&self, c: f64) -> bool {
        self.product_norm <= c * self.f_norm * self.g_norm * (1.0 + CHECK_SLACK)
    }

    /// `||fg|| / (||f|| ||g||)`, 0 when the product norm vanishes.
    pub fn ratio(&self) -> f64 {
        if self.product_norm == 0.0 {
            0.0
        } else {
            self.product_norm / (self.f_norm * self.g_norm)
        }
    }
}

/// Hölder quantities for `1/p = 1/q + 1/r`.
pub fn check_holder(
    space: &FilteredSpace,
    f: &RandomVariable,
    g: &RandomVariable,
    p: &Exponent,
    q: &Exponent,
    r: &Exponent,
) -> Result<HolderCheck> {
    g.check_len(space)?;
    q.check_len(space)?;
    r.check_len(space)?;
    for (i, ((a, b), c)) in p.values().iter().zip(q.values()).zip(r.values()).enumerate() {
        if (1.0 / a - 1.0 / b - 1.0 / c).abs() > 1e-12 {
            return domain(format!("1/p = 1/q + 1/r fails at leaf {i}: p={a}, q={b}, r={c}"));
        }
    }
    let fg = RandomVariable::new(f.values().iter().zip(g.values()).map(|(a, b)| a * b).collect());
    Ok(HolderCheck {
        product_norm: luxemburg_norm(space, &fg, p)?.norm,
        f_norm: luxemburg_norm(space, f, q)?.norm,
        g_norm: luxemburg_norm(space, g, r)?.norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BridgeReport {
    pub modular: f64,
    pub norm: f64,
    /// `||f|| < 1 (= 1, > 1)` iff `rho(f) < 1 (= 1, > 1)`.
    pub clause1: bool,
    /// `||f|| > 1` implies `rho^(1/p+) <= ||f|| <= rho^(1/p-)`.
    pub clause2: bool,
    /// `0 < ||f|| <= 1` implies `rho^(1/p-) <= ||f|| <= rho^(1/p+)`.
    pub clause3: bool,
}

impl BridgeReport {
    pub fn all_hold(&self) -> bool {
        self.clause1 && self.clause2 && self.clause3
    }
}

/// Compares `rho(f)` and `||f||` against the three norm/modular relations.
pub fn norm_modular_bridge(space: &FilteredSpace, f: &RandomVariable, p: &Exponent) -> Result<BridgeReport> {
    p.require_finite("the norm/modular bridge")?;
    let rho = modular(space, f, p, 1.0)?;
    let norm = luxemburg_norm(space, f, p)?.norm;
    let tol = CHECK_SLACK;
    let side = |x: f64| {
        if (x - 1.0).abs() <= tol {
            0
        } else if x < 1.0 {
            -1
        } else {
            1
        }
    };
    // a boundary case on one side may sit just outside the tolerance on the other
    let clause1 = side(rho) == side(norm) || side(rho) == 0 || side(norm) == 0;
    let le = |a: f64, b: f64| a <= b * (1.0 + tol) + tol * f64::MIN_POSITIVE;
    let (lo_exp, hi_exp) = (1.0 / p.p_plus(), 1.0 / p.p_minus());
    let clause2 = !(norm > 1.0) || (le(rho.powf(lo_exp), norm) && le(norm, rho.powf(hi_exp)));
    let clause3 = !(norm > 0.0 && norm <= 1.0)
        || (le(rho.powf(hi_exp), norm) && le(norm, rho.powf(lo_exp)));
    Ok(BridgeReport { modular: rho, norm, clause1, clause2, clause3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorProfile {
    pub prob: f64,
    /// `P(B)^(1/p_-(B))`
    pub lower: f64,
    /// `P(B)^(1/p_+(B))`
    pub upper: f64,
    /// `||chi_B||_p`
    pub norm: f64,
    /// Largest ratio between any two of `lower`, `norm`, `upper`.
    pub max_ratio: f64,
}

impl IndicatorProfile {
    pub fn sandwiched(&self) -> bool {
        self.lower <= self.norm * (1.0 + CHECK_SLACK) && self.norm <= self.upper * (1.0 + CHECK_SLACK)
    }
}

fn mask_of(space: &FilteredSpace, set: &[usize]) -> Result<Vec<bool>> {
    if set.is_empty() {
        return domain("the set B must be nonempty");
    }
    let mut mask = vec![false; space.num_leaves()];
    for &l in set {
        if l >= mask.len() {
            return validation(format!("leaf {l} out of range"));
        }
        mask[l] = true;
    }
    Ok(mask)
}

/// `P(B)^(1/p_-(B))`, `P(B)^(1/p_+(B))` and `||chi_B||_p` for a nonempty set `B`.
pub fn indicator_norm_profile(space: &FilteredSpace, set: &[usize], p: &Exponent) -> Result<IndicatorProfile> {
    p.check_len(space)?;
    p.require_finite("the indicator profile")?;
    let mask = mask_of(space, set)?;
    let prob = space.prob_of_mask(&mask);
    let lower = prob.powf(1.0 / p.p_minus_on(set));
    let upper = prob.powf(1.0 / p.p_plus_on(set));
    let norm = indicator_norm(space, &mask, p)?;
    let hi = upper.max(norm);
    let lo = lower.min(norm);
    Ok(IndicatorProfile { prob, lower, upper, norm, max_ratio: hi / lo })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProductMode<'a> {
    /// `1/p + 1/q = 1`, target `||chi_B||_1 = P(B)`.
    Conjugate,
    /// `1/r = 1/p + 1/q`, target `||chi_B||_r`.
    Harmonic(&'a Exponent),
}

/// `||chi_B||_target / (||chi_B||_p ||chi_B||_q)`.
pub fn indicator_product_ratio(
    space: &FilteredSpace,
    set: &[usize],
    p: &Exponent,
    q: &Exponent,
    mode: ProductMode<'_>,
) -> Result<f64> {
    p.check_len(space)?;
    q.check_len(space)?;
    let mask = mask_of(space, set)?;
    let target = match mode {
        ProductMode::Conjugate => {
            for (i, (a, b)) in p.values().iter().zip(q.values()).enumerate() {
                if (1.0 / a + 1.0 / b - 1.0).abs() > 1e-12 {
                    return domain(format!("1/p + 1/q = 1 fails at leaf {i}"));
                }
            }
            space.prob_of_mask(&mask)
        }
        ProductMode::Harmonic(r) => {
            r.check_len(space)?;
            for (i, ((a, b), c)) in p.values().iter().zip(q.values()).zip(r.values()).enumerate() {
                if (1.0 / c - 1.0 / a - 1.0 / b).abs() > 1e-12 {
                    return domain(format!("1/r = 1/p + 1/q fails at leaf {i}"));
                }
            }
            indicator_norm(space, &mask, r)?
        }
    };
    Ok(target / (indicator_norm(space, &mask, p)? * indicator_norm(space, &mask, q)?))
}

/// `K' = K_p^(1/p_-^2) K_q^(1/q_-^2)`: every indicator product ratio lies in `[1/K', K']`.
///
/// For a set `B` both norms lie between `P(B)^(1/p_-(B))` and
/// `P(B)^(1/p_+(B))`, and the target norm is `P(B)^(1/p(x) + 1/q(x))` up to
/// the same kind of sandwich. The exponent gap on each factor is at most
/// `(p_+(B) - p_-(B)) / p_-^2`, and `P(B)^(p_-(B) - p_+(B)) <= K_p`.
pub fn indicator_product_envelope(space: &FilteredSpace, p: &Exponent, q: &Exponent) -> Result<f64> {
    let kp = condition_k(space, p, ConditionKMode::ExactPairwise)?.k;
    let kq = condition_k(space, q, ConditionKMode::ExactPairwise)?.k;
    Ok(kp.powf(1.0 / (p.p_minus() * p.p_minus())) * kq.powf(1.0 / (q.p_minus() * q.p_minus())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::build_dyadic_space;
    use proptest::prelude::*;

    fn two() -> FilteredSpace {
        build_dyadic_space(1).unwrap()
    }

    fn rv(v: &[f64]) -> RandomVariable {
        RandomVariable::new(v.to_vec())
    }

    fn exp(v: &[f64]) -> Exponent {
        Exponent::new(v.to_vec()).unwrap()
    }

    #[test]
    fn modular_examples() {
        let s = two();
        assert_eq!(modular(&s, &rv(&[1.0, 1.0]), &exp(&[1.3, 2.9]), 1.0).unwrap(), 1.0);
        assert_eq!(modular(&s, &rv(&[2.0, 0.0]), &exp(&[2.0, 3.0]), 1.0).unwrap(), 2.0);
        assert_eq!(modular(&s, &rv(&[0.0, 0.0]), &exp(&[2.0, 3.0]), 0.1).unwrap(), 0.0);
        assert!(modular(&s, &rv(&[1.0, 0.0]), &exp(&[2.0, 3.0]), 0.0).is_err());
    }

    #[test]
    fn mixed_modular_branch() {
        let s = two();
        let p = Exponent::mixed(vec![f64::INFINITY, 2.0]).unwrap();
        assert_eq!(modular(&s, &rv(&[0.5, 0.0]), &p, 1.0).unwrap(), 0.0);
        assert_eq!(modular(&s, &rv(&[1.5, 0.0]), &p, 1.0).unwrap(), f64::INFINITY);
        // only the infinite-exponent leaf is charged: norm = sup there
        let n = luxemburg_norm(&s, &rv(&[3.0, 0.0]), &p).unwrap().norm;
        assert!((n - 3.0).abs() < 1e-11);
        // ||chi_Omega||_inf = 1
        let all_inf = Exponent::mixed(vec![f64::INFINITY; 2]).unwrap();
        assert_eq!(luxemburg_norm(&s, &rv(&[1.0, 1.0]), &all_inf).unwrap().norm, 1.0);
    }

    #[test]
    fn quadratic_oracle() {
        // rho = 1 reduces to lambda^2 - lambda/2 - 2 = 0
        let r = luxemburg_norm(&two(), &rv(&[1.0, 2.0]), &exp(&[1.0, 2.0])).unwrap();
        let expected = (1.0 + 33f64.sqrt()) / 4.0;
        assert!((r.norm - expected).abs() < 1e-10 * expected);
        assert!(r.residual < 1e-10);
        assert!(r.iterations <= MAX_BISECTION_ITERATIONS);
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let r = luxemburg_norm(&two(), &rv(&[0.0, 0.0]), &exp(&[1.0, 2.0])).unwrap();
        assert_eq!(r, NormResult { norm: 0.0, iterations: 0, residual: 0.0 });
    }

    #[test]
    fn constant_exponent_closed_form() {
        let s = build_dyadic_space(2).unwrap();
        let f = rv(&[1.0, -2.0, 0.5, 3.0]);
        let p = Exponent::constant(4, 2.5).unwrap();
        let closed = (0.25 * (1.0f64 + 2f64.powf(2.5) + 0.5f64.powf(2.5) + 3f64.powf(2.5))).powf(0.4);
        let bis = luxemburg_norm(&s, &f, &p).unwrap().norm;
        assert!((bis - closed).abs() < 1e-10 * closed);
        assert!((norm_values(&s, f.values(), &p).unwrap() - closed).abs() < 1e-14 * closed);
    }

    #[test]
    fn indicator_constant_exponent() {
        let s = build_dyadic_space(3).unwrap();
        let p = Exponent::constant(8, 3.0).unwrap();
        let mut v = vec![0.0; 8];
        v[1] = 1.0;
        v[6] = 1.0;
        v[7] = 1.0;
        let n = luxemburg_norm(&s, &rv(&v), &p).unwrap().norm;
        assert!((n - (3.0f64 / 8.0).cbrt()).abs() < 1e-11);
    }

    #[test]
    fn power_identity_examples() {
        let s = two();
        let f = rv(&[1.0, 2.0]);
        let p = exp(&[1.0, 2.0]);
        let (a, b) = check_power_identity(&s, &f, &p, 1.0).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
        let (a, b) = check_power_identity(&s, &f, &p, 2.0).unwrap();
        assert!((a - b).abs() < 1e-9 * a);
        assert_eq!(check_power_identity(&s, &rv(&[0.0, 0.0]), &p, 2.0).unwrap(), (0.0, 0.0));
        assert!(matches!(
            check_power_identity(&s, &f, &exp(&[0.5, 2.0]), 2.0),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn holder_examples() {
        let s = two();
        let one = rv(&[1.0, 1.0]);
        let c = check_holder(&s, &one, &one, &exp(&[1.0, 2.0]), &exp(&[2.0, 4.0]), &exp(&[2.0, 4.0])).unwrap();
        assert!((c.product_norm - 1.0).abs() < 1e-11);
        assert!((c.f_norm - 1.0).abs() < 1e-11);
        assert!((c.g_norm - 1.0).abs() < 1e-11);
        assert!(c.holds(1.0));
        // Cauchy-Schwarz: E|fg| <= ||f||_2 ||g||_2
        let f = rv(&[3.0, -1.0]);
        let g = rv(&[0.5, 2.0]);
        let c = check_holder(&s, &f, &g, &exp(&[1.0, 1.0]), &exp(&[2.0, 2.0]), &exp(&[2.0, 2.0])).unwrap();
        assert!((c.product_norm - 1.75).abs() < 1e-12);
        assert!(c.holds(1.0));
        assert!(matches!(
            check_holder(&s, &f, &g, &exp(&[1.0, 1.0]), &exp(&[2.0, 2.0]), &exp(&[3.0, 2.0])),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn bridge_examples() {
        let s = two();
        let p = exp(&[1.0, 2.0]);
        let b = norm_modular_bridge(&s, &rv(&[1.0, 1.0]), &p).unwrap();
        assert_eq!(b.modular, 1.0);
        assert!((b.norm - 1.0).abs() < 1e-12);
        assert!(b.all_hold());

        let b = norm_modular_bridge(&s, &rv(&[2.0, 2.0]), &p).unwrap();
        assert_eq!(b.modular, 3.0);
        assert!((b.norm - 2.0).abs() < 1e-11);
        assert!(b.all_hold());

        let b = norm_modular_bridge(&s, &rv(&[0.5, 0.5]), &p).unwrap();
        assert_eq!(b.modular, 0.375);
        assert!((b.norm - 0.5).abs() < 1e-12);
        assert!(b.all_hold());
    }

    #[test]
    fn indicator_profile_examples() {
        let s = build_dyadic_space(2).unwrap();
        let p = exp(&[1.0, 1.0, 2.0, 2.0]);
        let prof = indicator_norm_profile(&s, &[0, 2], &p).unwrap();
        let expected = (1.0 + 17f64.sqrt()) / 8.0;
        assert!((prof.norm - expected).abs() < 1e-10);
        assert!((prof.lower - 0.5).abs() < 1e-15);
        assert!((prof.upper - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(prof.sandwiched());

        let single = indicator_norm_profile(&s, &[3], &p).unwrap();
        assert!((single.norm - 0.5).abs() < 1e-12);

        let c = Exponent::constant(4, 1.7).unwrap();
        let whole = indicator_norm_profile(&s, &[0, 1, 2, 3], &c).unwrap();
        assert_eq!((whole.lower, whole.upper, whole.norm, whole.max_ratio), (1.0, 1.0, 1.0, 1.0));
        assert!(matches!(indicator_norm_profile(&s, &[], &p), Err(Error::Domain(_))));
    }

    #[test]
    fn indicator_product_examples() {
        let s = build_dyadic_space(2).unwrap();
        let two = Exponent::constant(4, 2.0).unwrap();
        let r = indicator_product_ratio(&s, &[1, 3], &two, &two, ProductMode::Conjugate).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
        let p = exp(&[1.5, 3.0, 2.0, 4.0]);
        let q = p.conjugate().unwrap();
        let r = indicator_product_ratio(&s, &[0, 1, 2, 3], &p, &q, ProductMode::Conjugate).unwrap();
        assert!((r - 1.0).abs() < 1e-11);
        let h = p.harmonic_sum(&q).unwrap();
        let env = indicator_product_envelope(&s, &p, &q).unwrap();
        let r = indicator_product_ratio(&s, &[0, 3], &p, &q, ProductMode::Harmonic(&h)).unwrap();
        assert!(r <= env && r >= 1.0 / env);
        assert!(matches!(
            indicator_product_ratio(&s, &[0], &p, &p, ProductMode::Conjugate),
            Err(Error::Domain(_))
        ));
    }

    fn instance(n: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(0.3f64..4.0, n),
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(500))]

        #[test]
        fn homogeneity((f, p) in instance(8), c in -20.0f64..20.0) {
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p).unwrap();
            let f = RandomVariable::new(f);
            let a = luxemburg_norm(&s, &f.scaled(c), &p).unwrap().norm;
            let b = c.abs() * luxemburg_norm(&s, &f, &p).unwrap().norm;
            prop_assert!((a - b).abs() <= 1e-10 * b.max(f64::MIN_POSITIVE));
        }

        #[test]
        fn underline_p_triangle((f, p) in instance(8), g in prop::collection::vec(-5.0f64..5.0, 8)) {
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p).unwrap();
            let pu = p.p_minus().min(1.0);
            let f = RandomVariable::new(f);
            let g = RandomVariable::new(g);
            let sum = RandomVariable::new(f.values().iter().zip(g.values()).map(|(a, b)| a + b).collect());
            let lhs = luxemburg_norm(&s, &sum, &p).unwrap().norm.powf(pu);
            let rhs = luxemburg_norm(&s, &f, &p).unwrap().norm.powf(pu)
                + luxemburg_norm(&s, &g, &p).unwrap().norm.powf(pu);
            prop_assert!(lhs <= rhs * (1.0 + 1e-9));
        }

        #[test]
        fn modular_strictly_decreasing((f, p) in instance(8)) {
            prop_assume!(f.iter().any(|v| *v != 0.0));
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p).unwrap();
            let f = RandomVariable::new(f);
            let mut prev = f64::INFINITY;
            for k in 0..40 {
                let lam = 0.01 * 1.3f64.powi(k);
                let m = modular(&s, &f, &p, lam).unwrap();
                prop_assert!(m < prev);
                prev = m;
            }
        }

        #[test]
        fn unit_modular_at_norm((f, p) in instance(8)) {
            prop_assume!(f.iter().any(|v| *v != 0.0));
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p).unwrap();
            let f = RandomVariable::new(f);
            let n = luxemburg_norm(&s, &f, &p).unwrap();
            prop_assert!((modular(&s, &f, &p, n.norm).unwrap() - 1.0).abs() <= 1e-9);
            prop_assert!(n.residual <= 1e-9);
        }

        #[test]
        fn constant_exponent_matches_closed_form(f in prop::collection::vec(-5.0f64..5.0, 8), p0 in 0.3f64..6.0) {
            prop_assume!(f.iter().any(|v| *v != 0.0));
            let s = build_dyadic_space(3).unwrap();
            let closed = (f.iter().map(|v| v.abs().powf(p0)).sum::<f64>() / 8.0).powf(1.0 / p0);
            let n = luxemburg_norm(&s, &RandomVariable::new(f), &Exponent::constant(8, p0).unwrap()).unwrap().norm;
            prop_assert!((n - closed).abs() <= 1e-10 * closed);
        }

        #[test]
        fn bridge_clauses_hold((f, p) in instance(8), c in 0.01f64..10.0) {
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p).unwrap();
            let f = RandomVariable::new(f).scaled(c);
            prop_assert!(norm_modular_bridge(&s, &f, &p).unwrap().all_hold());
        }

        #[test]
        fn power_identity_holds((f, p) in instance(8), r in 0.2f64..4.0) {
            let s = build_dyadic_space(3).unwrap();
            let p = Exponent::new(p.into_iter().map(|v| v + 0.7).collect()).unwrap();
            prop_assume!(p.p_minus() >= 1.0);
            let (a, b) = check_power_identity(&s, &RandomVariable::new(f), &p, r).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(b).max(f64::MIN_POSITIVE));
        }

        #[test]
        fn holder_with_default_constant(
            f in prop::collection::vec(-5.0f64..5.0, 8),
            g in prop::collection::vec(-5.0f64..5.0, 8),
            q in prop::collection::vec(2.0f64..8.0, 8),
            r in prop::collection::vec(2.0f64..8.0, 8),
        ) {
            let s = build_dyadic_space(3).unwrap();
            let q = Exponent::new(q).unwrap();
            let r = Exponent::new(r).unwrap();
            let p = q.harmonic_sum(&r).unwrap();
            let h = check_holder(&s, &RandomVariable::new(f), &RandomVariable::new(g), &p, &q, &r).unwrap();
            prop_assert!(h.holds(DEFAULT_HOLDER_CONSTANT));
        }

        #[test]
        fn indicator_sandwich_and_envelope(p in prop::collection::vec(1.2f64..4.0, 8), mask in 1u32..256) {
            let s = build_dyadic_space(3).unwrap();
            let set: Vec<usize> = (0..8).filter(|i| mask & (1 << i) != 0).collect();
            let p = Exponent::new(p).unwrap();
            prop_assert!(indicator_norm_profile(&s, &set, &p).unwrap().sandwiched());
            let q = p.conjugate().unwrap();
            let env = indicator_product_envelope(&s, &p, &q).unwrap();
            let r = indicator_product_ratio(&s, &set, &p, &q, ProductMode::Conjugate).unwrap();
            prop_assert!(r <= env * (1.0 + 1e-9) && r * env >= 1.0 - 1e-9);
        }
    }
}
