//! Seeded experiment harness: random instance generation and measured
//! constants for the maximal, atomic and John-Nirenberg inequalities.
//!
//! Trial `i` of a run draws from [`Stream::for_trial`]`(seed, i)`. Random
//! exponents for a configuration are drawn once from
//! `Stream::new(seed ^ EXPONENT_SALT)`, so they do not depend on the number
//! of trials.

mod doob;
mod jensen;
mod jn;
mod lemma34;
mod nakai;
mod weak;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Result};
use crate::io::MartingaleFile;
use crate::martingale::{Martingale, StoppingTime};
use crate::rng::Stream;
use crate::space::{build_dyadic_space, build_regular_tree, Exponent, FilteredSpace, RandomVariable};

pub use doob::{doob_ratio, doob_strong_check, doob_strong_sweep};
pub use jensen::{jensen_ratio_max, violation_33_search, SCALING_FAMILY};
pub use jn::{exp_jn_curve, jn_equivalence, jn_equivalence_on, jn_equivalence_sweep, chain_constant, ExpJnOptions, CHAIN_POWERS};
pub use lemma34::{lemma34_check, block_average_sweep};
pub use nakai::{nakai_h, nakai_sadasue, nakai_space, nakai_witness_ratio, NAKAI_MAX_DEPTH};
pub use weak::{default_lambda_grid, weak_type_check, weak_type_sweep};

/// XOR-ed into the master seed for the exponent stream.
pub const EXPONENT_SALT: u64 = 0x5EED_0E4B_0000_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpaceSpec {
    Dyadic { depth: usize },
    Regular { arity: usize, depth: usize },
    Explicit { space: FilteredSpace },
}

impl SpaceSpec {
    pub fn build(&self) -> Result<FilteredSpace> {
        match self {
            SpaceSpec::Dyadic { depth } => build_dyadic_space(*depth),
            SpaceSpec::Regular { arity, depth } => build_regular_tree(*arity, *depth),
            SpaceSpec::Explicit { space } => Ok(space.clone()),
        }
    }

    pub fn label(&self) -> String {
        match self {
            SpaceSpec::Dyadic { depth } => format!("dyadic-{depth}"),
            SpaceSpec::Regular { arity, depth } => format!("{arity}-ary-{depth}"),
            SpaceSpec::Explicit { space } => format!("explicit-{}", space.num_leaves()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExponentLaw {
    /// `p = p_min` everywhere.
    Constant,
    /// `p_min` on the first half of the leaves (tree order), `p_max` on the rest.
    TwoBlock,
    /// Independent uniform values in `[p_min, p_max]`.
    IidUniform,
    /// One uniform value per block of the middle level.
    BlockStructured,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentSpec {
    pub law: ExponentLaw,
    pub p_min: f64,
    pub p_max: f64,
}

impl ExponentSpec {
    pub fn constant(p: f64) -> Self {
        ExponentSpec { law: ExponentLaw::Constant, p_min: p, p_max: p }
    }

    pub fn label(&self) -> String {
        match self.law {
            ExponentLaw::Constant => format!("constant-{}", self.p_min),
            ExponentLaw::TwoBlock => format!("two-block-{}-{}", self.p_min, self.p_max),
            ExponentLaw::IidUniform => format!("iid-{}-{}", self.p_min, self.p_max),
            ExponentLaw::BlockStructured => format!("block-{}-{}", self.p_min, self.p_max),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MartingaleLaw {
    /// Terminal values iid standard normal.
    Normal,
    /// Terminal values iid uniform on `[-1, 1)`.
    Uniform,
    /// Terminal values `+1` or `-1` with equal probability.
    TwoPoint,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialConfig {
    pub seed: u64,
    pub trials: usize,
    pub space: SpaceSpec,
    pub exponent: ExponentSpec,
    pub law: MartingaleLaw,
}

impl TrialConfig {
    pub fn new(space: SpaceSpec, exponent: ExponentSpec) -> Self {
        TrialConfig { seed: 0, trials: 100, space, exponent, law: MartingaleLaw::Normal }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_trials(mut self, trials: usize) -> Self {
        self.trials = trials;
        self
    }

    pub fn with_law(mut self, law: MartingaleLaw) -> Self {
        self.law = law;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return validation("trials must be at least 1");
        }
        let e = &self.exponent;
        if !(e.p_min > 0.0 && e.p_min.is_finite() && e.p_max.is_finite() && e.p_min <= e.p_max) {
            return validation(format!("invalid exponent range [{}, {}]", e.p_min, e.p_max));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        format!("{}/{}", self.space.label(), self.exponent.label())
    }
}

/// Draws an exponent on `space` according to `spec`.
pub fn generate_exponent(space: &FilteredSpace, spec: &ExponentSpec, rng: &mut Stream) -> Result<Exponent> {
    let n = space.num_leaves();
    let values = match spec.law {
        ExponentLaw::Constant => vec![spec.p_min; n],
        ExponentLaw::TwoBlock => {
            let mut v = vec![spec.p_max; n];
            for &leaf in &space.tree_order()[..n.div_ceil(2)] {
                v[leaf] = spec.p_min;
            }
            v
        }
        ExponentLaw::IidUniform => (0..n).map(|_| rng.uniform_in(spec.p_min, spec.p_max)).collect(),
        ExponentLaw::BlockStructured => {
            let level = space.depth().div_ceil(2);
            let mut v = vec![0.0; n];
            for b in 0..space.num_blocks(level) {
                let val = rng.uniform_in(spec.p_min, spec.p_max);
                for &leaf in space.block(level, b) {
                    v[leaf] = val;
                }
            }
            v
        }
    };
    Exponent::new(values)
}

/// The exponent used by a configuration.
pub fn config_exponent(space: &FilteredSpace, config: &TrialConfig) -> Result<Exponent> {
    generate_exponent(space, &config.exponent, &mut Stream::new(config.seed ^ EXPONENT_SALT))
}

/// Martingale with `f_0 = 0`: the terminal draw minus its `F_0` average.
pub fn centered_martingale(space: &FilteredSpace, terminal: &[f64]) -> Result<Martingale> {
    let t = RandomVariable::new(terminal.to_vec());
    t.check_len(space)?;
    let mean = space.cond_expect_values(terminal, 0);
    let centered: Vec<f64> = terminal.iter().zip(&mean).map(|(a, m)| a - m).collect();
    let f = Martingale::from_terminal(space, &RandomVariable::new(centered))?;
    let mut levels = f.levels().to_vec();
    levels[0] = RandomVariable::zeros(space.num_leaves());
    Martingale::new(space, levels)
}

pub fn generate_martingale_on(space: &FilteredSpace, law: MartingaleLaw, rng: &mut Stream) -> Result<Martingale> {
    let terminal: Vec<f64> = (0..space.num_leaves())
        .map(|_| match law {
            MartingaleLaw::Normal => rng.normal(),
            MartingaleLaw::Uniform => rng.uniform_in(-1.0, 1.0),
            MartingaleLaw::TwoPoint => {
                if rng.coin() {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    centered_martingale(space, &terminal)
}

/// Martingale for trial `index` of a configuration.
pub fn generate_trial(config: &TrialConfig, space: &FilteredSpace, index: usize) -> Result<Martingale> {
    generate_martingale_on(space, config.law, &mut Stream::for_trial(config.seed, index as u64))
}

/// First martingale of a configuration.
pub fn generate_martingale(config: &TrialConfig) -> Result<Martingale> {
    config.validate()?;
    generate_trial(config, &config.space.build()?, 0)
}

/// Multiplies each leaf probability by `1 + eps * u` with `u` uniform in
/// `[-1, 1)`, then renormalizes.
pub fn perturb_probabilities(space: &FilteredSpace, eps: f64, seed: u64) -> Result<FilteredSpace> {
    let mut rng = Stream::new(seed);
    let raw: Vec<f64> = space.leaf_probs().iter().map(|p| p * (1.0 + eps * rng.uniform_in(-1.0, 1.0))).collect();
    let total: f64 = raw.iter().sum();
    let mut probs: Vec<f64> = raw.iter().map(|p| p / total).collect();
    // push the rounding residue onto the largest leaf
    let resid = 1.0 - probs.iter().sum::<f64>();
    let big = (0..probs.len()).max_by(|&a, &b| probs[a].total_cmp(&probs[b])).unwrap_or(0);
    probs[big] += resid;
    space.with_probabilities(probs)
}

/// Default configurations: dyadic depths 1 to 6 and a 3-ary tree, each with
/// a constant, a two-block and an iid-uniform exponent in `[1.1, 3]`.
pub fn default_matrix(seed: u64, trials: usize) -> Vec<TrialConfig> {
    let mut spaces: Vec<SpaceSpec> = (1..=6).map(|depth| SpaceSpec::Dyadic { depth }).collect();
    spaces.push(SpaceSpec::Regular { arity: 3, depth: 3 });
    let exps = [
        ExponentSpec::constant(2.0),
        ExponentSpec { law: ExponentLaw::TwoBlock, p_min: 1.1, p_max: 3.0 },
        ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 },
    ];
    let mut out = Vec::new();
    for (i, s) in spaces.iter().enumerate() {
        for (j, e) in exps.iter().enumerate() {
            out.push(
                TrialConfig::new(s.clone(), *e)
                    .with_seed(seed.wrapping_add((i * exps.len() + j) as u64))
                    .with_trials(trials),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub q: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub series: String,
    pub x: f64,
    pub y: f64,
}

/// A reproducible instance attaining a reported ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum WitnessKind {
    WeakType { space: FilteredSpace, exponent: Vec<f64>, martingale: MartingaleFile, lambda: f64 },
    Doob { space: FilteredSpace, exponent: Vec<f64>, martingale: MartingaleFile },
    BlockAverage { space: FilteredSpace, exponent: Vec<f64>, function: Vec<f64>, level: usize, block: usize, leaf: usize },
    /// Ratio `BMO_p / BMO_1` over all stopping times.
    Jn { space: FilteredSpace, exponent: Vec<f64>, martingale: MartingaleFile },
    /// Ratio of the measured tail to the explicit bound `4 exp(-c2 t / bmo1)`.
    ExpJn { space: FilteredSpace, exponent: Vec<f64>, martingale: MartingaleFile, tau: StoppingTime, t: f64, c2: f64, bmo1: f64 },
    NakaiSadasue { n: usize, depth: usize },
    Jensen { space: FilteredSpace, exponent: Vec<f64>, function: Vec<f64>, level: usize, leaf: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Index into the report's `ratios`.
    pub index: usize,
    pub ratio: f64,
    pub instance: WitnessKind,
}

impl Witness {
    /// Recomputes the ratio from the stored instance.
    pub fn replay(&self) -> Result<f64> {
        use crate::bmo::{bmo_norm, shifted_difference, SupMode};
        use crate::martingale::DEFAULT_ENUMERATION_CAP;
        use crate::varlp::{indicator_norm, norm_values};
        match &self.instance {
            WitnessKind::WeakType { space, exponent, martingale, lambda } => {
                let f = martingale.clone().into_martingale(space)?;
                let p = Exponent::new(exponent.clone())?;
                Ok(weak::weak_ratio(&f, &p, *lambda).0)
            }
            WitnessKind::Doob { space, exponent, martingale } => {
                doob_ratio(&martingale.clone().into_martingale(space)?, &Exponent::new(exponent.clone())?)
            }
            WitnessKind::BlockAverage { space, exponent, function, level, block, leaf } => {
                let p = Exponent::new(exponent.clone())?;
                lemma34::pointwise_ratio(space, function, &p, *level, *block, *leaf)
            }
            WitnessKind::Jn { space, exponent, martingale } => {
                let f = martingale.clone().into_martingale(space)?;
                let mode = SupMode::Exhaustive { cap: DEFAULT_ENUMERATION_CAP };
                let bp = bmo_norm(&f, &Exponent::new(exponent.clone())?, mode)?.value;
                let b1 = bmo_norm(&f, &Exponent::constant(space.num_leaves(), 1.0)?, mode)?.value;
                Ok(bp / b1)
            }
            WitnessKind::ExpJn { space, exponent, martingale, tau, t, c2, bmo1 } => {
                let f = martingale.clone().into_martingale(space)?;
                let p = Exponent::new(exponent.clone())?;
                let d = shifted_difference(&f, tau);
                let mask: Vec<bool> = d.iter().zip(tau.finite_mask()).map(|(v, m)| m && *v >= *t).collect();
                let lhs = indicator_norm(space, &mask, &p)? / indicator_norm(space, &tau.finite_mask(), &p)?;
                let _ = norm_values;
                Ok(lhs / (4.0 * (-c2 * t / bmo1).exp()))
            }
            WitnessKind::NakaiSadasue { n, depth } => Ok(nakai_witness_ratio(*n, *depth)),
            WitnessKind::Jensen { space, exponent, function, level, leaf } => {
                let p = Exponent::new(exponent.clone())?;
                jensen::pointwise_ratio(space, function, &p, *level, *leaf)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantReport {
    pub quantity: String,
    pub bound_label: String,
    pub ratios: Vec<f64>,
    /// Per-ratio bound when it varies; empty otherwise.
    pub bounds: Vec<f64>,
    pub max: f64,
    pub min: f64,
    pub mean: f64,
    pub quantiles: Vec<Quantile>,
    pub violations: usize,
    /// Instances excluded as degenerate (e.g. 0/0).
    pub skipped: usize,
    pub witness: Option<Witness>,
    pub points: Vec<Point>,
    pub params: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

impl ConstantReport {
    pub fn new(quantity: &str, bound_label: &str) -> Self {
        ConstantReport {
            quantity: quantity.into(),
            bound_label: bound_label.into(),
            ratios: Vec::new(),
            bounds: Vec::new(),
            max: 0.0,
            min: 0.0,
            mean: 0.0,
            quantiles: Vec::new(),
            violations: 0,
            skipped: 0,
            witness: None,
            points: Vec::new(),
            params: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Fills `max`, `min`, `mean` and the 0.5 / 0.9 / 0.99 quantiles (nearest rank).
    pub fn finalize(&mut self) {
        if self.ratios.is_empty() {
            return;
        }
        let mut sorted = self.ratios.clone();
        sorted.sort_by(f64::total_cmp);
        self.min = sorted[0];
        self.max = *sorted.last().expect("nonempty");
        self.mean = sorted.iter().sum::<f64>() / sorted.len() as f64;
        self.quantiles = [0.5, 0.9, 0.99]
            .iter()
            .map(|&q| {
                let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
                Quantile { q, value: sorted[rank - 1] }
            })
            .collect();
    }

    /// Index of the first largest ratio.
    pub fn argmax(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, r) in self.ratios.iter().enumerate() {
            if best.map_or(true, |b| *r > self.ratios[b]) {
                best = Some(i);
            }
        }
        best
    }

    pub fn point(&mut self, series: &str, x: f64, y: f64) {
        self.points.push(Point { series: series.into(), x, y });
    }

    pub fn param(&mut self, key: &str, value: f64) {
        self.params.insert(key.into(), value);
    }

    /// Merges another report's ratios, bounds and counters into this one.
    pub fn absorb(&mut self, other: ConstantReport) {
        let offset = self.ratios.len();
        let take_witness = match (&self.witness, &other.witness) {
            (_, None) => false,
            (None, Some(_)) => true,
            (Some(a), Some(b)) => b.ratio > a.ratio,
        };
        if take_witness {
            let mut w = other.witness.clone().expect("checked");
            w.index += offset;
            self.witness = Some(w);
        }
        if !other.bounds.is_empty() || !self.bounds.is_empty() {
            self.bounds.resize(offset, f64::NAN);
            self.bounds.extend(other.bounds.iter().copied());
            self.bounds.resize(offset + other.ratios.len(), f64::NAN);
        }
        self.ratios.extend(other.ratios);
        self.violations += other.violations;
        self.skipped += other.skipped;
        self.points.extend(other.points);
        self.notes.extend(other.notes);
    }

    /// Flat CSV rows `index, ratio[, bound]`.
    pub fn ratio_rows(&self) -> (Vec<&'static str>, Vec<Vec<f64>>) {
        if self.bounds.len() == self.ratios.len() && !self.bounds.is_empty() {
            let rows = self.ratios.iter().zip(&self.bounds).enumerate().map(|(i, (r, b))| vec![i as f64, *r, *b]).collect();
            (vec!["index", "ratio", "bound"], rows)
        } else {
            let rows = self.ratios.iter().enumerate().map(|(i, r)| vec![i as f64, *r]).collect();
            (vec!["index", "ratio"], rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_law_centers_exactly() {
        let config = TrialConfig::new(SpaceSpec::Dyadic { depth: 4 }, ExponentSpec::constant(2.0))
            .with_law(MartingaleLaw::TwoPoint)
            .with_seed(3);
        let f = generate_martingale(&config).unwrap();
        assert!(f.level(0).values().iter().all(|&v| v == 0.0));
        assert!(f.terminal().values().iter().all(|v| (v.abs() - 1.0).abs() < 1.0 + 1e-15));
    }

    #[test]
    fn generation_is_deterministic() {
        let config = TrialConfig::new(SpaceSpec::Dyadic { depth: 6 }, ExponentSpec::constant(2.0)).with_seed(42);
        let a = generate_martingale(&config).unwrap();
        let b = generate_martingale(&config).unwrap();
        assert_eq!(a, b);
        let c = generate_martingale(&config.clone().with_seed(43)).unwrap();
        assert_ne!(a, c);
        // passes the martingale invariants
        Martingale::new(a.space(), a.levels().to_vec()).unwrap();
    }

    #[test]
    fn exponent_laws() {
        let s = build_dyadic_space(3).unwrap();
        let mut rng = Stream::new(1);
        let two = generate_exponent(&s, &ExponentSpec { law: ExponentLaw::TwoBlock, p_min: 1.0, p_max: 2.0 }, &mut rng).unwrap();
        assert_eq!(two.values(), &[1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0]);
        let iid = generate_exponent(&s, &ExponentSpec { law: ExponentLaw::IidUniform, p_min: 1.1, p_max: 3.0 }, &mut rng).unwrap();
        assert!(iid.p_minus() >= 1.1 && iid.p_plus() <= 3.0);
        let blk = generate_exponent(&s, &ExponentSpec { law: ExponentLaw::BlockStructured, p_min: 1.1, p_max: 3.0 }, &mut rng).unwrap();
        assert_eq!(blk.values()[0], blk.values()[1]);
    }

    #[test]
    fn perturbation_keeps_normalization() {
        let s = build_dyadic_space(5).unwrap();
        let t = perturb_probabilities(&s, 1e-6, 9).unwrap();
        assert!((t.leaf_probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        assert!(t.leaf_probs().iter().zip(s.leaf_probs()).all(|(a, b)| (a - b).abs() < 3e-6 * b));
    }

    #[test]
    fn report_statistics() {
        let mut r = ConstantReport::new("x", "y");
        r.ratios = (1..=100).map(|i| i as f64).collect();
        r.finalize();
        assert_eq!((r.min, r.max, r.mean), (1.0, 100.0, 50.5));
        assert_eq!(r.quantiles.iter().map(|q| q.value).collect::<Vec<_>>(), vec![50.0, 90.0, 99.0]);
        assert!(r.quantiles.iter().all(|q| q.value <= r.max));
        assert_eq!(r.argmax(), Some(99));
    }

    #[test]
    fn config_validation() {
        let mut c = TrialConfig::new(SpaceSpec::Dyadic { depth: 1 }, ExponentSpec::constant(2.0));
        assert!(c.validate().is_ok());
        c.trials = 0;
        assert!(c.validate().is_err());
        let bad = TrialConfig::new(SpaceSpec::Dyadic { depth: 1 }, ExponentSpec { law: ExponentLaw::IidUniform, p_min: 3.0, p_max: 2.0 });
        assert!(bad.validate().is_err());
    }
}
