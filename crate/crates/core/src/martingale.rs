//! Martingales on atom filtrations, Doob maximal and conditional square
//! functions, and stopping times.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::rng::Stream;
use crate::space::{FilteredSpace, RandomVariable};

/// Stop level meaning "never stops".
pub const INF: u32 = u32::MAX;

/// Default cap on exhaustive stopping-time enumeration.
pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

fn scale_of(values: &[f64]) -> f64 {
    values.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

/// An adapted sequence `f_0, ..., f_N` with the tower property.
#[derive(Debug, Clone, PartialEq)]
pub struct Martingale {
    space: FilteredSpace,
    levels: Vec<RandomVariable>,
}

impl Martingale {
    /// Validates measurability and `E(f_{n+1} | F_n) = f_n` (tolerance
    /// `1e-12 * max(1, max |f|)`).
    pub fn new(space: &FilteredSpace, levels: Vec<RandomVariable>) -> Result<Self> {
        if levels.len() != space.num_levels() {
            return validation(format!(
                "martingale has {} levels but the filtration has {}",
                levels.len(),
                space.num_levels()
            ));
        }
        for f in &levels {
            f.check_len(space)?;
        }
        let scale = levels.iter().map(|f| scale_of(f.values())).fold(1.0, f64::max);
        let tol = 1e-12 * scale;
        for (n, f) in levels.iter().enumerate() {
            for (b, block) in space.blocks(n).enumerate() {
                let v0 = f.values[block[0]];
                if block.iter().any(|&l| (f.values[l] - v0).abs() > tol) {
                    return validation(format!("f_{n} is not constant on level {n} block {b}"));
                }
            }
        }
        for n in 0..levels.len().saturating_sub(1) {
            let cond = space.cond_expect_values(levels[n + 1].values(), n);
            for (b, block) in space.blocks(n).enumerate() {
                let l = block[0];
                if (cond[l] - levels[n].values[l]).abs() > tol {
                    return validation(format!(
                        "tower property fails on level {n} block {b}: E(f_{}|F_{n}) = {} but f_{n} = {}",
                        n + 1,
                        cond[l],
                        levels[n].values[l]
                    ));
                }
            }
        }
        Ok(Martingale { space: space.clone(), levels })
    }

    /// `f_n = E(f_inf | F_n)`.
    pub fn from_terminal(space: &FilteredSpace, terminal: &RandomVariable) -> Result<Self> {
        terminal.check_len(space)?;
        let levels = (0..space.num_levels())
            .map(|n| RandomVariable::new(space.cond_expect_values(terminal.values(), n)))
            .collect();
        Ok(Martingale { space: space.clone(), levels })
    }

    pub fn zero(space: &FilteredSpace) -> Self {
        let levels = vec![RandomVariable::zeros(space.num_leaves()); space.num_levels()];
        Martingale { space: space.clone(), levels }
    }

    #[cfg(test)]
    pub(crate) fn from_levels_unchecked(space: &FilteredSpace, levels: Vec<RandomVariable>) -> Self {
        Martingale { space: space.clone(), levels }
    }

    pub fn space(&self) -> &FilteredSpace {
        &self.space
    }

    pub fn levels(&self) -> &[RandomVariable] {
        &self.levels
    }

    pub fn level(&self, n: usize) -> &RandomVariable {
        &self.levels[n]
    }

    pub fn terminal(&self) -> &RandomVariable {
        self.levels.last().expect("at least one level")
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// `max_n max_w |f_n(w)|`.
    pub fn sup_abs(&self) -> f64 {
        self.levels.iter().map(RandomVariable::sup_abs).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(RandomVariable::is_zero)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Martingale {
            space: self.space.clone(),
            levels: self.levels.iter().map(|f| f.scaled(c)).collect(),
        }
    }

    /// `self - other` level by level.
    pub fn sub(&self, other: &Martingale) -> Self {
        let levels = self
            .levels
            .iter()
            .zip(&other.levels)
            .map(|(a, b)| RandomVariable::new(a.values.iter().zip(&b.values).map(|(x, y)| x - y).collect()))
            .collect();
        Martingale { space: self.space.clone(), levels }
    }

    /// The same martingale on [`FilteredSpace::with_redundant_level`].
    pub fn with_redundant_level(&self) -> Self {
        let mut levels = self.levels.clone();
        levels.push(self.terminal().clone());
        Martingale { space: self.space.with_redundant_level(), levels }
    }
}

/// Block average of `f` over the level-`level` partition.
pub fn cond_expect(space: &FilteredSpace, f: &RandomVariable, level: usize) -> Result<RandomVariable> {
    f.check_len(space)?;
    if level >= space.num_levels() {
        return validation(format!("level {level} out of range 0..={}", space.depth()));
    }
    Ok(RandomVariable::new(space.cond_expect_values(f.values(), level)))
}

/// `M_m f = max_{n <= m} |f_n|`, with `m = N` by default.
pub fn maximal(f: &Martingale, upto: Option<usize>) -> RandomVariable {
    let m = upto.unwrap_or(f.depth()).min(f.depth());
    let mut out = vec![0.0f64; f.space.num_leaves()];
    for lvl in &f.levels[..=m] {
        for (o, v) in out.iter_mut().zip(&lvl.values) {
            *o = o.max(v.abs());
        }
    }
    RandomVariable::new(out)
}

/// `s_m(f)^2` for `m = 0..=N`; `s_0 = 0` since `df_0 = 0`.
pub fn cond_square_profile(f: &Martingale) -> Vec<Vec<f64>> {
    let n_leaves = f.space.num_leaves();
    let mut acc = vec![0.0; n_leaves];
    let mut out = vec![acc.clone()];
    for n in 1..=f.depth() {
        let d2: Vec<f64> = f.levels[n]
            .values
            .iter()
            .zip(&f.levels[n - 1].values)
            .map(|(a, b)| (a - b) * (a - b))
            .collect();
        let cond = f.space.cond_expect_values(&d2, n - 1);
        for (a, c) in acc.iter_mut().zip(cond) {
            *a += c;
        }
        out.push(acc.clone());
    }
    out
}

/// Conditional square function `s_m(f) = (sum_{n <= m} E_{n-1} |df_n|^2)^(1/2)`.
pub fn cond_square(f: &Martingale, upto: Option<usize>) -> RandomVariable {
    let m = upto.unwrap_or(f.depth()).min(f.depth());
    let prof = cond_square_profile(f);
    RandomVariable::new(prof[m].iter().map(|v| v.sqrt()).collect())
}

/// A stopping time: per leaf, a stop level in `0..=N` or [`INF`].
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StoppingTime {
    stop_level: Vec<u32>,
}

impl StoppingTime {
    pub fn values(&self) -> &[u32] {
        &self.stop_level
    }

    pub fn get(&self, leaf: usize) -> u32 {
        self.stop_level[leaf]
    }

    pub fn len(&self) -> usize {
        self.stop_level.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stop_level.is_empty()
    }

    /// `tau = n` everywhere (`n` may be [`INF`]).
    pub fn constant(space: &FilteredSpace, n: u32) -> Self {
        StoppingTime { stop_level: vec![n; space.num_leaves()] }
    }

    pub fn never(space: &FilteredSpace) -> Self {
        Self::constant(space, INF)
    }

    /// Mask of `{tau < inf}`.
    pub fn finite_mask(&self) -> Vec<bool> {
        self.stop_level.iter().map(|&t| t != INF).collect()
    }

    /// Pointwise minimum; again a stopping time.
    pub fn min(&self, other: &StoppingTime) -> StoppingTime {
        StoppingTime {
            stop_level: self.stop_level.iter().zip(&other.stop_level).map(|(a, b)| *a.min(b)).collect(),
        }
    }

    pub(crate) fn from_raw(stop_level: Vec<u32>) -> Self {
        StoppingTime { stop_level }
    }
}

/// Checks that `{tau = n}` is a union of level-`n` blocks for every `n`.
pub fn validate_stopping_time(space: &FilteredSpace, stop_level: Vec<u32>) -> Result<StoppingTime> {
    if stop_level.len() != space.num_leaves() {
        return validation(format!(
            "stopping time has {} values but the space has {} leaves",
            stop_level.len(),
            space.num_leaves()
        ));
    }
    let depth = space.depth() as u32;
    if let Some((l, &t)) = stop_level.iter().enumerate().find(|(_, &t)| t != INF && t > depth) {
        return validation(format!("stop level {t} at leaf {l} exceeds the terminal level {depth}"));
    }
    for n in 0..space.num_levels() {
        for (b, block) in space.blocks(n).enumerate() {
            let hits = block.iter().filter(|&&l| stop_level[l] == n as u32).count();
            if hits != 0 && hits != block.len() {
                return validation(format!(
                    "{{tau = {n}}} splits level {n} block {b}: not a stopping time"
                ));
            }
        }
    }
    Ok(StoppingTime { stop_level })
}

fn check_tau(space: &FilteredSpace, tau: &StoppingTime) -> Result<()> {
    if tau.len() != space.num_leaves() {
        return validation(format!(
            "stopping time has {} values but the space has {} leaves",
            tau.len(),
            space.num_leaves()
        ));
    }
    Ok(())
}

/// Stopped martingale `(f^tau)_n = f_{min(n, tau)}`.
pub fn stop(f: &Martingale, tau: &StoppingTime) -> Result<Martingale> {
    check_tau(&f.space, tau)?;
    let levels = (0..=f.depth())
        .map(|n| {
            RandomVariable::new(
                (0..f.space.num_leaves())
                    .map(|l| {
                        let k = (n as u32).min(tau.get(l)) as usize;
                        f.levels[k].values[l]
                    })
                    .collect(),
            )
        })
        .collect();
    Ok(Martingale { space: f.space.clone(), levels })
}

/// Shifted stop `(f^{tau-1})_n = f_{min(n, tau-1)}` with `f_{-1} = 0`.
///
/// The result is adapted but in general not a martingale, so it is returned
/// as a plain sequence of level values.
pub fn stop_shifted(f: &Martingale, tau: &StoppingTime) -> Result<Vec<RandomVariable>> {
    check_tau(&f.space, tau)?;
    Ok((0..=f.depth())
        .map(|n| {
            RandomVariable::new(
                (0..f.space.num_leaves())
                    .map(|l| match tau.get(l) {
                        0 => 0.0,
                        t => f.levels[(n as u32).min(t - 1) as usize].values[l],
                    })
                    .collect(),
            )
        })
        .collect())
}

fn count_block(space: &FilteredSpace, level: usize, block: usize) -> u64 {
    if level == space.depth() {
        return 2;
    }
    let prod = space
        .children(level, block)
        .fold(1u64, |acc, c| acc.saturating_mul(count_block(space, level + 1, c)));
    prod.saturating_add(1)
}

/// Number of stopping times (saturating at `u64::MAX`).
pub fn count_stopping_times(space: &FilteredSpace) -> u64 {
    (0..space.num_blocks(0)).fold(1u64, |acc, b| acc.saturating_mul(count_block(space, 0, b)))
}

/// Cartesian product of per-part options, concatenated; first part varies slowest.
fn concat_product(parts: Vec<Vec<Vec<u32>>>) -> Vec<Vec<u32>> {
    let mut acc: Vec<Vec<u32>> = vec![Vec::new()];
    for options in parts {
        let mut next = Vec::with_capacity(acc.len() * options.len());
        for prefix in &acc {
            for opt in &options {
                let mut v = prefix.clone();
                v.extend_from_slice(opt);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Stop labels for one block, in tree order: "stop here" first, then the
/// combinations of the children.
fn block_options(space: &FilteredSpace, level: usize, block: usize) -> Vec<Vec<u32>> {
    let size = space.block(level, block).len();
    let mut out = vec![vec![level as u32; size]];
    if level == space.depth() {
        out.push(vec![INF; size]);
    } else {
        let parts = space
            .children(level, block)
            .map(|c| block_options(space, level + 1, c))
            .collect();
        out.extend(concat_product(parts));
    }
    out
}

/// Every stopping time, in a fixed order.
pub fn enumerate_stopping_times(space: &FilteredSpace, cap: u64) -> Result<Vec<StoppingTime>> {
    let count = count_stopping_times(space);
    if count > cap {
        return Err(Error::Resource(format!(
            "{count} stopping times exceed the enumeration cap of {cap}; use sampling mode"
        )));
    }
    let parts = (0..space.num_blocks(0)).map(|b| block_options(space, 0, b)).collect();
    let order = space.tree_order();
    Ok(concat_product(parts)
        .into_iter()
        .map(|labels| {
            let mut stop_level = vec![0; labels.len()];
            for (pos, &leaf) in order.iter().enumerate() {
                stop_level[leaf] = labels[pos];
            }
            StoppingTime { stop_level }
        })
        .collect())
}

fn random_labels(space: &FilteredSpace, level: usize, block: usize, rng: &mut Stream, out: &mut Vec<u32>) {
    let size = space.block(level, block).len();
    if rng.coin() {
        out.extend(std::iter::repeat(level as u32).take(size));
    } else if level == space.depth() {
        out.push(INF);
    } else {
        for c in space.children(level, block) {
            random_labels(space, level + 1, c, rng, out);
        }
    }
}

/// Seeded sample of distinct stopping times.
///
/// Always starts with `tau = 0`, `tau = inf`, then the constants `1..=N`
/// while room remains; the rest come from random stop/continue labelling
/// of the filtration tree (stop with probability 1/2 at each block).
pub fn sample_stopping_times(space: &FilteredSpace, count: usize, seed: u64) -> Vec<StoppingTime> {
    let target = (count.max(2) as u64).min(count_stopping_times(space)) as usize;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(target);
    let mut push = |t: StoppingTime, out: &mut Vec<StoppingTime>| {
        if out.len() < target && seen.insert(t.clone()) {
            out.push(t);
        }
    };
    push(StoppingTime::constant(space, 0), &mut out);
    push(StoppingTime::never(space), &mut out);
    for n in 1..=space.depth() {
        push(StoppingTime::constant(space, n as u32), &mut out);
    }
    let mut rng = Stream::new(seed);
    let order = space.tree_order();
    let max_attempts = 64 * target + 1024;
    let mut attempts = 0;
    while out.len() < target && attempts < max_attempts {
        attempts += 1;
        let mut labels = Vec::with_capacity(space.num_leaves());
        for b in 0..space.num_blocks(0) {
            random_labels(space, 0, b, &mut rng, &mut labels);
        }
        let mut stop_level = vec![0; labels.len()];
        for (pos, &leaf) in order.iter().enumerate() {
            stop_level[leaf] = labels[pos];
        }
        push(StoppingTime { stop_level }, &mut out);
    }
    out
}

/// Serialized stop level: an integer or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StopLevel {
    Finite(u32),
    Inf(InfTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum InfTag {
    #[serde(rename = "inf")]
    Inf,
}

impl From<u32> for StopLevel {
    fn from(t: u32) -> Self {
        if t == INF {
            StopLevel::Inf(InfTag::Inf)
        } else {
            StopLevel::Finite(t)
        }
    }
}

impl From<StopLevel> for u32 {
    fn from(s: StopLevel) -> u32 {
        match s {
            StopLevel::Finite(t) => t,
            StopLevel::Inf(_) => INF,
        }
    }
}

impl Serialize for StoppingTime {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let levels: Vec<StopLevel> = self.stop_level.iter().map(|&t| t.into()).collect();
        levels.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StoppingTime {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let levels: Vec<StopLevel> = Vec::deserialize(d)?;
        Ok(StoppingTime { stop_level: levels.into_iter().map(u32::from).collect() })
    }
}
