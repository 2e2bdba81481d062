//! Finite filtered probability spaces and variable exponents.
//!
//! A [`FilteredSpace`] is a finite set of leaves with positive probabilities
//! and a refining sequence of partitions `level 0, ..., level N`, the last of
//! which is discrete. Internally the leaves are stored in tree (depth-first)
//! order so that every block at every level is a contiguous range of that
//! order; block indices always refer to this canonical order.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, validation, Error, Result};

/// Absolute tolerance on `sum(leaf_probs) == 1`.
pub const PROB_TOLERANCE: f64 = 1e-12;

/// Default upper bound on the depth accepted by [`build_dyadic_space`].
pub const DEFAULT_MAX_DEPTH: usize = 24;

/// Largest leaf count accepted by [`ConditionKMode::BruteForce`].
pub const BRUTE_FORCE_MAX_LEAVES: usize = 20;

/// Serialized form of a space: `{ "leaf_probs": [...], "levels": [[[leaf...]...]...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceFile {
    pub leaf_probs: Vec<f64>,
    pub levels: Vec<Vec<Vec<usize>>>,
}

#[derive(Debug, PartialEq)]
struct SpaceInner {
    leaf_probs: Vec<f64>,
    /// Leaves in depth-first tree order.
    order: Vec<usize>,
    /// Inverse of `order`.
    position: Vec<usize>,
    /// Per level: block `b` covers `order[bounds[b]..bounds[b + 1]]`.
    bounds: Vec<Vec<usize>>,
    /// Per level: block probabilities, each an exact sum of its leaf probabilities.
    block_probs: Vec<Vec<f64>>,
}

/// A finite probability space with an atom filtration.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "SpaceFile", into = "SpaceFile")]
pub struct FilteredSpace {
    inner: Arc<SpaceInner>,
}

impl PartialEq for FilteredSpace {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner == other.inner
    }
}

impl TryFrom<SpaceFile> for FilteredSpace {
    type Error = Error;

    fn try_from(file: SpaceFile) -> Result<Self> {
        validate_filtration(file.levels, file.leaf_probs)
    }
}

impl From<FilteredSpace> for SpaceFile {
    fn from(space: FilteredSpace) -> Self {
        space.to_file()
    }
}

impl FilteredSpace {
    fn from_parts(leaf_probs: Vec<f64>, order: Vec<usize>, bounds: Vec<Vec<usize>>) -> Self {
        let mut position = vec![0; order.len()];
        for (pos, &leaf) in order.iter().enumerate() {
            position[leaf] = pos;
        }
        let block_probs = bounds
            .iter()
            .map(|b| {
                b.windows(2)
                    .map(|w| order[w[0]..w[1]].iter().map(|&leaf| leaf_probs[leaf]).sum())
                    .collect()
            })
            .collect();
        FilteredSpace {
            inner: Arc::new(SpaceInner {
                leaf_probs,
                order,
                position,
                bounds,
                block_probs,
            }),
        }
    }

    pub fn num_leaves(&self) -> usize {
        self.inner.leaf_probs.len()
    }

    /// Number of levels, `N + 1`.
    pub fn num_levels(&self) -> usize {
        self.inner.bounds.len()
    }

    /// Index `N` of the terminal (discrete) level.
    pub fn depth(&self) -> usize {
        self.num_levels() - 1
    }

    pub fn leaf_probs(&self) -> &[f64] {
        &self.inner.leaf_probs
    }

    pub fn prob(&self, leaf: usize) -> f64 {
        self.inner.leaf_probs[leaf]
    }

    /// Leaves in canonical tree order.
    pub fn tree_order(&self) -> &[usize] {
        &self.inner.order
    }

    pub fn num_blocks(&self, level: usize) -> usize {
        self.inner.bounds[level].len() - 1
    }

    /// Leaves of block `block` at `level`, in tree order.
    pub fn block(&self, level: usize, block: usize) -> &[usize] {
        let b = &self.inner.bounds[level];
        &self.inner.order[b[block]..b[block + 1]]
    }

    pub fn block_prob(&self, level: usize, block: usize) -> f64 {
        self.inner.block_probs[level][block]
    }

    /// Iterator over the blocks of a level.
    pub fn blocks(&self, level: usize) -> impl Iterator<Item = &[usize]> + '_ {
        (0..self.num_blocks(level)).map(move |b| self.block(level, b))
    }

    /// Index of the block at `level` containing `leaf`.
    pub fn block_of(&self, level: usize, leaf: usize) -> usize {
        let pos = self.inner.position[leaf];
        self.inner.bounds[level].partition_point(|&start| start <= pos) - 1
    }

    /// Blocks at `level + 1` contained in block `block` at `level`, as an index range.
    pub fn children(&self, level: usize, block: usize) -> std::ops::Range<usize> {
        let b = &self.inner.bounds[level];
        let next = &self.inner.bounds[level + 1];
        let first = next.partition_point(|&s| s < b[block]);
        let last = next.partition_point(|&s| s < b[block + 1]);
        first..last
    }

    /// Probability of a set of leaves given as a membership mask.
    pub fn prob_of_mask(&self, mask: &[bool]) -> f64 {
        self.inner
            .leaf_probs
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(p, _)| p)
            .sum()
    }

    /// Conditional expectation of `values` given level `level`: on each block,
    /// the probability-weighted average of `values` over that block.
    pub fn cond_expect_values(&self, values: &[f64], level: usize) -> Vec<f64> {
        let mut out = vec![0.0; values.len()];
        for b in 0..self.num_blocks(level) {
            let leaves = self.block(level, b);
            let mass: f64 = leaves.iter().map(|&l| self.prob(l) * values[l]).sum();
            let avg = mass / self.block_prob(level, b);
            for &l in leaves {
                out[l] = avg;
            }
        }
        out
    }

    /// Serializable form; blocks listed in canonical order with sorted leaves.
    pub fn to_file(&self) -> SpaceFile {
        let levels = (0..self.num_levels())
            .map(|n| {
                self.blocks(n)
                    .map(|b| {
                        let mut v = b.to_vec();
                        v.sort_unstable();
                        v
                    })
                    .collect()
            })
            .collect();
        SpaceFile {
            leaf_probs: self.inner.leaf_probs.clone(),
            levels,
        }
    }

    /// Same filtration with different leaf probabilities (validated).
    pub fn with_probabilities(&self, leaf_probs: Vec<f64>) -> Result<Self> {
        check_probs(&leaf_probs, self.num_leaves())?;
        Ok(Self::from_parts(
            leaf_probs,
            self.inner.order.clone(),
            self.inner.bounds.clone(),
        ))
    }

    /// Splits every leaf into two halves of equal probability and appends a
    /// new discrete level. Leaf `i` becomes leaves `2i` and `2i + 1`.
    pub fn refine_by_halving(&self) -> Self {
        let probs = self
            .inner
            .leaf_probs
            .iter()
            .flat_map(|&p| [p / 2.0, p / 2.0])
            .collect();
        let order = self.inner.order.iter().flat_map(|&l| [2 * l, 2 * l + 1]).collect();
        let mut bounds: Vec<Vec<usize>> = self
            .inner
            .bounds
            .iter()
            .map(|b| b.iter().map(|&s| 2 * s).collect())
            .collect();
        bounds.push((0..=2 * self.num_leaves()).collect());
        Self::from_parts(probs, order, bounds)
    }

    /// Repeats the terminal level once more (a redundant discrete level).
    pub fn with_redundant_level(&self) -> Self {
        let mut bounds = self.inner.bounds.clone();
        bounds.push(bounds.last().cloned().unwrap_or_default());
        Self::from_parts(
            self.inner.leaf_probs.clone(),
            self.inner.order.clone(),
            bounds,
        )
    }
}

fn check_probs(leaf_probs: &[f64], expected_len: usize) -> Result<()> {
    if leaf_probs.len() != expected_len {
        return validation(format!(
            "expected {} leaf probabilities, got {}",
            expected_len,
            leaf_probs.len()
        ));
    }
    if leaf_probs.is_empty() {
        return validation("a space needs at least one leaf");
    }
    if let Some((i, p)) = leaf_probs
        .iter()
        .enumerate()
        .find(|(_, p)| !(p.is_finite() && **p > 0.0))
    {
        return validation(format!("leaf {i} has non-positive or non-finite probability {p}"));
    }
    let total: f64 = leaf_probs.iter().sum();
    if (total - 1.0).abs() > PROB_TOLERANCE {
        return validation(format!(
            "leaf probabilities sum to {total:.17}, not 1 (tolerance {PROB_TOLERANCE:e})"
        ));
    }
    Ok(())
}

/// Builds the dyadic filtration of depth `depth` on `2^depth` equally likely leaves.
pub fn build_dyadic_space(depth: usize) -> Result<FilteredSpace> {
    build_dyadic_space_with_limit(depth, DEFAULT_MAX_DEPTH)
}

pub fn build_dyadic_space_with_limit(depth: usize, max_depth: usize) -> Result<FilteredSpace> {
    if depth > max_depth {
        return Err(Error::Resource(format!(
            "dyadic depth {depth} exceeds the configured maximum {max_depth}"
        )));
    }
    build_regular_tree(2, depth)
}

/// Regular tree filtration: level `n` has `arity^n` equal blocks of consecutive leaves.
pub fn build_regular_tree(arity: usize, depth: usize) -> Result<FilteredSpace> {
    if arity < 1 {
        return validation("tree arity must be at least 1");
    }
    let n = arity
        .checked_pow(depth as u32)
        .filter(|&n| n <= 1 << 28)
        .ok_or_else(|| Error::Resource(format!("tree {arity}^{depth} has too many leaves")))?;
    let prob = 1.0 / n as f64;
    let bounds = (0..=depth)
        .map(|lvl| {
            let width = n / arity.pow(lvl as u32);
            (0..=arity.pow(lvl as u32)).map(|k| k * width).collect()
        })
        .collect();
    Ok(FilteredSpace::from_parts(vec![prob; n], (0..n).collect(), bounds))
}

/// Validates a filtration given as explicit partitions and returns the space.
pub fn validate_filtration(
    levels: Vec<Vec<Vec<usize>>>,
    leaf_probs: Vec<f64>,
) -> Result<FilteredSpace> {
    let n = leaf_probs.len();
    check_probs(&leaf_probs, n)?;
    if levels.is_empty() {
        return validation("a filtration needs at least one level");
    }

    // assignment[level][leaf] = input block index
    let mut assignment = Vec::with_capacity(levels.len());
    for (lvl, blocks) in levels.iter().enumerate() {
        let mut owner = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return validation(format!("level {lvl} block {b} is empty"));
            }
            for &leaf in block {
                if leaf >= n {
                    return validation(format!(
                        "level {lvl} block {b} names leaf {leaf}, but there are only {n} leaves"
                    ));
                }
                if owner[leaf] != usize::MAX {
                    return validation(format!(
                        "level {lvl}: leaf {leaf} appears in blocks {} and {b}",
                        owner[leaf]
                    ));
                }
                owner[leaf] = b;
            }
        }
        if let Some(leaf) = owner.iter().position(|&o| o == usize::MAX) {
            return validation(format!("level {lvl} does not cover leaf {leaf}"));
        }
        assignment.push(owner);
    }

    for lvl in 1..levels.len() {
        for (b, block) in levels[lvl].iter().enumerate() {
            let parent = assignment[lvl - 1][block[0]];
            if let Some(&leaf) = block.iter().find(|&&l| assignment[lvl - 1][l] != parent) {
                return validation(format!(
                    "level {lvl} block {b} does not refine level {}: leaves {} and {leaf} lie in different parent blocks",
                    lvl - 1,
                    block[0]
                ));
            }
        }
    }

    let last = levels.len() - 1;
    if let Some((b, block)) = levels[last].iter().enumerate().find(|(_, blk)| blk.len() != 1) {
        return validation(format!(
            "terminal level {last} is not discrete: block {b} has {} leaves",
            block.len()
        ));
    }

    // Children of each block, ordered by smallest leaf.
    let min_leaf = |blk: &Vec<usize>| *blk.iter().min().expect("nonempty");
    let mut children: Vec<Vec<Vec<usize>>> = Vec::with_capacity(last);
    for lvl in 0..last {
        let mut ch = vec![Vec::new(); levels[lvl].len()];
        for (b, block) in levels[lvl + 1].iter().enumerate() {
            ch[assignment[lvl][block[0]]].push(b);
        }
        for list in &mut ch {
            list.sort_by_key(|&b| min_leaf(&levels[lvl + 1][b]));
        }
        children.push(ch);
    }

    let mut roots: Vec<usize> = (0..levels[0].len()).collect();
    roots.sort_by_key(|&b| min_leaf(&levels[0][b]));

    let mut order = Vec::with_capacity(n);
    let mut bounds: Vec<Vec<usize>> = vec![Vec::new(); levels.len()];
    // Explicit DFS stack of (level, block).
    let mut stack: Vec<(usize, usize)> = roots.into_iter().rev().map(|b| (0, b)).collect();
    while let Some((lvl, b)) = stack.pop() {
        bounds[lvl].push(order.len());
        if lvl == last {
            order.push(levels[lvl][b][0]);
        } else {
            for &c in children[lvl][b].iter().rev() {
                stack.push((lvl + 1, c));
            }
        }
    }
    for b in &mut bounds {
        b.push(n);
    }
    Ok(FilteredSpace::from_parts(leaf_probs, order, bounds))
}

/// A variable exponent: one positive value per leaf.
///
/// Ordinary exponents are finite. Exponents built with [`Exponent::mixed`]
/// may take the value `+inf`; they are only accepted by the mixed-modular
/// code paths.
#[derive(Debug, Clone, PartialEq)]
pub struct Exponent {
    values: Vec<f64>,
    p_minus: f64,
    p_plus: f64,
    mixed: bool,
}

impl Exponent {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v > 0.0)) {
            return validation(format!("exponent value {v} at leaf {i} is not a finite positive number"));
        }
        Self::build(values, false)
    }

    /// Exponent allowed to take `+inf` values (mixed modular mode).
    pub fn mixed(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| v.is_nan() || **v <= 0.0) {
            return validation(format!("exponent value {v} at leaf {i} is not positive"));
        }
        Self::build(values, true)
    }

    pub fn constant(num_leaves: usize, p: f64) -> Result<Self> {
        Self::new(vec![p; num_leaves])
    }

    fn build(values: Vec<f64>, mixed: bool) -> Result<Self> {
        if values.is_empty() {
            return validation("exponent has no values");
        }
        let p_minus = values.iter().copied().fold(f64::INFINITY, f64::min);
        let p_plus = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Exponent { values, p_minus, p_plus, mixed })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn p_minus(&self) -> f64 {
        self.p_minus
    }

    pub fn p_plus(&self) -> f64 {
        self.p_plus
    }

    pub fn is_mixed(&self) -> bool {
        self.mixed
    }

    /// `true` when some value is infinite.
    pub fn has_infinite(&self) -> bool {
        self.p_plus.is_infinite()
    }

    pub fn p_minus_on(&self, leaves: &[usize]) -> f64 {
        leaves.iter().map(|&l| self.values[l]).fold(f64::INFINITY, f64::min)
    }

    pub fn p_plus_on(&self, leaves: &[usize]) -> f64 {
        leaves.iter().map(|&l| self.values[l]).fold(f64::NEG_INFINITY, f64::max)
    }

    /// The common value if the exponent is constant and finite.
    pub fn constant_value(&self) -> Option<f64> {
        (self.p_minus == self.p_plus && self.p_plus.is_finite()).then_some(self.p_minus)
    }

    /// Pointwise `r * p`.
    pub fn scaled(&self, r: f64) -> Result<Self> {
        let v = self.values.iter().map(|p| r * p).collect();
        if self.mixed {
            Self::mixed(v)
        } else {
            Self::new(v)
        }
    }

    /// Values repeated for each half of a leaf split by [`FilteredSpace::refine_by_halving`].
    pub fn refined_by_halving(&self) -> Self {
        let v = self.values.iter().flat_map(|&p| [p, p]).collect();
        Self::build(v, self.mixed).expect("nonempty")
    }

    pub(crate) fn check_len(&self, space: &FilteredSpace) -> Result<()> {
        if self.len() != space.num_leaves() {
            return validation(format!(
                "exponent has {} values but the space has {} leaves",
                self.len(),
                space.num_leaves()
            ));
        }
        Ok(())
    }

    pub(crate) fn require_finite(&self, what: &str) -> Result<()> {
        if self.has_infinite() {
            return domain(format!("{what} requires a finite exponent"));
        }
        Ok(())
    }

    pub fn sum(&self, q: &Exponent) -> Result<Exponent> {
        exponent_algebra(ExponentOp::Sum, self, Some(q))
    }

    pub fn reciprocal(&self) -> Result<Exponent> {
        exponent_algebra(ExponentOp::Reciprocal, self, None)
    }

    pub fn conjugate(&self) -> Result<Exponent> {
        exponent_algebra(ExponentOp::Conjugate, self, None)
    }

    pub fn harmonic_sum(&self, q: &Exponent) -> Result<Exponent> {
        exponent_algebra(ExponentOp::HarmonicSum, self, Some(q))
    }
}

/// A real-valued function on the leaves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomVariable {
    pub values: Vec<f64>,
}

impl RandomVariable {
    pub fn new(values: Vec<f64>) -> Self {
        RandomVariable { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(vec![0.0; n])
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::new(vec![c; n])
    }

    /// Indicator of a leaf mask.
    pub fn indicator(mask: &[bool]) -> Self {
        Self::new(mask.iter().map(|&m| if m { 1.0 } else { 0.0 }).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sup_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.values.iter().map(|v| c * v).collect())
    }

    pub(crate) fn check_len(&self, space: &FilteredSpace) -> Result<()> {
        if self.len() != space.num_leaves() {
            return validation(format!(
                "function has {} values but the space has {} leaves",
                self.len(),
                space.num_leaves()
            ));
        }
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return validation(format!("function value at leaf {i} is not finite"));
        }
        Ok(())
    }
}

/// How the supremum in the condition-K constant is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConditionKMode {
    /// Maximum over leaf pairs; equals the supremum over all sets.
    ExactPairwise,
    /// Enumeration of every nonempty leaf subset.
    BruteForce,
    /// Supremum restricted to filtration blocks.
    BlockRestricted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionK {
    pub k: f64,
    /// Leaves of a set attaining the supremum.
    pub witness: Vec<usize>,
}

/// Smallest `K` with `P(A)^(p_-(A) - p_+(A)) <= K` for every set `A` in the
/// chosen family.
///
/// Exact-pairwise mode: for any set `A`, let `i` minimize and `j` maximize `p`
/// over `A`. Then `{i, j}` has the same exponent spread `s = p_j - p_i` and
/// `P({i, j}) <= P(A)`, so `P({i, j})^(-s) >= P(A)^(-s)` because `t -> t^(-s)`
/// is nonincreasing. The supremum over all sets is therefore attained on a
/// pair (or on a singleton, which contributes 1).
pub fn condition_k(space: &FilteredSpace, p: &Exponent, mode: ConditionKMode) -> Result<ConditionK> {
    p.check_len(space)?;
    p.require_finite("condition K")?;
    let probs = space.leaf_probs();
    let v = p.values();
    let n = probs.len();
    let mut best = ConditionK { k: 1.0, witness: vec![0] };
    match mode {
        ConditionKMode::ExactPairwise => {
            for i in 0..n {
                for j in (i + 1)..n {
                    let spread = (v[i] - v[j]).abs();
                    if spread == 0.0 {
                        continue;
                    }
                    let val = (probs[i] + probs[j]).powf(-spread);
                    if val > best.k {
                        best = ConditionK { k: val, witness: vec![i, j] };
                    }
                }
            }
        }
        ConditionKMode::BruteForce => {
            if n > BRUTE_FORCE_MAX_LEAVES {
                return Err(Error::Resource(format!(
                    "brute-force condition K over {n} leaves exceeds the limit of {BRUTE_FORCE_MAX_LEAVES}"
                )));
            }
            for mask in 1u32..(1u32 << n) {
                let mut prob = 0.0;
                let mut lo = f64::INFINITY;
                let mut hi = f64::NEG_INFINITY;
                for i in 0..n {
                    if mask & (1 << i) != 0 {
                        prob += probs[i];
                        lo = lo.min(v[i]);
                        hi = hi.max(v[i]);
                    }
                }
                let val = if hi == lo { 1.0 } else { prob.powf(lo - hi) };
                if val > best.k {
                    best = ConditionK {
                        k: val,
                        witness: (0..n).filter(|i| mask & (1 << i) != 0).collect(),
                    };
                }
            }
        }
        ConditionKMode::BlockRestricted => {
            for lvl in 0..space.num_levels() {
                for b in 0..space.num_blocks(lvl) {
                    let leaves = space.block(lvl, b);
                    let spread = p.p_plus_on(leaves) - p.p_minus_on(leaves);
                    if spread == 0.0 {
                        continue;
                    }
                    let val = space.block_prob(lvl, b).powf(-spread);
                    if val > best.k {
                        let mut w = leaves.to_vec();
                        w.sort_unstable();
                        best = ConditionK { k: val, witness: w };
                    }
                }
            }
        }
    }
    Ok(best)
}

/// Minimal `C` with `1/p <= C * E(1/p | F_n)` at every level and leaf.
pub fn aoyama_c(space: &FilteredSpace, p: &Exponent) -> Result<f64> {
    p.check_len(space)?;
    p.require_finite("the Aoyama constant")?;
    let inv: Vec<f64> = p.values().iter().map(|v| 1.0 / v).collect();
    let mut c: f64 = 1.0;
    for lvl in 0..space.num_levels() {
        let cond = space.cond_expect_values(&inv, lvl);
        for (a, b) in inv.iter().zip(&cond) {
            c = c.max(a / b);
        }
    }
    Ok(c)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExponentOp {
    /// `p + q`
    Sum,
    /// `1 / p`
    Reciprocal,
    /// `p' = p / (p - 1)`, requires `p_- > 1`
    Conjugate,
    /// `r` with `1/r = 1/p + 1/q`
    HarmonicSum,
}

/// Pointwise exponent arithmetic.
pub fn exponent_algebra(op: ExponentOp, p: &Exponent, q: Option<&Exponent>) -> Result<Exponent> {
    p.require_finite("exponent algebra")?;
    let other = |name: &str| -> Result<&Exponent> {
        let q = q.ok_or_else(|| Error::Domain(format!("{name} needs a second exponent")))?;
        if q.len() != p.len() {
            return validation(format!("exponent lengths differ: {} vs {}", p.len(), q.len()));
        }
        q.require_finite("exponent algebra")?;
        Ok(q)
    };
    let values: Vec<f64> = match op {
        ExponentOp::Sum => {
            let q = other("sum")?;
            p.values().iter().zip(q.values()).map(|(a, b)| a + b).collect()
        }
        ExponentOp::Reciprocal => p.values().iter().map(|a| 1.0 / a).collect(),
        ExponentOp::Conjugate => {
            if p.p_minus() <= 1.0 {
                return domain(format!("conjugate exponent needs p_- > 1, got {}", p.p_minus()));
            }
            p.values().iter().map(|a| a / (a - 1.0)).collect()
        }
        ExponentOp::HarmonicSum => {
            let q = other("harmonic sum")?;
            p.values().iter().zip(q.values()).map(|(a, b)| a * b / (a + b)).collect()
        }
    };
    Exponent::new(values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_levels(levels: Vec<Vec<Vec<usize>>>, n: usize) -> Result<FilteredSpace> {
        validate_filtration(levels, vec![1.0 / n as f64; n])
    }

    #[test]
    fn dyadic_depth_zero_is_one_leaf() {
        let s = build_dyadic_space(0).unwrap();
        assert_eq!(s.num_leaves(), 1);
        assert_eq!(s.num_levels(), 1);
        assert_eq!(s.prob(0), 1.0);
        assert_eq!(s.block(0, 0), &[0]);
    }

    #[test]
    fn dyadic_depth_two_blocks() {
        let s = build_dyadic_space(2).unwrap();
        assert_eq!(s.leaf_probs(), &[0.25; 4]);
        assert_eq!(s.to_file().levels[1], vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(s.num_blocks(2), 4);
    }

    #[test]
    fn dyadic_depth_three_block_of_leaf_five() {
        let s = build_dyadic_space(3).unwrap();
        let b = s.block_of(2, 5);
        assert_eq!(s.block(2, b), &[4, 5]);
    }

    #[test]
    fn dyadic_depth_limit() {
        assert!(matches!(build_dyadic_space(25), Err(Error::Resource(_))));
        assert!(matches!(build_dyadic_space_with_limit(5, 4), Err(Error::Resource(_))));
    }

    #[test]
    fn validate_accepts_dyadic_levels() {
        let file = build_dyadic_space(2).unwrap().to_file();
        let s = validate_filtration(file.levels.clone(), file.leaf_probs.clone()).unwrap();
        assert_eq!(s, build_dyadic_space(2).unwrap());
    }

    #[test]
    fn validate_rejects_crossing_blocks() {
        let err = uniform_levels(
            vec![
                vec![vec![0, 1], vec![2, 3]],
                vec![vec![0, 2], vec![1, 3]],
                vec![vec![0], vec![1], vec![2], vec![3]],
            ],
            4,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("level 1 block 0 does not refine"), "{msg}");
    }

    #[test]
    fn validate_rejects_unnormalized() {
        let err = validate_filtration(vec![vec![vec![0], vec![1]]], vec![0.5, 0.6]).unwrap_err();
        assert!(err.to_string().contains("sum to"));
    }

    #[test]
    fn validate_rejects_bad_partitions() {
        assert!(uniform_levels(vec![vec![vec![0], vec![0]]], 2).is_err());
        assert!(uniform_levels(vec![vec![vec![0]]], 2).is_err());
        assert!(uniform_levels(vec![vec![vec![0, 1]]], 2).is_err());
        assert!(uniform_levels(vec![vec![vec![0], vec![5]]], 2).is_err());
        assert!(uniform_levels(vec![vec![vec![0], vec![], vec![1]]], 2).is_err());
        assert!(validate_filtration(vec![vec![vec![0], vec![1]]], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn canonical_order_handles_interleaved_blocks() {
        let s = uniform_levels(
            vec![
                vec![vec![1, 3], vec![0, 2]],
                vec![vec![3], vec![2], vec![1], vec![0]],
            ],
            4,
        )
        .unwrap();
        assert_eq!(s.tree_order(), &[0, 2, 1, 3]);
        assert_eq!(s.block(0, 0), &[0, 2]);
        assert_eq!(s.block_of(0, 3), 1);
        assert_eq!(s.children(0, 1), 2..4);
        let again: FilteredSpace = s.to_file().try_into().unwrap();
        assert_eq!(again, s);
    }

    #[test]
    fn refinement_halves_leaves() {
        let s = build_dyadic_space(1).unwrap().refine_by_halving();
        assert_eq!(s.num_leaves(), 4);
        assert_eq!(s.num_levels(), 3);
        assert_eq!(s, build_dyadic_space(2).unwrap());
    }

    #[test]
    fn condition_k_constant_is_one() {
        let s = build_dyadic_space(3).unwrap();
        let p = Exponent::constant(8, 1.7).unwrap();
        for mode in [ConditionKMode::ExactPairwise, ConditionKMode::BruteForce, ConditionKMode::BlockRestricted] {
            assert_eq!(condition_k(&s, &p, mode).unwrap().k, 1.0);
        }
    }

    #[test]
    fn condition_k_two_leaves() {
        let s = build_dyadic_space(1).unwrap();
        let p = Exponent::new(vec![1.0, 2.0]).unwrap();
        assert_eq!(condition_k(&s, &p, ConditionKMode::ExactPairwise).unwrap().k, 1.0);
        assert_eq!(condition_k(&s, &p, ConditionKMode::BruteForce).unwrap().k, 1.0);
    }

    #[test]
    fn condition_k_four_leaves_witness() {
        let s = build_dyadic_space(2).unwrap();
        let p = Exponent::new(vec![1.0, 1.0, 2.0, 2.0]).unwrap();
        let exact = condition_k(&s, &p, ConditionKMode::ExactPairwise).unwrap();
        let brute = condition_k(&s, &p, ConditionKMode::BruteForce).unwrap();
        assert_eq!(exact.k, 2.0);
        assert_eq!(brute.k, 2.0);
        assert_eq!(exact.witness, vec![0, 2]);
        assert_eq!(brute.witness.len(), 2);
        // blocks {0,1} and {2,3} are constant; only Omega has spread
        let blocks = condition_k(&s, &p, ConditionKMode::BlockRestricted).unwrap();
        assert_eq!(blocks.k, 1.0);
    }

    #[test]
    fn brute_force_limit() {
        let s = build_dyadic_space(5).unwrap();
        let p = Exponent::constant(32, 2.0).unwrap();
        assert!(matches!(
            condition_k(&s, &p, ConditionKMode::BruteForce),
            Err(Error::Resource(_))
        ));
    }

    #[test]
    fn aoyama_examples() {
        let s = build_dyadic_space(1).unwrap();
        assert_eq!(aoyama_c(&s, &Exponent::constant(2, 3.0).unwrap()).unwrap(), 1.0);
        let c = aoyama_c(&s, &Exponent::new(vec![1.0, 2.0]).unwrap()).unwrap();
        assert!((c - 4.0 / 3.0).abs() < 1e-15);
        // measurable at level 1 of a depth-2 tree, but not at level 0
        let s2 = build_dyadic_space(2).unwrap();
        let p = Exponent::new(vec![1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(aoyama_c(&s2, &p).unwrap(), 1.0);
    }

    #[test]
    fn exponent_algebra_examples() {
        let two = Exponent::constant(3, 2.0).unwrap();
        assert_eq!(two.conjugate().unwrap().values(), &[2.0, 2.0, 2.0]);
        let p = Exponent::new(vec![1.5, 3.0]).unwrap();
        let c = p.conjugate().unwrap();
        assert_eq!(c.values(), &[3.0, 1.5]);
        for (a, b) in p.values().iter().zip(c.values()) {
            assert_eq!(1.0 / a + 1.0 / b, 1.0);
        }
        let h = Exponent::constant(2, 2.0).unwrap();
        assert_eq!(h.harmonic_sum(&h).unwrap().values(), &[1.0, 1.0]);
        assert_eq!(h.sum(&h).unwrap().values(), &[4.0, 4.0]);
        assert_eq!(h.reciprocal().unwrap().values(), &[0.5, 0.5]);
    }

    #[test]
    fn conjugate_needs_p_above_one() {
        let p = Exponent::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(p.conjugate(), Err(Error::Domain(_))));
        assert!(matches!(
            exponent_algebra(ExponentOp::Sum, &p, None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn exponent_rejects_bad_values() {
        assert!(Exponent::new(vec![1.0, 0.0]).is_err());
        assert!(Exponent::new(vec![f64::INFINITY]).is_err());
        assert!(Exponent::mixed(vec![f64::INFINITY, 2.0]).is_ok());
        assert!(Exponent::mixed(vec![f64::NAN]).is_err());
        assert!(Exponent::new(vec![]).is_err());
    }
}
