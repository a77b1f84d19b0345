//! Multi-indices, downward-closed index sets, and best-first selection of the
//! largest weights `rho^{-nu}`.
//!
//! A [`MultiIndex`] is a finitely supported sequence of nonnegative integers.
//! Coordinates are 0-based in this API: `get(0)` is the exponent of `y_1`.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::weights::WeightSequence;

/// Default cap on the number of indices touched by [`top_terms`].
pub const DEFAULT_NODE_BUDGET: usize = 10_000_000;

/// Log-weights are compared on a grid of this resolution so the selection
/// order is a total order that treats mathematically equal weights as ties.
const TIE_GRID: f64 = 4_294_967_296.0; // 2^32

/// Finitely supported multi-index. Stored densely with trailing zeros trimmed,
/// so equal sequences have equal representations.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex::from_dense(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(nu: MultiIndex) -> Self {
        nu.0
    }
}

impl MultiIndex {
    pub fn zero() -> Self {
        MultiIndex(Vec::new())
    }

    pub fn from_dense(entries: impl Into<Vec<u32>>) -> Self {
        let mut v = entries.into();
        while v.last() == Some(&0) {
            v.pop();
        }
        MultiIndex(v)
    }

    /// The unit index `e_j`.
    pub fn unit(j: usize) -> Self {
        let mut v = vec![0; j + 1];
        v[j] = 1;
        MultiIndex(v)
    }

    #[inline]
    pub fn get(&self, j: usize) -> u32 {
        self.0.get(j).copied().unwrap_or(0)
    }

    /// One past the last nonzero coordinate.
    #[inline]
    pub fn span(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    /// Total degree `|nu|`.
    pub fn degree(&self) -> u64 {
        self.0.iter().map(|&k| k as u64).sum()
    }

    /// Nonzero entries as `(j, nu_j)`.
    pub fn support(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, &k)| k > 0)
            .map(|(j, &k)| (j, k))
    }

    /// Dense view padded with zeros to length `d`.
    pub fn dense(&self, d: usize) -> Vec<u32> {
        let mut v = self.0.clone();
        v.resize(d.max(self.0.len()), 0);
        v
    }

    pub fn incremented(&self, j: usize) -> Self {
        let mut v = self.0.clone();
        if v.len() <= j {
            v.resize(j + 1, 0);
        }
        v[j] += 1;
        MultiIndex(v)
    }

    pub fn decremented(&self, j: usize) -> Option<Self> {
        if self.get(j) == 0 {
            return None;
        }
        let mut v = self.0.clone();
        v[j] -= 1;
        Some(MultiIndex::from_dense(v))
    }

    /// Coordinatewise `self <= other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.len() <= other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    /// `self - other`, defined when `other <= self`.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.le(self) {
            return None;
        }
        let v: Vec<u32> = self
            .0
            .iter()
            .enumerate()
            .map(|(j, &a)| a - other.get(j))
            .collect();
        Some(MultiIndex::from_dense(v))
    }

    /// Monomial `y^nu`. Coordinates of `y` past its length are taken as 0.
    pub fn monomial(&self, y: &[f64]) -> f64 {
        let mut acc = 1.0;
        for (j, k) in self.support() {
            let yj = y.get(j).copied().unwrap_or(0.0);
            acc *= yj.powi(k as i32);
        }
        acc
    }

    /// `nu! = prod_j nu_j!`.
    pub fn factorial(&self) -> f64 {
        self.0
            .iter()
            .map(|&k| (1..=k).map(f64::from).product::<f64>())
            .product()
    }

    /// `sum_j nu_j * log_w[j]`, i.e. `ln w^nu`.
    pub fn log_weight(&self, log_w: &[f64]) -> f64 {
        self.support().map(|(j, k)| k as f64 * log_w[j]).sum()
    }

    /// Lexicographic comparison of the zero-padded sequences.
    pub fn lex_cmp(&self, other: &MultiIndex) -> Ordering {
        let n = self.0.len().max(other.0.len());
        for j in 0..n {
            match self.get(j).cmp(&other.get(j)) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }
}

/// Graded lexicographic order: total degree first, then [`MultiIndex::lex_cmp`].
impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.lex_cmp(other))
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// True iff every `nu - e_j` (for `nu_j > 0`) is also in `set`.
pub fn is_lower_set(set: &[MultiIndex]) -> bool {
    let members: HashSet<&MultiIndex> = set.iter().collect();
    set.iter().all(|nu| {
        nu.support()
            .all(|(j, _)| members.contains(&nu.decremented(j).expect("nonzero entry")))
    })
}

/// Downward-closed set of multi-indices, kept in selection order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<MultiIndex>", into = "Vec<MultiIndex>")]
pub struct LowerSet {
    members: Vec<MultiIndex>,
}

impl TryFrom<Vec<MultiIndex>> for LowerSet {
    type Error = Error;

    fn try_from(members: Vec<MultiIndex>) -> Result<Self> {
        LowerSet::new(members)
    }
}

impl From<LowerSet> for Vec<MultiIndex> {
    fn from(set: LowerSet) -> Self {
        set.members
    }
}

impl LowerSet {
    pub fn new(members: Vec<MultiIndex>) -> Result<Self> {
        let unique: HashSet<&MultiIndex> = members.iter().collect();
        if unique.len() != members.len() {
            return Err(Error::invalid("lower set contains duplicate indices"));
        }
        if !is_lower_set(&members) {
            return Err(Error::invalid("index set is not downward closed"));
        }
        Ok(LowerSet { members })
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, nu: &MultiIndex) -> bool {
        self.members.iter().any(|m| m == nu)
    }

    /// `Lambda* = Lambda \ {0}`.
    pub fn nonzero(&self) -> impl Iterator<Item = &MultiIndex> {
        self.members.iter().filter(|nu| !nu.is_zero())
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }
}

/// Selection key: larger weight first, then smaller degree, then lexicographic.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Ranked {
    key: i64,
    degree: u64,
    index: MultiIndex,
}

impl Ranked {
    fn new(index: MultiIndex, log_w: &[f64]) -> Self {
        Ranked {
            key: quantize_log_weight(index.log_weight(log_w)),
            degree: index.degree(),
            index,
        }
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .cmp(&other.key)
            .then(self.degree.cmp(&other.degree))
            .then_with(|| self.index.lex_cmp(&other.index))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Rounds `ln rho^nu` onto the tie grid. Monotone, so a child never ranks
/// ahead of its parent.
pub fn quantize_log_weight(log_weight: f64) -> i64 {
    (log_weight * TIE_GRID).round() as i64
}

/// The `count` indices on the first `d` coordinates with the largest
/// `rho^{-nu}`, ties broken by smaller total degree then lexicographic order.
pub fn top_terms(rho: &WeightSequence, count: usize, d: usize) -> Result<LowerSet> {
    top_terms_with_budget(rho, count, d, DEFAULT_NODE_BUDGET)
}

pub fn top_terms_with_budget(
    rho: &WeightSequence,
    count: usize,
    d: usize,
    budget: usize,
) -> Result<LowerSet> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    if d > rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: d,
        });
    }
    let values = &rho.values()[..d];
    if let Some((index, &value)) = values.iter().enumerate().find(|(_, &w)| !(w > 1.0)) {
        return Err(Error::WeightNotDecaying { index, value });
    }
    if count > budget {
        return Err(Error::BudgetExceeded { budget });
    }
    let log_w: Vec<f64> = values.iter().map(|w| w.ln()).collect();

    let mut frontier = BinaryHeap::new();
    let mut visited: HashSet<MultiIndex> = HashSet::new();
    let mut selected = Vec::with_capacity(count);

    visited.insert(MultiIndex::zero());
    frontier.push(std::cmp::Reverse(Ranked::new(MultiIndex::zero(), &log_w)));

    while selected.len() < count {
        // The lattice below the first d coordinates is infinite when d > 0.
        let Some(std::cmp::Reverse(best)) = frontier.pop() else {
            break;
        };
        for j in 0..d {
            let child = best.index.incremented(j);
            if visited.insert(child.clone()) {
                if visited.len() > budget {
                    return Err(Error::BudgetExceeded { budget });
                }
                frontier.push(std::cmp::Reverse(Ranked::new(child, &log_w)));
            }
        }
        selected.push(best.index);
    }
    if selected.len() < count {
        return Err(Error::invalid(format!(
            "only {} indices exist on {d} coordinates",
            selected.len()
        )));
    }
    Ok(LowerSet { members: selected })
}
