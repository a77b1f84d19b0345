//! Tensor-product partition of `[-1, 1]^d` into cells on which the local
//! `kappa`-bound meets a target accuracy.
//!
//! The first `J` directions are cut into symmetric interval ladders; the rest
//! are left whole.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::serde_ext;
use crate::weights::{kappa_of, validate_cell, ExponentProfile, WeightSequence};

/// Guard on intervals per direction; the construction never gets near it.
const MAX_LADDER_STEPS: usize = 100_000_000;

/// Hyperrectangle `{y : |y_j - center_j| <= halfwidth_j}`. Coordinates past
/// `center.len()` have center 0 and half-width 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CellRepr", into = "CellRepr")]
pub struct Cell {
    center: Vec<f64>,
    halfwidths: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CellRepr {
    center: Vec<f64>,
    halfwidths: Vec<f64>,
}

impl TryFrom<CellRepr> for Cell {
    type Error = Error;

    fn try_from(r: CellRepr) -> Result<Self> {
        Cell::new(r.center, r.halfwidths)
    }
}

impl From<Cell> for CellRepr {
    fn from(c: Cell) -> Self {
        CellRepr {
            center: c.center,
            halfwidths: c.halfwidths,
        }
    }
}

impl Cell {
    pub fn new(center: Vec<f64>, halfwidths: Vec<f64>) -> Result<Self> {
        if center.len() != halfwidths.len() {
            return Err(Error::DimensionMismatch {
                expected: center.len(),
                got: halfwidths.len(),
            });
        }
        validate_cell(&center, &halfwidths)?;
        Ok(Cell { center, halfwidths })
    }

    pub fn full_cube() -> Self {
        Cell {
            center: Vec::new(),
            halfwidths: Vec::new(),
        }
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn halfwidths(&self) -> &[f64] {
        &self.halfwidths
    }

    /// Center padded with zeros to `d` coordinates.
    pub fn center_in(&self, d: usize) -> Vec<f64> {
        let mut c = self.center.clone();
        c.resize(d.max(c.len()), 0.0);
        c
    }

    pub fn halfwidth(&self, j: usize) -> f64 {
        self.halfwidths.get(j).copied().unwrap_or(1.0)
    }

    pub fn contains(&self, y: &[f64]) -> bool {
        y.iter().enumerate().all(|(j, &v)| {
            let c = self.center.get(j).copied().unwrap_or(0.0);
            (v - c).abs() <= self.halfwidth(j) + 1e-12
        })
    }

    /// Maps `z` in `[-1,1]^d` to `center + halfwidth * z`.
    pub fn map_from_unit(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .enumerate()
            .map(|(j, &v)| self.center.get(j).copied().unwrap_or(0.0) + self.halfwidth(j) * v)
            .collect()
    }
}

/// Intervals of one direction, stored as `2k+2` increasing breakpoints from
/// `-1` to `1`; interval `i` (0-based, left to right) is
/// `[breakpoints[i], breakpoints[i+1]]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionLadder {
    pub dim: usize,
    pub k: usize,
    pub breakpoints: Vec<f64>,
}

impl DirectionLadder {
    pub fn interval_count(&self) -> usize {
        2 * self.k + 1
    }

    /// `(center, halfwidth)` of interval `i`.
    pub fn interval(&self, i: usize) -> (f64, f64) {
        let (a, b) = (self.breakpoints[i], self.breakpoints[i + 1]);
        (0.5 * (a + b), 0.5 * (b - a))
    }

    pub fn intervals(&self) -> Vec<(f64, f64)> {
        (0..self.interval_count()).map(|i| self.interval(i)).collect()
    }

    /// Interval holding `y`; a shared endpoint goes to the left interval.
    pub fn locate(&self, y: f64) -> usize {
        let pp = self.breakpoints.partition_point(|&b| b < y);
        pp.max(1).min(self.interval_count()) - 1
    }
}

/// Interval ladder for one direction with `rho_j^theta = rho_j_theta`.
///
/// The central interval has half-width `sigma * rho_j_theta`; each next one
/// starts where the previous ended and has half-width
/// `sigma / (1 + sigma) * (rho_j_theta - start)`, the last being clamped to end
/// at 1. The negative side mirrors the positive one.
pub fn build_ladder(rho_j_theta: f64, sigma: f64) -> Result<DirectionLadder> {
    if !(rho_j_theta > 1.0) || !rho_j_theta.is_finite() {
        return Err(Error::invalid(format!(
            "ladder needs rho_j^theta > 1, got {rho_j_theta}"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let lambda0 = sigma * rho_j_theta;
    if lambda0 >= 1.0 {
        return Ok(DirectionLadder {
            dim: 0,
            k: 0,
            breakpoints: vec![-1.0, 1.0],
        });
    }
    let ratio = sigma / (1.0 + sigma);
    let mut ends = vec![lambda0];
    let mut end = lambda0;
    while end < 1.0 {
        if ends.len() > MAX_LADDER_STEPS {
            return Err(Error::BudgetExceeded {
                budget: MAX_LADDER_STEPS,
            });
        }
        let lambda = ratio * (rho_j_theta - end);
        end = (end + 2.0 * lambda).min(1.0);
        ends.push(end);
    }
    let k = ends.len() - 1;
    let breakpoints = ends
        .iter()
        .rev()
        .map(|e| -e)
        .chain(ends.iter().copied())
        .collect();
    Ok(DirectionLadder {
        dim: 0,
        k,
        breakpoints,
    })
}

/// `sigma^{-1} |ln(1 - rho_j^{-theta})| + 2`, the per-direction interval bound.
pub fn ladder_count_bound(rho_j_theta: f64, sigma: f64) -> f64 {
    (-rho_j_theta.recip()).ln_1p().abs() / sigma + 2.0
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum GateOutcome {
    SingleCell { global_bound: f64 },
    PartitionNeeded { global_bound: f64, eta: f64 },
}

/// Compares the global `kappa`-bound `c_total ||kappa^{-1}||_{q_theta} (m+1)^{-r}`
/// with `eps`, where `c_total = C(kappa, q_theta) ||u||_{kappa,1}`.
pub fn feasibility_gate(
    c_total: f64,
    profile: &ExponentProfile,
    kappa: &WeightSequence,
    eps: f64,
    m: u64,
) -> Result<GateOutcome> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(c_total >= 0.0) || !c_total.is_finite() {
        return Err(Error::invalid(format!(
            "constant must be finite and nonnegative, got {c_total}"
        )));
    }
    let qt = profile.q_theta();
    let m_factor = (m as f64 + 1.0).powf(profile.rate());
    let global_bound = c_total * kappa.inverse_lq_norm(qt) / m_factor;
    if global_bound <= eps {
        return Ok(GateOutcome::SingleCell { global_bound });
    }
    let eta = (m_factor * eps / c_total).powf(qt);
    Ok(GateOutcome::PartitionNeeded { global_bound, eta })
}

/// Smallest `J >= 1` with `sum_{j > J} rho_j^{-q} <= eta / 2`.
pub fn compute_j(rho: &WeightSequence, profile: &ExponentProfile, eta: f64) -> Result<usize> {
    if !rho.is_nondecreasing() {
        return Err(Error::hypothesis("rho nondecreasing violated"));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let q = profile.q();
    let d = rho.dim();
    // suffix sums over the active dimensions, then the analytic part past d
    let past_d = rho.tail_sum(d, q);
    let mut tail = past_d;
    let mut tails = vec![0.0; d + 1];
    tails[d] = tail;
    for j in (1..=d).rev() {
        tail += rho.get(j - 1).powf(-q);
        tails[j - 1] = tail;
    }
    match (1..=d).find(|&j| tails[j] <= 0.5 * eta) {
        Some(j) => Ok(j),
        None => Err(Error::Infeasible(format!(
            "tail past d = {d} is {past_d:e} > eta/2 = {:e}",
            0.5 * eta
        ))),
    }
}

/// Partition of the cube; empty `ladders` means the single cell `[-1,1]^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionGrid {
    pub ladders: Vec<DirectionLadder>,
    pub j: usize,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    /// `N = prod_j (2 k_j + 1)` when it fits in `u64`.
    pub cell_count: Option<u64>,
    pub log_cell_count: f64,
    #[serde(with = "serde_ext::extended_real")]
    pub bound_on_n: f64,
    pub log_bound_on_n: f64,
}

impl PartitionGrid {
    pub fn single_cell() -> Self {
        PartitionGrid {
            ladders: Vec::new(),
            j: 0,
            sigma: None,
            eta: None,
            cell_count: Some(1),
            log_cell_count: 0.0,
            bound_on_n: 1.0,
            log_bound_on_n: 0.0,
        }
    }

    pub fn is_single_cell(&self) -> bool {
        self.ladders.is_empty()
    }

    pub fn ks(&self) -> Vec<usize> {
        self.ladders.iter().map(|l| l.k).collect()
    }

    /// Cell with mixed-radix index `linear`, direction 0 varying fastest.
    pub fn cell(&self, linear: u64) -> Cell {
        let mut rest = linear;
        let mut center = Vec::with_capacity(self.ladders.len());
        let mut halfwidths = Vec::with_capacity(self.ladders.len());
        for ladder in &self.ladders {
            let n = ladder.interval_count() as u64;
            let (c, h) = ladder.interval((rest % n) as usize);
            rest /= n;
            center.push(c);
            halfwidths.push(h);
        }
        Cell { center, halfwidths }
    }

    /// All cells in linear order. Fails when `N` does not fit in memory terms.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        let n = self
            .cell_count
            .filter(|&n| n <= usize::MAX as u64)
            .ok_or_else(|| Error::Infeasible(format!(
                "cell count e^{:.1} is too large to enumerate",
                self.log_cell_count
            )))?;
        Ok((0..n).map(|i| self.cell(i)).collect())
    }

    /// Linear index of the cell holding `y`.
    pub fn locate(&self, y: &[f64]) -> Result<u64> {
        if y.len() < self.j {
            return Err(Error::DimensionMismatch {
                expected: self.j,
                got: y.len(),
            });
        }
        if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
            return Err(Error::OutsideCube { index, value });
        }
        let mut linear = 0u64;
        let mut stride = 1u64;
        for (ladder, &v) in self.ladders.iter().zip(y) {
            linear += stride * ladder.locate(v) as u64;
            stride = stride.saturating_mul(ladder.interval_count() as u64);
        }
        Ok(linear)
    }
}

/// Ladders for the first `j_count` directions with
/// `sigma = (eta / (2 J))^{1/q_theta}`.
pub fn build_partition(
    rho: &WeightSequence,
    profile: &ExponentProfile,
    eta: f64,
    j_count: usize,
) -> Result<PartitionGrid> {
    if !rho.is_nondecreasing() {
        return Err(Error::hypothesis("rho nondecreasing violated"));
    }
    if j_count == 0 || j_count > rho.dim() {
        return Err(Error::invalid(format!(
            "J must be in 1..={}, got {j_count}",
            rho.dim()
        )));
    }
    if !(eta > 0.0) {
        return Err(Error::invalid(format!("eta must be positive, got {eta}")));
    }
    let kappa = kappa_of(rho, profile);
    let sigma = (eta / (2.0 * j_count as f64)).powf(profile.q_theta().recip());
    let mut ladders = Vec::with_capacity(j_count);
    let mut log_n = 0.0;
    let mut log_bound = 0.0;
    let mut count: Option<u64> = Some(1);
    for j in 0..j_count {
        let mut ladder = build_ladder(kappa.get(j), sigma)?;
        ladder.dim = j;
        let n = ladder.interval_count();
        log_n += (n as f64).ln();
        count = count.and_then(|c| c.checked_mul(n as u64));
        if ladder.k > 0 {
            log_bound += ladder_count_bound(kappa.get(j), sigma).ln();
        }
        ladders.push(ladder);
    }
    Ok(PartitionGrid {
        ladders,
        j: j_count,
        sigma: Some(sigma),
        eta: Some(eta),
        cell_count: count,
        log_cell_count: log_n,
        bound_on_n: log_bound.exp(),
        log_bound_on_n: log_bound,
    })
}

/// `sum_{j <= J} kappa_tilde_j^{-q_theta}` on a cell.
pub fn cell_budget(kappa: &WeightSequence, cell: &Cell, q_theta: f64) -> f64 {
    cell.center()
        .iter()
        .zip(cell.halfwidths())
        .enumerate()
        .map(|(j, (c, h))| ((kappa.get(j) - c.abs()) / h).powf(-q_theta))
        .sum()
}
