//! Recentering of Taylor coefficients.
//!
//! [`apply_t`] maps a `rho`-weighted coefficient sequence at the origin to the
//! `(rho - |y|)`-weighted sequence at `y`:
//!
//! ```text
//! (T v)_nu = (rho - |y|)^nu  sum_{mu >= nu} v_mu  binom(mu, nu)  rho^{-mu}  y^{mu - nu}
//! ```
//!
//! The weight uses `|y|`, the monomial uses signed `y`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::model::{check_point, euclid, ModelKind, TaylorModel};
use crate::weights::{lq_norm_unchecked, WeightSequence};

/// Default per-coordinate cap for truncated `mu`-sums.
pub const DEFAULT_DEGREE_CAP: u32 = 30;

/// Default cap on `sum_mu prod_j (mu_j + 1)` terms touched by [`apply_t`].
pub const DEFAULT_WORK_BUDGET: usize = 50_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightTag {
    /// Values are `rho^nu t_nu` at the origin.
    Origin,
    /// Values are `(rho - |y|)^nu d_nu u(y) / nu!`.
    Recentered,
}

/// Finitely supported `X`-valued sequence indexed by multi-indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedCoeffSeq {
    output_dim: usize,
    tag: WeightTag,
    values: BTreeMap<MultiIndex, Vec<f64>>,
}

impl WeightedCoeffSeq {
    pub fn new(output_dim: usize, tag: WeightTag) -> Self {
        WeightedCoeffSeq {
            output_dim,
            tag,
            values: BTreeMap::new(),
        }
    }

    /// `v_nu = rho^nu t_nu` for all `|nu| <= degree` on the model's coordinates.
    pub fn from_model(model: &TaylorModel, degree: u32) -> Self {
        let mut seq = WeightedCoeffSeq::new(model.output_dim(), WeightTag::Origin);
        for nu in indices_up_to_degree(model.dim(), degree) {
            let w = model.rho().power_of(&nu);
            let t = model.coeff(&nu);
            if t.iter().any(|x| *x != 0.0) {
                seq.insert(nu, t.into_iter().map(|x| x * w).collect());
            }
        }
        seq
    }

    pub fn insert(&mut self, nu: MultiIndex, value: Vec<f64>) {
        assert_eq!(value.len(), self.output_dim, "value dimension");
        self.values.insert(nu, value);
    }

    pub fn get(&self, nu: &MultiIndex) -> Option<&[f64]> {
        self.values.get(nu).map(Vec::as_slice)
    }

    pub fn tag(&self) -> WeightTag {
        self.tag
    }

    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&MultiIndex, &[f64])> {
        self.values.iter().map(|(k, v)| (k, v.as_slice()))
    }

    /// `(sum_nu ||v_nu||^p)^{1/p}`, the maximum for `p = inf`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let norms: Vec<f64> = self.values.values().map(|v| euclid(v)).collect();
        lq_norm_unchecked(&norms, p)
    }
}

/// All multi-indices on `d` coordinates with total degree at most `degree`,
/// in graded order.
pub fn indices_up_to_degree(d: usize, degree: u32) -> Vec<MultiIndex> {
    fn recurse(j: usize, d: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if j == d {
            out.push(MultiIndex::from_dense(cur.clone()));
            return;
        }
        for k in 0..=left {
            cur[j] = k;
            recurse(j + 1, d, left - k, cur, out);
        }
        cur[j] = 0;
    }
    let mut out = Vec::new();
    recurse(0, d, degree, &mut vec![0; d], &mut out);
    out.sort();
    out
}

pub(crate) fn binomial(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (1..=k).fold(1.0, |acc, i| acc * f64::from(n - k + i) / f64::from(i))
}

pub fn apply_t(rho: &WeightSequence, y: &[f64], v: &WeightedCoeffSeq) -> Result<WeightedCoeffSeq> {
    apply_t_with_budget(rho, y, v, DEFAULT_WORK_BUDGET)
}

pub fn apply_t_with_budget(
    rho: &WeightSequence,
    y: &[f64],
    v: &WeightedCoeffSeq,
    budget: usize,
) -> Result<WeightedCoeffSeq> {
    let d = rho.dim();
    if y.len() > d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: y.len(),
        });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::OutsideCube { index, value });
    }
    let mut work = 0usize;
    for (mu, _) in v.iter() {
        if mu.span() > d {
            return Err(Error::invalid(format!(
                "index {mu:?} uses coordinates past d = {d}"
            )));
        }
        let cells = mu
            .support()
            .fold(1usize, |acc, (_, k)| acc.saturating_mul(k as usize + 1));
        work = work.saturating_add(cells);
        if work > budget {
            return Err(Error::BudgetExceeded { budget });
        }
    }

    // Per coordinate: shift ratio y_j / rho_j and kept mass (rho_j - |y_j|) / rho_j.
    let shift: Vec<f64> = (0..d)
        .map(|j| y.get(j).copied().unwrap_or(0.0) / rho.get(j))
        .collect();
    let keep: Vec<f64> = (0..d)
        .map(|j| (rho.get(j) - y.get(j).copied().unwrap_or(0.0).abs()) / rho.get(j))
        .collect();

    let mut out: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
    for (mu, vmu) in v.iter() {
        let top = mu.dense(mu.span());
        let mut nu = vec![0u32; top.len()];
        loop {
            let factor: f64 = top
                .iter()
                .zip(&nu)
                .enumerate()
                .map(|(j, (&m, &n))| {
                    binomial(m, n) * shift[j].powi((m - n) as i32) * keep[j].powi(n as i32)
                })
                .product();
            if factor != 0.0 {
                let entry = out
                    .entry(MultiIndex::from_dense(nu.clone()))
                    .or_insert_with(|| vec![0.0; v.output_dim()]);
                for (e, x) in entry.iter_mut().zip(vmu) {
                    *e += factor * x;
                }
            }
            // odometer over the box 0 <= nu <= mu
            let mut j = 0;
            while j < top.len() {
                if nu[j] < top[j] {
                    nu[j] += 1;
                    break;
                }
                nu[j] = 0;
                j += 1;
            }
            if j == top.len() {
                break;
            }
        }
    }
    Ok(WeightedCoeffSeq {
        output_dim: v.output_dim(),
        tag: WeightTag::Recentered,
        values: out,
    })
}

/// `(prod_j (1 - |y_j| / rho_j)^{-1})^{1 - 1/p}`.
pub fn operator_norm_bound(rho: &WeightSequence, y: &[f64], p: f64) -> Result<f64> {
    if y.len() > rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: y.len(),
        });
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p must be in [1, inf], got {p}")));
    }
    let mut m_inf = 1.0;
    for (j, yj) in y.iter().enumerate() {
        if !(yj.abs() < rho.get(j)) {
            return Err(Error::hypothesis(format!(
                "|y_{j}| < rho_{j} violated ({} >= {})",
                yj.abs(),
                rho.get(j)
            )));
        }
        m_inf /= 1.0 - yj.abs() / rho.get(j);
    }
    Ok(m_inf.powf(1.0 - p.recip()))
}

/// Shifted Taylor coefficients `d_nu u(center) / nu!` with a bound on the
/// truncation error of the `mu`-sum (zero for closed forms).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftedCoeffs {
    pub coeffs: Vec<(MultiIndex, Vec<f64>)>,
    pub tail_bound: f64,
}

/// Closed form for every shipped kind. `_degree_cap` would bound the `mu`-sum
/// for a model without a closed form; see [`shifted_coeffs_series`].
pub fn shifted_coeffs(
    model: &TaylorModel,
    center: &[f64],
    index_set: &[MultiIndex],
    _degree_cap: u32,
) -> Result<ShiftedCoeffs> {
    check_point(center, model.dim())?;
    check_support(model, index_set)?;
    let coeffs = match model.kind() {
        ModelKind::FinitePolynomial => index_set
            .iter()
            .map(|nu| (nu.clone(), polynomial_shift(model, center, nu, None).0))
            .collect(),
        _ => {
            let radii = model.separable_radii().expect("separable");
            index_set
                .iter()
                .map(|nu| {
                    let s: f64 = radii
                        .iter()
                        .zip(center)
                        .enumerate()
                        .map(|(j, (b, c))| b / (b - c).powi(nu.get(j) as i32 + 1))
                        .product();
                    (nu.clone(), model.amplitudes().iter().map(|a| a * s).collect())
                })
                .collect()
        }
    };
    Ok(ShiftedCoeffs {
        coeffs,
        tail_bound: 0.0,
    })
}

/// Shifted coefficients from the `mu`-sum `sum_{mu >= nu} t_mu binom(mu,nu) c^{mu-nu}`
/// truncated at `mu_j <= degree_cap`, with a rigorous bound on the dropped part.
pub fn shifted_coeffs_series(
    model: &TaylorModel,
    center: &[f64],
    index_set: &[MultiIndex],
    degree_cap: u32,
    tail_tolerance: f64,
) -> Result<ShiftedCoeffs> {
    check_point(center, model.dim())?;
    check_support(model, index_set)?;
    let mut coeffs = Vec::with_capacity(index_set.len());
    let mut worst_tail = 0.0f64;
    for nu in index_set {
        let (value, tail) = match model.kind() {
            ModelKind::FinitePolynomial => polynomial_shift(model, center, nu, Some(degree_cap)),
            _ => separable_series(model, center, nu, degree_cap),
        };
        worst_tail = worst_tail.max(tail);
        coeffs.push((nu.clone(), value));
    }
    if worst_tail > tail_tolerance {
        return Err(Error::TailTooLarge {
            tail: worst_tail,
            tolerance: tail_tolerance,
        });
    }
    Ok(ShiftedCoeffs {
        coeffs,
        tail_bound: worst_tail,
    })
}

fn check_support(model: &TaylorModel, index_set: &[MultiIndex]) -> Result<()> {
    match index_set.iter().find(|nu| nu.span() > model.dim()) {
        Some(nu) => Err(Error::invalid(format!(
            "index {nu:?} uses coordinates past d = {}",
            model.dim()
        ))),
        None => Ok(()),
    }
}

/// Exact shift of a finite polynomial; with a cap, terms with some
/// `mu_j > cap` are dropped and their magnitude reported.
fn polynomial_shift(
    model: &TaylorModel,
    center: &[f64],
    nu: &MultiIndex,
    cap: Option<u32>,
) -> (Vec<f64>, f64) {
    let mut out = vec![0.0; model.output_dim()];
    let mut dropped = 0.0;
    for term in model.terms() {
        let Some(diff) = term.index.checked_sub(nu) else {
            continue;
        };
        let factor: f64 = term
            .index
            .support()
            .map(|(j, m)| binomial(m, nu.get(j)))
            .product::<f64>()
            * diff.monomial(center);
        let within = cap.map_or(true, |c| term.index.support().all(|(_, m)| m <= c));
        if within {
            for (o, t) in out.iter_mut().zip(&term.value) {
                *o += factor * t;
            }
        } else {
            dropped += factor.abs() * euclid(&term.value);
        }
    }
    (out, dropped)
}

fn separable_series(
    model: &TaylorModel,
    center: &[f64],
    nu: &MultiIndex,
    cap: u32,
) -> (Vec<f64>, f64) {
    let radii = model.separable_radii().expect("separable");
    let mut signed = 1.0;
    let mut partial_abs = 1.0;
    let mut full_abs = 1.0;
    for (j, (&b, &c)) in radii.iter().zip(center).enumerate() {
        let k = nu.get(j);
        let (s, a) = truncated_factor(b, c, k, cap);
        signed *= s;
        partial_abs *= a;
        full_abs *= b / (b - c.abs()).powi(k as i32 + 1);
    }
    let amp = model.amplitudes();
    let tail = euclid(amp) * (full_abs - partial_abs).max(0.0);
    (amp.iter().map(|a| a * signed).collect(), tail)
}

/// `sum_{m=k}^{cap} b^{-m} binom(m,k) c^{m-k}` with signed and absolute `c`.
fn truncated_factor(b: f64, c: f64, k: u32, cap: u32) -> (f64, f64) {
    if k > cap {
        return (0.0, 0.0);
    }
    let ratio = c / b;
    let mut signed = 0.0;
    let mut abs = 0.0;
    for i in 0..=(cap - k) {
        let term = binomial(k + i, k) * ratio.abs().powi(i as i32);
        abs += term;
        signed += if ratio < 0.0 && i % 2 == 1 { -term } else { term };
    }
    let scale = b.powi(-(k as i32));
    (signed * scale, abs * scale)
}
