//! A priori error bounds for best-`(m+1)`-term Taylor polynomials.
//!
//! Every bound is a product of five factors kept in [`BoundParts`], so a
//! regression can be traced to a single constant.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::TaylorModel;
use crate::partition::Cell;
use crate::weights::{
    c_constant, f_star_lq_norm, kappa_of, recentered_weights, ExponentProfile, WeightSequence,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `C(rho,q) ||u||_{rho,p} ||rho^{-1}||_q (m+1)^{-r}`.
    GlobalRho,
    /// `||u||_{rho,p} ||(rho^{-nu})_{nu != 0}||_q (m+1)^{-r}`.
    GlobalRhoSharp,
    /// Cell bound with `rho_tilde` and the operator-norm product factor.
    LocalV1,
    /// Cell bound with `kappa_tilde` and `||u||_{kappa,1}`.
    LocalV2,
    /// [`BoundKind::LocalV2`] on the full cube.
    GlobalKappa,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundParts {
    pub class_norm_factor: f64,
    pub c_constant: f64,
    pub weight_norm: f64,
    pub product_factor: f64,
    pub m_power: f64,
}

impl BoundParts {
    pub fn product(&self) -> f64 {
        self.class_norm_factor * self.c_constant * self.weight_norm * self.product_factor * self.m_power
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub which: BoundKind,
    pub value: f64,
    pub rate: f64,
    pub parts: BoundParts,
}

impl BoundReport {
    fn assemble(which: BoundKind, profile: &ExponentProfile, parts: BoundParts) -> Self {
        BoundReport {
            which,
            value: parts.product(),
            rate: profile.rate(),
            parts,
        }
    }
}

fn m_power(profile: &ExponentProfile, m: u64) -> f64 {
    (m as f64 + 1.0).powf(-profile.rate())
}

fn check_norm(norm: f64) -> Result<()> {
    if norm >= 0.0 && norm.is_finite() {
        Ok(())
    } else {
        Err(Error::hypothesis(format!(
            "finite class norm violated (got {norm})"
        )))
    }
}

pub fn global_bound(
    model_norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    m: u64,
) -> Result<BoundReport> {
    check_norm(model_norm)?;
    let parts = BoundParts {
        class_norm_factor: model_norm,
        c_constant: c_constant(rho, profile.q())?,
        weight_norm: rho.inverse_lq_norm(profile.q()),
        product_factor: 1.0,
        m_power: m_power(profile, m),
    };
    Ok(BoundReport::assemble(BoundKind::GlobalRho, profile, parts))
}

/// Uses the upper bracket of `||(rho^{-nu})_{nu != 0}||_q`, enumerated up to
/// `degree` with a certified tail.
pub fn global_bound_sharp(
    model_norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    m: u64,
    degree: u32,
) -> Result<BoundReport> {
    check_norm(model_norm)?;
    let parts = BoundParts {
        class_norm_factor: model_norm,
        c_constant: 1.0,
        weight_norm: f_star_lq_norm(rho, profile.q(), degree)?.upper,
        product_factor: 1.0,
        m_power: m_power(profile, m),
    };
    Ok(BoundReport::assemble(BoundKind::GlobalRhoSharp, profile, parts))
}

/// `(prod_j (1 - |c_j|/rho_j)^{-1})^{1 - 1/p}` for a cell center.
pub fn product_factor(rho: &WeightSequence, center: &[f64], p: f64) -> f64 {
    let inv: f64 = center
        .iter()
        .enumerate()
        .map(|(j, c)| 1.0 / (1.0 - c.abs() / rho.get(j)))
        .product();
    inv.powf(1.0 - p.recip())
}

pub fn local_bound_v1(
    model_norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    cell: &Cell,
    m: u64,
) -> Result<BoundReport> {
    check_norm(model_norm)?;
    if !(profile.q() <= 1.0) {
        return Err(Error::hypothesis(format!(
            "q <= 1 violated (q = {})",
            profile.q()
        )));
    }
    let rho_tilde = recentered_weights(rho, cell.center(), cell.halfwidths())?;
    let parts = BoundParts {
        class_norm_factor: model_norm,
        c_constant: c_constant(rho, profile.q())?,
        weight_norm: rho_tilde.inverse_lq_norm(profile.q()),
        product_factor: product_factor(rho, cell.center(), profile.p()),
        m_power: m_power(profile, m),
    };
    Ok(BoundReport::assemble(BoundKind::LocalV1, profile, parts))
}

pub fn local_bound_v2(
    model_kappa1_norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    cell: &Cell,
    m: u64,
) -> Result<BoundReport> {
    local_v2(BoundKind::LocalV2, model_kappa1_norm, rho, profile, cell, m)
}

pub fn global_kappa_bound(
    model_kappa1_norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    m: u64,
) -> Result<BoundReport> {
    local_v2(
        BoundKind::GlobalKappa,
        model_kappa1_norm,
        rho,
        profile,
        &Cell::full_cube(),
        m,
    )
}

fn local_v2(
    which: BoundKind,
    norm: f64,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    cell: &Cell,
    m: u64,
) -> Result<BoundReport> {
    check_norm(norm)?;
    let kappa = kappa_of(rho, profile);
    let kappa_tilde = recentered_weights(&kappa, cell.center(), cell.halfwidths())?;
    let parts = BoundParts {
        class_norm_factor: norm,
        c_constant: c_constant(&kappa, profile.q_theta())?,
        weight_norm: kappa_tilde.inverse_lq_norm(profile.q_theta()),
        product_factor: 1.0,
        m_power: m_power(profile, m),
    };
    Ok(BoundReport::assemble(which, profile, parts))
}

/// Where `||rho^{-1}||_q` sits relative to one, which decides whether the
/// `kappa` weight norm is the smaller one.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Crossover {
    Below,
    Equal,
    Above,
}

/// Term-by-term comparison of the `rho`- and `kappa`-based global bounds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundComparison {
    pub m_power: f64,
    pub rho_weight_norm: f64,
    pub kappa_weight_norm: f64,
    pub crossover: Crossover,
    pub c_rho: f64,
    pub c_kappa: f64,
    /// `C(rho,q)^theta`, equal to `c_kappa`.
    pub c_rho_pow_theta: f64,
    pub class_norm_rho_p: f64,
    pub class_norm_kappa_1: f64,
    /// `K = (prod_j (1 - rho_j^{-q})^{-1})^{1/p'}`, with `||u||_{kappa,1} <= K ||u||_{rho,p}`.
    pub k_factor: f64,
    pub global_rho: BoundReport,
    pub global_kappa: BoundReport,
}

pub fn embedding_constant(rho: &WeightSequence, profile: &ExponentProfile) -> f64 {
    let prod: f64 = rho
        .values()
        .iter()
        .map(|w| 1.0 / (1.0 - w.powf(-profile.q())))
        .product();
    prod.powf(profile.p_conjugate().recip())
}

pub fn compare_bounds(
    model: &TaylorModel,
    rho: &WeightSequence,
    profile: &ExponentProfile,
    m: u64,
) -> Result<BoundComparison> {
    if !(profile.p() > 1.0) {
        return Err(Error::hypothesis(format!(
            "p > 1 violated (p = {}); both bounds coincide at p = 1",
            profile.p()
        )));
    }
    let kappa = kappa_of(rho, profile);
    let norm_rho = model.class_norm(rho, profile.p())?.upper;
    let norm_kappa = model.class_norm(&kappa, 1.0)?.upper;
    let global_rho = global_bound(norm_rho, rho, profile, m)?;
    let global_kappa = global_kappa_bound(norm_kappa, rho, profile, m)?;
    let rho_weight_norm = global_rho.parts.weight_norm;
    let crossover = match rho_weight_norm.partial_cmp(&1.0) {
        Some(std::cmp::Ordering::Less) => Crossover::Below,
        Some(std::cmp::Ordering::Equal) => Crossover::Equal,
        _ => Crossover::Above,
    };
    Ok(BoundComparison {
        m_power: global_rho.parts.m_power,
        rho_weight_norm,
        kappa_weight_norm: global_kappa.parts.weight_norm,
        crossover,
        c_rho: global_rho.parts.c_constant,
        c_kappa: global_kappa.parts.c_constant,
        c_rho_pow_theta: global_rho.parts.c_constant.powf(profile.theta()),
        class_norm_rho_p: norm_rho,
        class_norm_kappa_1: norm_kappa,
        k_factor: embedding_constant(rho, profile),
        global_rho,
        global_kappa,
    })
}
