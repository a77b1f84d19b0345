//! Anisotropy weight sequences, exponent profiles, `l_q` quasi-norms and the
//! constants that enter every error bound.
//!
//! A [`WeightSequence`] holds `rho_1..rho_d` (stored 0-based). Parametric
//! families also know their values past `d`, which [`WeightSequence::tail_sum`]
//! uses under [`TailConvention::Infinite`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::serde_ext;

/// Terms summed explicitly before the integral remainder in the power-family tail.
const POWER_TAIL_TERMS: usize = 20_000;

/// Upper limit on indices enumerated by [`f_star_lq_norm`].
const F_STAR_ENUMERATION_LIMIT: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum WeightFamily {
    Explicit { values: Vec<f64> },
    /// `rho_j = m * j^s`, `j >= 1`.
    Power { m: f64, s: f64 },
    /// `rho_j = m * g^j`, `j >= 1`.
    Geometric { m: f64, g: f64 },
}

/// How weights beyond the active dimension are treated when summing tails.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailConvention {
    /// Coordinates past `d` do not exist.
    Truncated,
    /// The family continues to infinity and its tail is summed analytically.
    Infinite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct WeightSpec {
    #[serde(flatten)]
    family: WeightFamily,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tail: Option<TailConvention>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightSpec", into = "WeightSpec")]
pub struct WeightSequence {
    family: WeightFamily,
    values: Vec<f64>,
    tail: TailConvention,
    nondecreasing: bool,
}

impl TryFrom<WeightSpec> for WeightSequence {
    type Error = Error;

    fn try_from(spec: WeightSpec) -> Result<Self> {
        let seq = match spec.family {
            WeightFamily::Explicit { values } => {
                if let Some(d) = spec.dim {
                    if d != values.len() {
                        return Err(Error::DimensionMismatch {
                            expected: values.len(),
                            got: d,
                        });
                    }
                }
                WeightSequence::explicit(values)?
            }
            WeightFamily::Power { m, s } => {
                let d = spec
                    .dim
                    .ok_or_else(|| Error::invalid("power family requires `dim`"))?;
                WeightSequence::power(m, s, d)?
            }
            WeightFamily::Geometric { m, g } => {
                let d = spec
                    .dim
                    .ok_or_else(|| Error::invalid("geometric family requires `dim`"))?;
                WeightSequence::geometric(m, g, d)?
            }
        };
        Ok(match spec.tail {
            Some(tail) => seq.with_tail(tail),
            None => seq,
        })
    }
}

impl From<WeightSequence> for WeightSpec {
    fn from(w: WeightSequence) -> Self {
        let dim = match w.family {
            WeightFamily::Explicit { .. } => None,
            _ => Some(w.values.len()),
        };
        WeightSpec {
            family: w.family,
            dim,
            tail: Some(w.tail),
        }
    }
}

impl WeightSequence {
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        Self::from_parts(
            WeightFamily::Explicit {
                values: values.clone(),
            },
            values,
            TailConvention::Truncated,
        )
    }

    pub fn power(m: f64, s: f64, d: usize) -> Result<Self> {
        if !(m > 1.0) || !s.is_finite() {
            return Err(Error::invalid(format!(
                "power family needs M > 1 and finite s (M = {m}, s = {s})"
            )));
        }
        let values = (1..=d).map(|j| m * (j as f64).powf(s)).collect();
        Self::from_parts(WeightFamily::Power { m, s }, values, TailConvention::Infinite)
    }

    pub fn geometric(m: f64, g: f64, d: usize) -> Result<Self> {
        if !(m > 1.0) || !(g > 1.0) || !g.is_finite() {
            return Err(Error::invalid(format!(
                "geometric family needs M > 1 and g > 1 (M = {m}, g = {g})"
            )));
        }
        let values = (1..=d).map(|j| m * g.powi(j as i32)).collect();
        Self::from_parts(
            WeightFamily::Geometric { m, g },
            values,
            TailConvention::Infinite,
        )
    }

    fn from_parts(family: WeightFamily, values: Vec<f64>, tail: TailConvention) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("weight sequence needs at least one dimension"));
        }
        if let Some((index, &value)) = values
            .iter()
            .enumerate()
            .find(|(_, &w)| !(w > 1.0) || !w.is_finite())
        {
            return Err(Error::WeightNotDecaying { index, value });
        }
        let nondecreasing = values.windows(2).all(|w| w[0] <= w[1]);
        Ok(WeightSequence {
            family,
            values,
            tail,
            nondecreasing,
        })
    }

    pub fn with_tail(mut self, tail: TailConvention) -> Self {
        if !matches!(self.family, WeightFamily::Explicit { .. }) {
            self.tail = tail;
        }
        self
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn tail_convention(&self) -> TailConvention {
        self.tail
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, j: usize) -> f64 {
        self.values[j]
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.nondecreasing
    }

    /// `w^nu` for a multi-index supported on the active dimensions.
    pub fn power_of(&self, nu: &MultiIndex) -> f64 {
        nu.support()
            .map(|(j, k)| self.values[j].powi(k as i32))
            .product()
    }

    /// Elementwise `w_j^theta`; parametric families stay parametric.
    pub fn pow(&self, theta: f64) -> Result<Self> {
        let family = match &self.family {
            WeightFamily::Explicit { values } => WeightFamily::Explicit {
                values: values.iter().map(|w| w.powf(theta)).collect(),
            },
            WeightFamily::Power { m, s } => WeightFamily::Power {
                m: m.powf(theta),
                s: s * theta,
            },
            WeightFamily::Geometric { m, g } => WeightFamily::Geometric {
                m: m.powf(theta),
                g: g.powf(theta),
            },
        };
        let values = self.values.iter().map(|w| w.powf(theta)).collect();
        Self::from_parts(family, values, self.tail)
    }

    /// `sum_{j <= d} w_j^{-q}`.
    pub fn inverse_power_sum(&self, q: f64) -> f64 {
        self.values.iter().map(|w| w.powf(-q)).sum()
    }

    /// `||(w_j^{-1})_{j <= d}||_{l_q}`.
    pub fn inverse_lq_norm(&self, q: f64) -> f64 {
        let inv: Vec<f64> = self.values.iter().map(|w| w.recip()).collect();
        lq_norm_unchecked(&inv, q)
    }

    /// `sum_{j > first} w_j^{-q}` for 1-based `first`. Under the infinite
    /// convention the family's analytic tail past `d` is added; it is
    /// `+inf` when that tail diverges.
    pub fn tail_sum(&self, first: usize, q: f64) -> f64 {
        let finite: f64 = self
            .values
            .iter()
            .skip(first)
            .map(|w| w.powf(-q))
            .sum();
        match self.tail {
            TailConvention::Truncated => finite,
            TailConvention::Infinite => finite + self.infinite_tail_past_dim(q),
        }
    }

    /// Upper bound on `sum_{j > d} w_j^{-q}` for parametric families.
    fn infinite_tail_past_dim(&self, q: f64) -> f64 {
        let d = self.values.len();
        match self.family {
            WeightFamily::Explicit { .. } => 0.0,
            WeightFamily::Geometric { m, g } => {
                m.powf(-q) * g.powf(-q * (d as f64 + 1.0)) / (1.0 - g.powf(-q))
            }
            WeightFamily::Power { m, s } => {
                let a = s * q;
                if a <= 1.0 {
                    return f64::INFINITY;
                }
                let last = d + POWER_TAIL_TERMS;
                let partial: f64 = (d + 1..=last).map(|j| (j as f64).powf(-a)).sum();
                // sum_{j > last} j^{-a} <= int_last^inf x^{-a} dx
                let remainder = (last as f64).powf(1.0 - a) / (a - 1.0);
                m.powf(-q) * (partial + remainder)
            }
        }
    }
}

/// `l_q` (quasi-)norm of a nonnegative sequence; `q = inf` gives the maximum.
pub fn lq_norm(values: &[f64], q: f64) -> Result<f64> {
    if !(q > 0.0) {
        return Err(Error::invalid(format!("q must be positive, got {q}")));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::invalid(format!(
            "l_q norm needs nonnegative entries, got {v}"
        )));
    }
    Ok(lq_norm_unchecked(values, q))
}

pub(crate) fn lq_norm_unchecked(values: &[f64], q: f64) -> f64 {
    if q == f64::INFINITY {
        values.iter().copied().fold(0.0, f64::max)
    } else if q == 1.0 {
        values.iter().sum()
    } else {
        values.iter().map(|v| v.powf(q)).sum::<f64>().powf(q.recip())
    }
}

/// `beta = -ln(1 - rho_min^{-q}) * rho_min^q`.
pub fn beta_constant(rho_min: f64, q: f64) -> Result<f64> {
    if !(rho_min > 1.0) {
        return Err(Error::WeightNotDecaying {
            index: 0,
            value: rho_min,
        });
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid(format!("q must be positive and finite, got {q}")));
    }
    let x = rho_min.powf(-q);
    Ok(-(-x).ln_1p() / x)
}

/// `C(rho, q) = beta^{1/q} exp(beta/q * ||rho^{-1}||_q^q)`.
pub fn c_constant(rho: &WeightSequence, q: f64) -> Result<f64> {
    let beta = beta_constant(rho.min(), q)?;
    Ok(beta.powf(q.recip()) * (beta / q * rho.inverse_power_sum(q)).exp())
}

/// `kappa_j = rho_j^theta`.
pub fn kappa_of(rho: &WeightSequence, profile: &ExponentProfile) -> WeightSequence {
    if profile.theta() == 1.0 {
        return rho.clone();
    }
    rho.pow(profile.theta())
        .expect("theta > 0 keeps weights above one")
}

/// `(w_j - |c_j|) / lambda_j` on a cell; coordinates past `center.len()` are
/// unchanged (center 0, half-width 1).
pub fn recentered_weights(
    w: &WeightSequence,
    center: &[f64],
    halfwidths: &[f64],
) -> Result<WeightSequence> {
    if center.len() != halfwidths.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: halfwidths.len(),
        });
    }
    if center.len() > w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            got: center.len(),
        });
    }
    validate_cell(center, halfwidths)?;
    let values = w
        .values()
        .iter()
        .enumerate()
        .map(|(j, &wj)| match (center.get(j), halfwidths.get(j)) {
            (Some(c), Some(l)) => (wj - c.abs()) / l,
            _ => wj,
        })
        .collect();
    WeightSequence::explicit(values)
}

pub(crate) fn validate_cell(center: &[f64], halfwidths: &[f64]) -> Result<()> {
    for (j, (c, l)) in center.iter().zip(halfwidths).enumerate() {
        if !(*l > 0.0) {
            return Err(Error::CellOutsideCube(format!(
                "half-width {j} must be positive, got {l}"
            )));
        }
        if !(c.abs() + l <= 1.0 + 1e-12) {
            return Err(Error::CellOutsideCube(format!(
                "|center_{j}| + halfwidth_{j} = {} > 1",
                c.abs() + l
            )));
        }
    }
    Ok(())
}

/// Two-sided enclosure of a quantity known only through truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
}

/// `||(rho^{-nu})_{nu != 0}||_{l_q}` over the active dimensions, bracketed by
/// the sum over `0 < |nu| <= degree` and that sum plus a geometric tail
/// majorant `t^{-(D+1)} prod_j (1 - t rho_j^{-q})^{-1}`, minimised over `t`.
pub fn f_star_lq_norm(rho: &WeightSequence, q: f64, degree: u32) -> Result<NormBracket> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::invalid(format!("q must be positive and finite, got {q}")));
    }
    let a: Vec<f64> = rho.values().iter().map(|w| w.powf(-q)).collect();
    let count = binomial_count(degree as usize + a.len(), a.len());
    if count > F_STAR_ENUMERATION_LIMIT as f64 {
        return Err(Error::BudgetExceeded {
            budget: F_STAR_ENUMERATION_LIMIT,
        });
    }
    let truncated = sum_products_up_to_degree(&a, degree) - 1.0;
    let tail = geometric_tail_majorant(&a, degree);
    Ok(NormBracket {
        lower: truncated.powf(q.recip()),
        upper: (truncated + tail).powf(q.recip()),
    })
}

fn binomial_count(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `sum_{|nu| <= degree} prod_j a_j^{nu_j}`, zero index included.
fn sum_products_up_to_degree(a: &[f64], degree: u32) -> f64 {
    fn recurse(a: &[f64], budget: u32) -> f64 {
        match a.split_first() {
            None => 1.0,
            Some((&first, rest)) => {
                let mut total = 0.0;
                let mut power = 1.0;
                for k in 0..=budget {
                    total += power * recurse(rest, budget - k);
                    power *= first;
                }
                total
            }
        }
    }
    recurse(a, degree)
}

fn geometric_tail_majorant(a: &[f64], degree: u32) -> f64 {
    let a_max = a.iter().copied().fold(0.0, f64::max);
    let h = |t: f64| -> f64 {
        let mut log = -(degree as f64 + 1.0) * t.ln();
        for &aj in a {
            log -= (-t * aj).ln_1p();
        }
        log
    };
    // h is convex on (1, 1/a_max); golden-section search.
    let (mut lo, mut hi) = (1.0, (1.0 / a_max) * (1.0 - 1e-12));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - phi * (hi - lo);
        let x2 = lo + phi * (hi - lo);
        if h(x1) <= h(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    let t = 0.5 * (lo + hi);
    h(t).min(h(1.0)).exp()
}

/// Exponents `(p, q)` and everything derived from them.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProfileRepr", into = "ProfileRepr")]
pub struct ExponentProfile {
    p: f64,
    q: f64,
    p_conjugate: f64,
    theta: f64,
    q_theta: f64,
    rate: f64,
}

#[derive(Serialize, Deserialize)]
struct ProfileRepr {
    #[serde(with = "serde_ext::extended_real")]
    p: f64,
    q: f64,
    #[serde(
        default,
        skip_deserializing,
        serialize_with = "serde_ext::extended_real_opt::serialize"
    )]
    p_conjugate: Option<f64>,
    #[serde(default, skip_deserializing)]
    theta: Option<f64>,
    #[serde(default, skip_deserializing)]
    q_theta: Option<f64>,
    #[serde(default, skip_deserializing)]
    rate: Option<f64>,
}

impl TryFrom<ProfileRepr> for ExponentProfile {
    type Error = Error;

    fn try_from(r: ProfileRepr) -> Result<Self> {
        ExponentProfile::new(r.p, r.q)
    }
}

impl From<ExponentProfile> for ProfileRepr {
    fn from(e: ExponentProfile) -> Self {
        ProfileRepr {
            p: e.p,
            q: e.q,
            p_conjugate: Some(e.p_conjugate),
            theta: Some(e.theta),
            q_theta: Some(e.q_theta),
            rate: Some(e.rate),
        }
    }
}

impl ExponentProfile {
    /// Validates `1 <= p <= inf`, `0 < q < p/(p-1)`.
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::hypothesis(format!("1 <= p violated (p = {p})")));
        }
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::hypothesis(format!("0 < q violated (q = {q})")));
        }
        let p_conjugate = if p == 1.0 {
            f64::INFINITY
        } else if p == f64::INFINITY {
            1.0
        } else {
            p / (p - 1.0)
        };
        if !(q < p_conjugate) {
            return Err(Error::hypothesis(format!(
                "q < p/(p-1) violated (p = {p}, q = {q}, p' = {p_conjugate})"
            )));
        }
        let theta = if p_conjugate == f64::INFINITY {
            1.0
        } else {
            1.0 - q / p_conjugate
        };
        let q_theta = q / theta;
        let rate = -1.0 + p.recip() + q.recip();
        debug_assert!(rate > 0.0);
        Ok(ExponentProfile {
            p,
            q,
            p_conjugate,
            theta,
            q_theta,
            rate,
        })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p_conjugate(&self) -> f64 {
        self.p_conjugate
    }

    /// `theta = 1 - q/p'`.
    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `q_theta = q / theta`.
    pub fn q_theta(&self) -> f64 {
        self.q_theta
    }

    /// `r = -1 + 1/p + 1/q`.
    pub fn rate(&self) -> f64 {
        self.rate
    }
}
