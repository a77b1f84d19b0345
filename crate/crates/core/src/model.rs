//! Concrete members of the anisotropic class: Taylor-coefficient oracles with
//! exact closed-form evaluators.
//!
//! Values live in `R^k` with the Euclidean norm. The separable kinds are
//! `u(y) = a * prod_j b_j / (b_j - y_j)` with `b_j = rho_j / c`, so that
//! `t_nu = a * c^{|nu|} rho^{-nu}`; `c = 1` is the separable-rational model.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::index::MultiIndex;
use crate::weights::WeightSequence;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolynomialTerm {
    pub index: MultiIndex,
    pub value: Vec<f64>,
}

/// Serializable description of a model; the form used in configs and
/// library provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    SeparableRational {
        rho: WeightSequence,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitudes: Option<Vec<f64>>,
    },
    ScaledSeparable {
        rho: WeightSequence,
        scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitudes: Option<Vec<f64>>,
    },
    FinitePolynomial {
        rho: WeightSequence,
        terms: Vec<PolynomialTerm>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    SeparableRational,
    ScaledSeparable,
    FinitePolynomial,
}

/// Value of a class norm. Closed forms give `lower == upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassNorm {
    pub lower: f64,
    pub upper: f64,
}

impl ClassNorm {
    pub fn exact(v: f64) -> Self {
        ClassNorm { lower: v, upper: v }
    }

    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ModelSpec", into = "ModelSpec")]
pub struct TaylorModel {
    spec: ModelSpec,
    kind: ModelKind,
    rho: WeightSequence,
    amplitudes: Vec<f64>,
    amplitude_norm: f64,
    /// `b_j = rho_j / c` for the separable kinds, empty otherwise.
    radii: Vec<f64>,
    scale: f64,
    terms: Vec<PolynomialTerm>,
    output_dim: usize,
}

impl TryFrom<ModelSpec> for TaylorModel {
    type Error = Error;

    fn try_from(spec: ModelSpec) -> Result<Self> {
        TaylorModel::from_spec(spec)
    }
}

impl From<TaylorModel> for ModelSpec {
    fn from(m: TaylorModel) -> Self {
        m.spec
    }
}

impl TaylorModel {
    /// `u(y) = prod_j (1 - y_j/rho_j)^{-1}`, `t_nu = rho^{-nu}`.
    pub fn separable_rational(rho: WeightSequence) -> Self {
        Self::from_spec(ModelSpec::SeparableRational {
            rho,
            amplitudes: None,
        })
        .expect("weights validated on construction")
    }

    /// `t_nu = c^{|nu|} rho^{-nu}` with `0 < c <= 1`.
    pub fn scaled_separable(rho: WeightSequence, scale: f64) -> Result<Self> {
        Self::from_spec(ModelSpec::ScaledSeparable {
            rho,
            scale,
            amplitudes: None,
        })
    }

    pub fn finite_polynomial(rho: WeightSequence, terms: Vec<PolynomialTerm>) -> Result<Self> {
        Self::from_spec(ModelSpec::FinitePolynomial { rho, terms })
    }

    pub fn from_spec(spec: ModelSpec) -> Result<Self> {
        let (kind, rho, scale, amplitudes, terms) = match &spec {
            ModelSpec::SeparableRational { rho, amplitudes } => (
                ModelKind::SeparableRational,
                rho.clone(),
                1.0,
                amplitudes.clone().unwrap_or_else(|| vec![1.0]),
                Vec::new(),
            ),
            ModelSpec::ScaledSeparable {
                rho,
                scale,
                amplitudes,
            } => {
                if !(*scale > 0.0 && *scale <= 1.0) {
                    return Err(Error::invalid(format!(
                        "scale must lie in (0, 1], got {scale}"
                    )));
                }
                (
                    ModelKind::ScaledSeparable,
                    rho.clone(),
                    *scale,
                    amplitudes.clone().unwrap_or_else(|| vec![1.0]),
                    Vec::new(),
                )
            }
            ModelSpec::FinitePolynomial { rho, terms } => {
                let k = terms.first().map_or(1, |t| t.value.len());
                (
                    ModelKind::FinitePolynomial,
                    rho.clone(),
                    1.0,
                    vec![1.0; k],
                    terms.clone(),
                )
            }
        };
        if amplitudes.is_empty() || amplitudes.iter().any(|a| !a.is_finite()) {
            return Err(Error::invalid("amplitudes must be finite and nonempty"));
        }
        let output_dim = amplitudes.len();
        let d = rho.dim();
        let mut seen = HashSet::new();
        for t in &terms {
            if t.value.len() != output_dim {
                return Err(Error::DimensionMismatch {
                    expected: output_dim,
                    got: t.value.len(),
                });
            }
            if t.index.span() > d {
                return Err(Error::invalid(format!(
                    "polynomial term {:?} uses coordinates past d = {d}",
                    t.index
                )));
            }
            if !seen.insert(t.index.clone()) {
                return Err(Error::invalid(format!("duplicate term {:?}", t.index)));
            }
        }
        let radii = match kind {
            ModelKind::FinitePolynomial => Vec::new(),
            _ => rho.values().iter().map(|r| r / scale).collect(),
        };
        let amplitude_norm = euclid(&amplitudes);
        Ok(TaylorModel {
            spec,
            kind,
            rho,
            amplitudes,
            amplitude_norm,
            radii,
            scale,
            terms,
            output_dim,
        })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// The declared anisotropy.
    pub fn rho(&self) -> &WeightSequence {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `k`, the dimension of the value space.
    pub fn output_dim(&self) -> usize {
        self.output_dim
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn terms(&self) -> &[PolynomialTerm] {
        &self.terms
    }

    /// `b_j = rho_j / c` for separable kinds.
    pub fn separable_radii(&self) -> Option<&[f64]> {
        match self.kind {
            ModelKind::FinitePolynomial => None,
            _ => Some(&self.radii),
        }
    }

    /// Taylor coefficient `t_nu` at the origin.
    pub fn coeff(&self, nu: &MultiIndex) -> Vec<f64> {
        if nu.span() > self.dim() {
            return vec![0.0; self.output_dim];
        }
        match self.kind {
            ModelKind::FinitePolynomial => self
                .terms
                .iter()
                .find(|t| &t.index == nu)
                .map_or_else(|| vec![0.0; self.output_dim], |t| t.value.clone()),
            _ => {
                let s = self.radial_power(nu);
                self.amplitudes.iter().map(|a| a * s).collect()
            }
        }
    }

    /// `||t_nu||_X`.
    pub fn coeff_norm(&self, nu: &MultiIndex) -> f64 {
        match self.kind {
            ModelKind::FinitePolynomial => euclid(&self.coeff(nu)),
            _ if nu.span() > self.dim() => 0.0,
            _ => self.amplitude_norm * self.radial_power(nu),
        }
    }

    /// `prod_j b_j^{-nu_j}`.
    fn radial_power(&self, nu: &MultiIndex) -> f64 {
        nu.support()
            .map(|(j, k)| self.radii[j].powi(-(k as i32)))
            .product()
    }

    /// Exact value `u(y)` for `y` in `[-1,1]^d`.
    pub fn evaluate(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_point(y, self.dim())?;
        Ok(self.evaluate_unchecked(y))
    }

    pub(crate) fn evaluate_unchecked(&self, y: &[f64]) -> Vec<f64> {
        match self.kind {
            ModelKind::FinitePolynomial => {
                let mut out = vec![0.0; self.output_dim];
                for t in &self.terms {
                    let mono = t.index.monomial(y);
                    for (o, v) in out.iter_mut().zip(&t.value) {
                        *o += v * mono;
                    }
                }
                out
            }
            _ => {
                let s: f64 = self
                    .radii
                    .iter()
                    .zip(y)
                    .map(|(b, yj)| b / (b - yj))
                    .product();
                self.amplitudes.iter().map(|a| a * s).collect()
            }
        }
    }

    /// `||u||_{B_{w,p}} = ||(w^nu ||t_nu||)_nu||_{l_p}`.
    pub fn class_norm(&self, w: &WeightSequence, p: f64) -> Result<ClassNorm> {
        if w.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: w.dim(),
            });
        }
        if !(p >= 1.0) {
            return Err(Error::invalid(format!("p must be in [1, inf], got {p}")));
        }
        match self.kind {
            ModelKind::FinitePolynomial => {
                let weighted: Vec<f64> = self
                    .terms
                    .iter()
                    .map(|t| w.power_of(&t.index) * euclid(&t.value))
                    .collect();
                Ok(ClassNorm::exact(crate::weights::lq_norm_unchecked(
                    &weighted, p,
                )))
            }
            _ => {
                let mut product = 1.0;
                for (j, (wj, b)) in w.values().iter().zip(&self.radii).enumerate() {
                    let ratio = wj / b;
                    let diverges = if p == f64::INFINITY {
                        ratio > 1.0
                    } else {
                        ratio >= 1.0
                    };
                    if diverges {
                        return Err(Error::Divergent(format!(
                            "w_{j} * c / rho_{j} = {ratio} is not below 1 for p = {p}"
                        )));
                    }
                    if p != f64::INFINITY {
                        product /= 1.0 - ratio.powf(p);
                    }
                }
                let value = if p == f64::INFINITY {
                    self.amplitude_norm
                } else {
                    self.amplitude_norm * product.powf(p.recip())
                };
                Ok(ClassNorm::exact(value))
            }
        }
    }
}

/// Free-function form of [`TaylorModel::class_norm`].
pub fn class_norm(model: &TaylorModel, w: &WeightSequence, p: f64) -> Result<ClassNorm> {
    model.class_norm(w, p)
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn check_point(y: &[f64], d: usize) -> Result<()> {
    if y.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: y.len(),
        });
    }
    if let Some((index, &value)) = y.iter().enumerate().find(|(_, v)| !(v.abs() <= 1.0)) {
        return Err(Error::OutsideCube { index, value });
    }
    Ok(())
}
