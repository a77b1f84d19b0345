//! Library of local Taylor polynomials over a partition, point queries and
//! sampled error certification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::local_bound_v2;
use crate::error::{Error, Result};
use crate::index::{top_terms, LowerSet, MultiIndex};
use crate::model::{check_point, ModelSpec, TaylorModel};
use crate::partition::{
    build_partition, compute_j, feasibility_gate, Cell, GateOutcome, PartitionGrid,
};
use crate::recenter::{shifted_coeffs, DEFAULT_DEGREE_CAP};
use crate::sampling::{cell_points, sup_error};
use crate::weights::{c_constant, kappa_of, recentered_weights, ExponentProfile};

pub const LIBRARY_SCHEMA: &str = "aniso-taylor.library";
pub const LIBRARY_VERSION: u32 = 1;
pub const CERTIFICATE_SCHEMA: &str = "aniso-taylor.certificate";
pub const CERTIFICATE_VERSION: u32 = 1;

/// Cells allowed before [`build_library`] refuses to enumerate.
pub const DEFAULT_MAX_CELLS: u64 = 1_000_000;

/// Rounding allowance when comparing a measured error with a bound.
pub const DOMINANCE_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub index: MultiIndex,
    pub value: Vec<f64>,
}

/// `P(y) = sum_nu c_nu (y - center)^nu`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalPolynomial {
    pub center: Vec<f64>,
    pub coeffs: Vec<Coefficient>,
}

impl LocalPolynomial {
    /// Taylor polynomial of `model` at `center` on `index_set`.
    pub fn taylor(model: &TaylorModel, center: &[f64], index_set: &[MultiIndex]) -> Result<Self> {
        let shifted = shifted_coeffs(model, center, index_set, DEFAULT_DEGREE_CAP)?;
        Ok(LocalPolynomial {
            center: center.to_vec(),
            coeffs: shifted
                .coeffs
                .into_iter()
                .map(|(index, value)| Coefficient { index, value })
                .collect(),
        })
    }

    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        let k = self.coeffs.first().map_or(0, |c| c.value.len());
        let shifted: Vec<f64> = y
            .iter()
            .enumerate()
            .map(|(j, v)| v - self.center.get(j).copied().unwrap_or(0.0))
            .collect();
        let mut out = vec![0.0; k];
        for c in &self.coeffs {
            let mono = c.index.monomial(&shifted);
            for (o, v) in out.iter_mut().zip(&c.value) {
                *o += mono * v;
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalSurrogate {
    pub cell: Cell,
    pub index_set: LowerSet,
    pub polynomial: LocalPolynomial,
    /// Coefficient of the zero index, `u(center)`.
    pub affine_offset: Vec<f64>,
}

impl LocalSurrogate {
    pub fn evaluate(&self, y: &[f64]) -> Vec<f64> {
        self.polynomial.evaluate(y)
    }
}

/// Everything needed to rebuild a library.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: ModelSpec,
    pub profile: ExponentProfile,
    pub eps: f64,
    pub m: u64,
    pub max_cells: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurrogateLibrary {
    pub schema: String,
    pub version: u32,
    pub provenance: Provenance,
    pub dim: usize,
    pub output_dim: usize,
    pub gate: GateOutcome,
    /// `||u||_{kappa,1}` used for the gate and per-cell bounds.
    pub kappa_norm: f64,
    pub grid: PartitionGrid,
    pub locals: Vec<LocalSurrogate>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BuildOptions {
    pub max_cells: u64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_cells: DEFAULT_MAX_CELLS,
        }
    }
}

/// Gate outcome and grid without building local polynomials.
pub fn plan_partition(
    model: &TaylorModel,
    profile: &ExponentProfile,
    eps: f64,
    m: u64,
) -> Result<(GateOutcome, PartitionGrid, f64)> {
    let kappa = kappa_of(model.rho(), profile);
    let kappa_norm = model.class_norm(&kappa, 1.0)?.upper;
    let c_total = c_constant(&kappa, profile.q_theta())? * kappa_norm;
    let gate = feasibility_gate(c_total, profile, &kappa, eps, m)?;
    let grid = match gate {
        GateOutcome::SingleCell { .. } => PartitionGrid::single_cell(),
        GateOutcome::PartitionNeeded { eta, .. } => {
            let j = compute_j(model.rho(), profile, eta)?;
            build_partition(model.rho(), profile, eta, j)?
        }
    };
    Ok((gate, grid, kappa_norm))
}

pub fn build_library(
    model: &TaylorModel,
    profile: &ExponentProfile,
    eps: f64,
    m: u64,
) -> Result<SurrogateLibrary> {
    build_library_with(model, profile, eps, m, BuildOptions::default())
}

pub fn build_library_with(
    model: &TaylorModel,
    profile: &ExponentProfile,
    eps: f64,
    m: u64,
    options: BuildOptions,
) -> Result<SurrogateLibrary> {
    if !model.rho().is_nondecreasing() {
        return Err(Error::hypothesis("rho nondecreasing violated"));
    }
    let (gate, grid, kappa_norm) = plan_partition(model, profile, eps, m)?;
    match grid.cell_count {
        Some(n) if n <= options.max_cells => {}
        _ => {
            return Err(Error::Infeasible(format!(
                "partition has e^{:.2} cells, above the limit of {}",
                grid.log_cell_count, options.max_cells
            )))
        }
    }
    let d = model.dim();
    let kappa = kappa_of(model.rho(), profile);
    let count = usize::try_from(m + 1).map_err(|_| Error::invalid("m too large"))?;
    let locals = grid
        .cells()?
        .into_par_iter()
        .map(|cell| {
            let kappa_tilde = recentered_weights(&kappa, cell.center(), cell.halfwidths())?;
            let index_set = top_terms(&kappa_tilde, count, d)?;
            let center = cell.center_in(d);
            let polynomial = LocalPolynomial::taylor(model, &center, index_set.members())?;
            let affine_offset = polynomial
                .coeffs
                .iter()
                .find(|c| c.index.is_zero())
                .map(|c| c.value.clone())
                .expect("lower sets contain zero");
            Ok(LocalSurrogate {
                cell,
                index_set,
                polynomial,
                affine_offset,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurrogateLibrary {
        schema: LIBRARY_SCHEMA.to_string(),
        version: LIBRARY_VERSION,
        provenance: Provenance {
            model: model.spec().clone(),
            profile: *profile,
            eps,
            m,
            max_cells: options.max_cells,
        },
        dim: d,
        output_dim: model.output_dim(),
        gate,
        kappa_norm,
        grid,
        locals,
    })
}

impl SurrogateLibrary {
    pub fn len(&self) -> usize {
        self.locals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locals.is_empty()
    }

    /// Index of the local surrogate responsible for `y`.
    pub fn locate(&self, y: &[f64]) -> Result<usize> {
        check_point(y, self.dim)?;
        Ok(self.grid.locate(y)? as usize)
    }

    pub fn query(&self, y: &[f64]) -> Result<Vec<f64>> {
        let i = self.locate(y)?;
        Ok(self.locals[i].evaluate(y))
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
        let schema = value.get("schema").and_then(|s| s.as_str());
        if schema != Some(LIBRARY_SCHEMA) {
            return Err(Error::Format(format!(
                "expected schema {LIBRARY_SCHEMA:?}, found {schema:?}"
            )));
        }
        let version = value.get("version").and_then(|v| v.as_u64());
        if version != Some(u64::from(LIBRARY_VERSION)) {
            return Err(Error::Format(format!(
                "unsupported version {version:?}, expected {LIBRARY_VERSION}"
            )));
        }
        let lib: SurrogateLibrary =
            serde_json::from_value(value).map_err(|e| Error::Format(e.to_string()))?;
        let expected = lib.grid.cell_count.unwrap_or(u64::MAX);
        if lib.locals.len() as u64 != expected {
            return Err(Error::Format(format!(
                "{} local surrogates for a grid of {expected} cells",
                lib.locals.len()
            )));
        }
        Ok(lib)
    }
}

pub fn query(lib: &SurrogateLibrary, y: &[f64]) -> Result<Vec<f64>> {
    lib.query(y)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellCertificate {
    pub cell: usize,
    pub measured: f64,
    pub bound_v2: f64,
    pub ratio: f64,
    pub dominated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSummary {
    pub min: f64,
    pub median: f64,
    pub mean: f64,
    pub max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub schema: String,
    pub version: u32,
    pub provenance: Provenance,
    pub samples_per_cell: usize,
    pub seed: u64,
    pub eps: f64,
    pub cell_count: usize,
    pub max_measured: f64,
    pub max_bound_v2: f64,
    /// Every measured error is at most `eps`.
    pub pass_eps: bool,
    /// Every measured error is at most its cell's bound.
    pub pass_dominance: bool,
    /// Every cell bound is at most `eps`.
    pub bounds_meet_eps: bool,
    pub ratios: RatioSummary,
    pub cells: Vec<CellCertificate>,
}

impl CertificationReport {
    pub fn passed(&self) -> bool {
        self.pass_eps && self.pass_dominance
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Format(e.to_string()))
    }
}

/// Sampled sup error of every local polynomial against `model`, with the
/// matching local bound.
pub fn certify(
    lib: &SurrogateLibrary,
    model: &TaylorModel,
    samples_per_cell: usize,
    seed: u64,
) -> Result<CertificationReport> {
    if model.dim() != lib.dim || model.output_dim() != lib.output_dim {
        return Err(Error::DimensionMismatch {
            expected: lib.dim,
            got: model.dim(),
        });
    }
    let profile = lib.provenance.profile;
    let m = lib.provenance.m;
    let cells = lib
        .locals
        .par_iter()
        .enumerate()
        .map(|(i, local)| {
            let points = cell_points(&local.cell, lib.dim, samples_per_cell, seed, i as u64);
            let measured = sup_error(model, |y| local.evaluate(y), &points);
            let bound = local_bound_v2(lib.kappa_norm, model.rho(), &profile, &local.cell, m)?.value;
            Ok(CellCertificate {
                cell: i,
                measured,
                bound_v2: bound,
                ratio: if bound > 0.0 { measured / bound } else { 0.0 },
                dominated: measured <= bound + DOMINANCE_SLACK,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let eps = lib.provenance.eps;
    let max_measured = cells.iter().map(|c| c.measured).fold(0.0, f64::max);
    let max_bound_v2 = cells.iter().map(|c| c.bound_v2).fold(0.0, f64::max);
    Ok(CertificationReport {
        schema: CERTIFICATE_SCHEMA.to_string(),
        version: CERTIFICATE_VERSION,
        provenance: lib.provenance.clone(),
        samples_per_cell,
        seed,
        eps,
        cell_count: cells.len(),
        max_measured,
        max_bound_v2,
        pass_eps: max_measured <= eps + DOMINANCE_SLACK,
        pass_dominance: cells.iter().all(|c| c.dominated),
        bounds_meet_eps: max_bound_v2 <= eps * (1.0 + 1e-12),
        ratios: summarize(cells.iter().map(|c| c.ratio).collect()),
        cells,
    })
}

fn summarize(mut ratios: Vec<f64>) -> RatioSummary {
    if ratios.is_empty() {
        return RatioSummary {
            min: 0.0,
            median: 0.0,
            mean: 0.0,
            max: 0.0,
        };
    }
    ratios.sort_by(f64::total_cmp);
    let n = ratios.len();
    let median = if n % 2 == 1 {
        ratios[n / 2]
    } else {
        0.5 * (ratios[n / 2 - 1] + ratios[n / 2])
    };
    RatioSummary {
        min: ratios[0],
        median,
        mean: ratios.iter().sum::<f64>() / n as f64,
        max: ratios[n - 1],
    }
}
