use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use aniso_taylor::bounds::{global_bound, global_bound_sharp, global_kappa_bound};
use aniso_taylor::sampling::{cell_points, sup_error};
use aniso_taylor::surrogate::{build_library_with, plan_partition, BuildOptions};
use aniso_taylor::*;
use serde::Serialize;

use crate::config::{Resolved, RunConfig};

const BUILD_REPORT_SCHEMA: &str = "aniso-taylor.build-report";
const SWEEP_SCHEMA: &str = "aniso-taylor.sweep";
const COMPARE_SCHEMA: &str = "aniso-taylor.comparison";
const REPORT_VERSION: u32 = 1;

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn outcome_name(gate: &GateOutcome) -> &'static str {
    match gate {
        GateOutcome::SingleCell { .. } => "single-cell",
        GateOutcome::PartitionNeeded { .. } => "partition-needed",
    }
}

fn gate_bound(gate: &GateOutcome) -> f64 {
    match *gate {
        GateOutcome::SingleCell { global_bound } => global_bound,
        GateOutcome::PartitionNeeded { global_bound, .. } => global_bound,
    }
}

#[derive(Serialize)]
struct BuildReport<'a> {
    schema: &'static str,
    version: u32,
    provenance: &'a RunConfig,
    outcome: &'static str,
    global_kappa_bound: f64,
    eta: Option<f64>,
    j: usize,
    sigma: Option<f64>,
    cell_count: Option<u64>,
    bound_on_n: f64,
    ks: Vec<usize>,
}

pub fn build(r: Resolved) -> Result<()> {
    let eps = r.config.targets.eps[0];
    let m = r.config.targets.m[0];
    let Some(path) = r.config.output.library.clone() else {
        bail!("no library path: set output.library in the config or pass --library");
    };
    let options = BuildOptions {
        max_cells: r.config.max_cells,
    };
    let lib = build_library_with(&r.model, &r.profile, eps, m, options)?;
    std::fs::write(&path, lib.to_json()? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    let report = BuildReport {
        schema: BUILD_REPORT_SCHEMA,
        version: REPORT_VERSION,
        provenance: &r.config,
        outcome: outcome_name(&lib.gate),
        global_kappa_bound: gate_bound(&lib.gate),
        eta: lib.grid.eta,
        j: lib.grid.j,
        sigma: lib.grid.sigma,
        cell_count: lib.grid.cell_count,
        bound_on_n: lib.grid.bound_on_n,
        ks: lib.grid.ks(),
    };
    write_json(&report, r.config.output.report.as_deref())?;
    eprintln!(
        "{}: {} cells written to {}",
        report.outcome,
        lib.len(),
        path.display()
    );
    Ok(())
}

pub fn certify_library(
    library: &Path,
    samples: usize,
    seed: u64,
    report: Option<&Path>,
) -> Result<bool> {
    if samples == 0 {
        bail!("samples_per_cell must be positive");
    }
    let text = std::fs::read_to_string(library)
        .with_context(|| format!("reading {}", library.display()))?;
    let lib = SurrogateLibrary::from_json(&text)?;
    let model = TaylorModel::from_spec(lib.provenance.model.clone())?;
    let rep = certify(&lib, &model, samples, seed)?;
    write_json(&rep, report)?;
    eprintln!(
        "{}: max error {:.3e} (eps {:.3e}), {} cells, dominance {}",
        if rep.passed() { "PASS" } else { "FAIL" },
        rep.max_measured,
        rep.eps,
        rep.cell_count,
        if rep.pass_dominance { "holds" } else { "violated" }
    );
    Ok(rep.passed())
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub m: u64,
    pub eps: f64,
    pub outcome: &'static str,
    pub j: usize,
    pub cell_count: Option<u64>,
    pub log_cell_count: f64,
    pub bound_on_n: f64,
    pub global_rho_bound: Option<f64>,
    pub global_kappa_bound: f64,
    pub global_measured_error: f64,
    pub library_max_error: Option<f64>,
    pub library_max_bound_v2: Option<f64>,
}

#[derive(Serialize)]
struct SweepFits {
    rate: f64,
    global_bound_slope: Option<f64>,
    global_measured_slope: Option<f64>,
    measured_decays_at_rate: Option<bool>,
    cell_count_monotone_in_eps: bool,
}

#[derive(Serialize)]
struct SweepReport<'a> {
    schema: &'static str,
    version: u32,
    provenance: &'a RunConfig,
    rows: &'a [SweepRow],
    fits: SweepFits,
}

fn slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

pub fn sweep(r: Resolved) -> Result<()> {
    let cfg = &r.config;
    let (model, profile) = (&r.model, &r.profile);
    let d = model.dim();
    let samples = cfg.verification.samples_per_cell;
    let seed = cfg.verification.seed;
    let rho_norm = model.class_norm(model.rho(), profile.p()).ok().map(|n| n.upper);
    let full = Cell::full_cube();

    let mut rows = Vec::new();
    for &m in &cfg.targets.m {
        let set = top_terms(model.rho(), usize::try_from(m + 1)?, d)?;
        let poly = LocalPolynomial::taylor(model, &vec![0.0; d], set.members())?;
        let points = cell_points(&full, d, samples, seed, m);
        let global_measured_error = sup_error(model, |y| poly.evaluate(y), &points);
        let global_rho_bound = match rho_norm {
            Some(n) => Some(global_bound(n, model.rho(), profile, m)?.value),
            None => None,
        };
        for &eps in &cfg.targets.eps {
            let (gate, grid, kappa_norm) = plan_partition(model, profile, eps, m)?;
            let global_kappa = global_kappa_bound(kappa_norm, model.rho(), profile, m)?.value;
            let small = grid.cell_count.map_or(false, |n| n <= cfg.max_cells);
            let (library_max_error, library_max_bound_v2) = if small {
                let options = BuildOptions {
                    max_cells: cfg.max_cells,
                };
                let lib = build_library_with(model, profile, eps, m, options)?;
                let rep = certify(&lib, model, samples, seed)?;
                (Some(rep.max_measured), Some(rep.max_bound_v2))
            } else {
                (None, None)
            };
            rows.push(SweepRow {
                m,
                eps,
                outcome: outcome_name(&gate),
                j: grid.j,
                cell_count: grid.cell_count,
                log_cell_count: grid.log_cell_count,
                bound_on_n: grid.bound_on_n,
                global_rho_bound,
                global_kappa_bound: global_kappa,
                global_measured_error,
                library_max_error,
                library_max_bound_v2,
            });
        }
    }

    let eps0 = cfg.targets.eps[0];
    let first_eps: Vec<&SweepRow> = rows.iter().filter(|r| r.eps == eps0).collect();
    let xs: Vec<f64> = first_eps.iter().map(|r| (r.m as f64 + 1.0).ln()).collect();
    let bound_ys: Vec<f64> = first_eps.iter().map(|r| r.global_kappa_bound.ln()).collect();
    let measured_ys: Vec<f64> = first_eps
        .iter()
        .map(|r| r.global_measured_error.ln())
        .collect();
    let measured_slope = if measured_ys.iter().all(|y| y.is_finite()) {
        slope(&xs, &measured_ys)
    } else {
        None
    };
    let monotone = cfg.targets.m.iter().all(|&m| {
        let mut per_m: Vec<&SweepRow> = rows.iter().filter(|r| r.m == m).collect();
        per_m.sort_by(|a, b| b.eps.total_cmp(&a.eps));
        per_m
            .windows(2)
            .all(|w| w[1].log_cell_count >= w[0].log_cell_count)
    });
    let fits = SweepFits {
        rate: profile.rate(),
        global_bound_slope: slope(&xs, &bound_ys),
        global_measured_slope: measured_slope,
        measured_decays_at_rate: measured_slope.map(|s| s <= -profile.rate() + 0.1),
        cell_count_monotone_in_eps: monotone,
    };

    if let Some(table) = &cfg.output.table {
        write_table(table, &rows)?;
    }
    let report = SweepReport {
        schema: SWEEP_SCHEMA,
        version: REPORT_VERSION,
        provenance: cfg,
        rows: &rows,
        fits,
    };
    write_json(&report, cfg.output.report.as_deref())
}

fn write_table(path: &PathBuf, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    w.write_record([
        "m",
        "eps",
        "outcome",
        "J",
        "N",
        "ln_N",
        "bound_on_N",
        "global_rho_bound",
        "global_kappa_bound",
        "global_measured_error",
        "library_max_error",
        "library_max_bound_v2",
    ])?;
    let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
    for r in rows {
        w.write_record([
            r.m.to_string(),
            r.eps.to_string(),
            r.outcome.to_string(),
            r.j.to_string(),
            r.cell_count.map_or_else(String::new, |n| n.to_string()),
            r.log_cell_count.to_string(),
            r.bound_on_n.to_string(),
            opt(r.global_rho_bound),
            r.global_kappa_bound.to_string(),
            r.global_measured_error.to_string(),
            opt(r.library_max_error),
            opt(r.library_max_bound_v2),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CompareReport<'a> {
    schema: &'static str,
    version: u32,
    provenance: &'a RunConfig,
    m: u64,
    comparison: BoundComparison,
    global_rho_sharp: Option<BoundReport>,
}

pub fn compare(r: Resolved) -> Result<()> {
    let m = r.config.targets.m[0];
    let comparison = compare_bounds(&r.model, r.model.rho(), &r.profile, m)?;
    let sharp = global_bound_sharp(
        comparison.class_norm_rho_p,
        r.model.rho(),
        &r.profile,
        m,
        r.config.verification.truncation_degree,
    )
    .ok();
    let report = CompareReport {
        schema: COMPARE_SCHEMA,
        version: REPORT_VERSION,
        provenance: &r.config,
        m,
        comparison,
        global_rho_sharp: sharp,
    };
    write_json(&report, r.config.output.report.as_deref())
}
