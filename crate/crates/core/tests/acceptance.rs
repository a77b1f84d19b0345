//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::HashMap;
use std::time::{Duration, Instant};

use aniso_taylor::bounds::{global_bound, global_kappa_bound, local_bound_v1, local_bound_v2};
use aniso_taylor::index::quantize_log_weight;
use aniso_taylor::partition::{cell_budget, ladder_count_bound};
use aniso_taylor::recenter::{apply_t, operator_norm_bound, WeightTag};
use aniso_taylor::sampling::{cell_points, sup_error};
use aniso_taylor::surrogate::plan_partition;
use aniso_taylor::weights::{beta_constant, f_star_lq_norm};
use aniso_taylor::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MC_SAMPLES: usize = 10_000;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);
    let criteria: [Criterion; 10] = [
        ("AC1", "l1 identity of the recentering map", Duration::from_secs(5), ac1),
        ("AC2", "operator-norm bound and 4/3 witness", Duration::from_secs(10), ac2),
        ("AC3", "lower-set selection vs exhaustive", Duration::from_secs(10), ac3),
        ("AC4", "norm-equivalence constant", Duration::from_secs(30), ac4),
        ("AC5", "global dominance and rate", Duration::from_secs(60), ac5),
        ("AC6", "local dominance v1/v2", Duration::from_secs(60), ac6),
        ("AC7", "kappa identities and beta >= 1", Duration::from_secs(1), ac7),
        ("AC8", "partition correctness", Duration::from_secs(300), ac8),
        ("AC9", "power-family growth of log N", Duration::from_secs(300), ac9),
        ("AC10", "determinism", Duration::from_secs(300), ac10),
    ];
    let mut failures = 0;
    for (id, name, limit, run) in criteria {
        let start = Instant::now();
        let out = std::panic::catch_unwind(run)
            .unwrap_or_else(|_| outcome(false, "panicked"));
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed < limit;
        if !pass {
            failures += 1;
        }
        println!(
            "{id:<5} {} {name}: {} [{:.2}s / {}s]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures > 0 {
        std::process::exit(1);
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_rho(r: &mut ChaCha8Rng, d: usize) -> WeightSequence {
    WeightSequence::explicit((0..d).map(|_| r.gen_range(1.2..6.0)).collect()).unwrap()
}

fn random_sequence(r: &mut ChaCha8Rng, d: usize, signed: bool) -> WeightedCoeffSeq {
    let mut v = WeightedCoeffSeq::new(1, WeightTag::Origin);
    let terms = r.gen_range(1..=12);
    for _ in 0..terms {
        let mut left = r.gen_range(0..=6u32);
        let mut nu = vec![0u32; d];
        for e in nu.iter_mut() {
            let k = r.gen_range(0..=left);
            *e = k;
            left -= k;
        }
        let x: f64 = r.gen_range(0.0..2.0);
        let x = if signed && r.gen_bool(0.5) { -x } else { x };
        v.insert(MultiIndex::from_dense(nu), vec![x]);
    }
    v
}

fn ac1() -> Outcome {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let d = r.gen_range(1..=3);
        let rho = random_rho(&mut r, d);
        let y: Vec<f64> = (0..d).map(|_| r.gen_range(0.0..=1.0)).collect();
        let v = random_sequence(&mut r, d, false);
        let tv = apply_t(&rho, &y, &v).unwrap();
        let rel = (tv.lp_norm(1.0) - v.lp_norm(1.0)).abs() / v.lp_norm(1.0);
        worst = worst.max(rel);
    }
    outcome(worst <= 1e-12, format!("max relative deviation {worst:.2e} (tol 1e-12)"))
}

fn ac2() -> Outcome {
    let mut r = rng(2);
    let mut worst_excess = f64::NEG_INFINITY;
    for p in [1.0, 2.0, f64::INFINITY] {
        for _ in 0..200 {
            let d = r.gen_range(1..=3);
            let rho = random_rho(&mut r, d);
            let y: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..=1.0)).collect();
            let v = random_sequence(&mut r, d, true);
            let tv = apply_t(&rho, &y, &v).unwrap();
            let bound = operator_norm_bound(&rho, &y, p).unwrap() * v.lp_norm(p);
            worst_excess = worst_excess.max(tv.lp_norm(p) - bound);
        }
    }
    let rho = WeightSequence::explicit(vec![2.0]).unwrap();
    let mut v = WeightedCoeffSeq::new(1, WeightTag::Origin);
    for k in 0..=60 {
        v.insert(MultiIndex::from_dense(vec![k]), vec![1.0]);
    }
    let ratio = apply_t(&rho, &[0.5], &v).unwrap().lp_norm(f64::INFINITY) / v.lp_norm(f64::INFINITY);
    let witness_ok = (ratio - 4.0 / 3.0).abs() <= 1e-6
        && (operator_norm_bound(&rho, &[0.5], f64::INFINITY).unwrap() - 4.0 / 3.0).abs() <= 1e-15;
    outcome(
        worst_excess <= 1e-10 && witness_ok,
        format!("max excess {worst_excess:.2e} (tol 1e-10), witness ratio {ratio:.9}"),
    )
}

/// All indices in the box `[0, k]^d`, sorted by the selection order.
fn exhaustive_order(rho: &WeightSequence, d: usize, k: u32) -> Vec<MultiIndex> {
    let log_w: Vec<f64> = (0..d).map(|j| rho.get(j).ln()).collect();
    let mut all = Vec::new();
    let mut cur = vec![0u32; d];
    loop {
        all.push(MultiIndex::from_dense(cur.clone()));
        let mut j = 0;
        while j < d && cur[j] == k {
            cur[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
        cur[j] += 1;
    }
    let mut keyed: Vec<(i64, u64, Vec<u32>, MultiIndex)> = all
        .into_iter()
        .map(|nu| {
            let lw: f64 = (0..d).map(|j| nu.get(j) as f64 * log_w[j]).sum();
            (quantize_log_weight(lw), nu.degree(), nu.dense(d), nu)
        })
        .collect();
    keyed.sort_by(|a, b| (a.0, a.1, &a.2).cmp(&(b.0, b.1, &b.2)));
    keyed.into_iter().map(|t| t.3).collect()
}

fn ac3() -> Outcome {
    let families = [
        ("explicit", WeightSequence::explicit(vec![2.0, 2.0, 3.5]).unwrap()),
        ("power", WeightSequence::power(2.0, 1.0, 3).unwrap()),
        ("geometric", WeightSequence::geometric(1.5, 2.0, 3).unwrap()),
    ];
    let mut checked = 0;
    for (name, rho) in &families {
        for d in 1..=3 {
            let order = exhaustive_order(rho, d, 41);
            for m in 0..=40usize {
                let got = top_terms(rho, m + 1, d).unwrap();
                if got.members() != &order[..m + 1] {
                    return outcome(false, format!("{name} d={d} m={m}: mismatch"));
                }
                if !is_lower_set(got.members()) {
                    return outcome(false, format!("{name} d={d} m={m}: not lower"));
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("{checked} selections match, all lower"))
}

fn ac4() -> Outcome {
    let mut r = rng(4);
    let mut worst = 0.0f64;
    for i in 0..20 {
        let d = 1 + i % 3;
        let rho = random_rho(&mut r, d);
        let q = r.gen_range(0.3..2.0);
        let bracket = f_star_lq_norm(&rho, q, 40).unwrap();
        let rhs = c_constant(&rho, q).unwrap() * rho.inverse_lq_norm(q);
        // exact value: prod_j (1 - rho_j^{-q})^{-1} - 1
        let exact = (rho.values().iter().map(|w| 1.0 / (1.0 - w.powf(-q))).product::<f64>() - 1.0)
            .powf(1.0 / q);
        if !(bracket.lower <= exact * (1.0 + 1e-12) && exact <= bracket.upper * (1.0 + 1e-12)) {
            return outcome(false, format!("bracket misses exact value in config {i}"));
        }
        if bracket.upper > rhs {
            return outcome(false, format!("config {i}: {} > {rhs}", bracket.upper));
        }
        worst = worst.max(bracket.upper / rhs);
    }
    outcome(true, format!("20 configs, max ratio F*-norm / (C ||rho^-1||_q) = {worst:.4}"))
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

fn ac5() -> Outcome {
    // p = inf, q = 2/3, so r = 1/2; rho_j = 2^j
    let profile = ExponentProfile::new(f64::INFINITY, 2.0 / 3.0).unwrap();
    let r = profile.rate();
    let mut details = Vec::new();
    let mut pass = true;
    for d in [1, 2, 4] {
        let rho = WeightSequence::explicit((1..=d).map(|j| 2f64.powi(j as i32)).collect()).unwrap();
        let model = TaylorModel::separable_rational(rho.clone());
        let norm = model.class_norm(&rho, profile.p()).unwrap().upper;
        let points = cell_points(&Cell::full_cube(), d, MC_SAMPLES, 5, d as u64);
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for m in 0..=20u64 {
            let set = top_terms(&rho, m as usize + 1, d).unwrap();
            let poly = LocalPolynomial::taylor(&model, &vec![0.0; d], set.members()).unwrap();
            let err = sup_error(&model, |y| poly.evaluate(y), &points);
            let bound = global_bound(norm, &rho, &profile, m).unwrap().value;
            if err > bound {
                pass = false;
                details.push(format!("d={d} m={m}: {err:.3e} > {bound:.3e}"));
            }
            xs.push((m as f64 + 1.0).ln());
            ys.push(err.ln());
        }
        let s = slope(&xs, &ys);
        if s > -r + 0.1 {
            pass = false;
        }
        details.push(format!("d={d} slope {s:.2}"));
    }
    outcome(pass, format!("{} (need <= {:.2})", details.join(", "), -r + 0.1))
}

struct LocalCase {
    name: &'static str,
    model: TaylorModel,
    profile: ExponentProfile,
}

fn local_cases() -> Vec<LocalCase> {
    let ws = |v: &[f64]| WeightSequence::explicit(v.to_vec()).unwrap();
    let poly_terms = vec![
        PolynomialTerm { index: MultiIndex::zero(), value: vec![1.0] },
        PolynomialTerm { index: MultiIndex::from_dense(vec![1]), value: vec![-0.4] },
        PolynomialTerm { index: MultiIndex::from_dense(vec![2, 1]), value: vec![0.3] },
        PolynomialTerm { index: MultiIndex::from_dense(vec![0, 3]), value: vec![0.05] },
        PolynomialTerm { index: MultiIndex::from_dense(vec![4]), value: vec![0.02] },
    ];
    vec![
        LocalCase {
            name: "separable-rational p=inf q=1/2",
            model: TaylorModel::separable_rational(ws(&[2.0, 4.0])),
            profile: ExponentProfile::new(f64::INFINITY, 0.5).unwrap(),
        },
        LocalCase {
            name: "scaled p=1 q=1",
            model: TaylorModel::scaled_separable(ws(&[2.0, 3.0, 5.0]), 0.6).unwrap(),
            profile: ExponentProfile::new(1.0, 1.0).unwrap(),
        },
        LocalCase {
            name: "scaled p=2 q=3/2",
            model: TaylorModel::scaled_separable(ws(&[1.5, 3.0]), 0.5).unwrap(),
            profile: ExponentProfile::new(2.0, 1.5).unwrap(),
        },
        LocalCase {
            name: "polynomial p=2 q=4/5",
            model: TaylorModel::finite_polynomial(ws(&[2.0, 3.0]), poly_terms).unwrap(),
            profile: ExponentProfile::new(2.0, 0.8).unwrap(),
        },
    ]
}

fn ac6() -> Outcome {
    let mut r = rng(6);
    let mut worst_v1 = 0.0f64;
    let mut worst_v2 = 0.0f64;
    let mut worst_agree = 0.0f64;
    let mut v1_checks = 0;
    for case in local_cases() {
        let (model, profile) = (&case.model, &case.profile);
        let rho = model.rho();
        let d = model.dim();
        let kappa = kappa_of(rho, profile);
        let norm_rho = model.class_norm(rho, profile.p()).unwrap().upper;
        let norm_kappa = model.class_norm(&kappa, 1.0).unwrap().upper;
        for i in 0..50u64 {
            let m = [0u64, 1, 3, 6, 10][i as usize % 5];
            let center: Vec<f64> = (0..d).map(|_| r.gen_range(-0.95..0.95)).collect();
            let half: Vec<f64> = center
                .iter()
                .map(|c: &f64| r.gen_range(0.02..=1.0) * (1.0 - c.abs()))
                .collect();
            let cell = Cell::new(center.clone(), half.clone()).unwrap();
            let points = cell_points(&cell, d, MC_SAMPLES, 6, i);

            let kt = recentered_weights(&kappa, &center, &half).unwrap();
            let set2 = top_terms(&kt, m as usize + 1, d).unwrap();
            let p2 = LocalPolynomial::taylor(model, &center, set2.members()).unwrap();
            let err2 = sup_error(model, |y| p2.evaluate(y), &points);
            let b2 = local_bound_v2(norm_kappa, rho, profile, &cell, m).unwrap().value;
            if err2 > b2 {
                return outcome(false, format!("{} cell {i}: v2 {err2:.3e} > {b2:.3e}", case.name));
            }
            worst_v2 = worst_v2.max(err2 / b2);

            if profile.q() <= 1.0 {
                let rt = recentered_weights(rho, &center, &half).unwrap();
                let set1 = top_terms(&rt, m as usize + 1, d).unwrap();
                let p1 = LocalPolynomial::taylor(model, &center, set1.members()).unwrap();
                let err1 = sup_error(model, |y| p1.evaluate(y), &points);
                let b1 = local_bound_v1(norm_rho, rho, profile, &cell, m).unwrap().value;
                if err1 > b1 {
                    return outcome(false, format!("{} cell {i}: v1 {err1:.3e} > {b1:.3e}", case.name));
                }
                worst_v1 = worst_v1.max(err1 / b1);
                v1_checks += 1;
                if profile.p() == 1.0 {
                    worst_agree = worst_agree.max((b1 - b2).abs() / b2);
                }
            }
        }
    }
    outcome(
        worst_agree <= 1e-12,
        format!(
            "200 cells, max err/v2 {worst_v2:.3}, {v1_checks} v1 checks max err/v1 {worst_v1:.3}, p=1 v1/v2 rel diff {worst_agree:.1e}"
        ),
    )
}

fn ac7() -> Outcome {
    let mut r = rng(7);
    let mut worst = 0.0f64;
    let mut min_beta = f64::INFINITY;
    for _ in 0..20 {
        let d = r.gen_range(1..=5);
        let mut vals: Vec<f64> = (0..d).map(|_| r.gen_range(1.05..20.0)).collect();
        vals.sort_by(f64::total_cmp);
        let rho = WeightSequence::explicit(vals).unwrap();
        let p = [1.0, 1.5, 2.0, 4.0, f64::INFINITY][r.gen_range(0..5)];
        let pc = if p == 1.0 { 3.0 } else if p == f64::INFINITY { 1.0 } else { p / (p - 1.0) };
        let q = r.gen_range(0.05..0.95) * pc;
        let prof = ExponentProfile::new(p, q).unwrap();
        let kappa = kappa_of(&rho, &prof);
        let c_rho = c_constant(&rho, q).unwrap();
        let c_kappa = c_constant(&kappa, prof.q_theta()).unwrap();
        worst = worst.max((c_kappa - c_rho.powf(prof.theta())).abs() / c_kappa);
        let n_rho = rho.inverse_lq_norm(q);
        let n_kappa = kappa.inverse_lq_norm(prof.q_theta());
        worst = worst.max((n_kappa - n_rho.powf(prof.theta())).abs() / n_kappa);
        min_beta = min_beta.min(beta_constant(rho.min(), q).unwrap());
    }
    outcome(
        worst <= 1e-12 && min_beta >= 1.0,
        format!("max relative deviation {worst:.1e}, min beta {min_beta:.6}"),
    )
}

/// Partition fixtures: `(name, model, profile, m)`; `eps` is half the global
/// `kappa`-bound, which is the `rho`-bound when `p = 1`.
fn fixtures() -> Vec<(&'static str, TaylorModel, ExponentProfile, u64)> {
    let ws = |v: &[f64]| WeightSequence::explicit(v.to_vec()).unwrap();
    let vector = ModelSpec::ScaledSeparable {
        rho: WeightSequence::geometric(1.5, 1.6, 3)
            .unwrap()
            .with_tail(TailConvention::Truncated),
        scale: 0.7,
        amplitudes: Some(vec![1.0, -0.5]),
    };
    vec![
        (
            "scaled d=2 p=1 q=1",
            TaylorModel::scaled_separable(ws(&[2.0, 4.0]), 0.5).unwrap(),
            ExponentProfile::new(1.0, 1.0).unwrap(),
            2,
        ),
        (
            "separable-rational d=2 p=inf q=1/2",
            TaylorModel::separable_rational(ws(&[2.0, 4.0])),
            ExponentProfile::new(f64::INFINITY, 0.5).unwrap(),
            2,
        ),
        (
            "geometric vector-valued d=3 p=2 q=1",
            TaylorModel::from_spec(vector).unwrap(),
            ExponentProfile::new(2.0, 1.0).unwrap(),
            3,
        ),
    ]
}

fn half_global(model: &TaylorModel, profile: &ExponentProfile, m: u64) -> f64 {
    let kappa = kappa_of(model.rho(), profile);
    let norm = model.class_norm(&kappa, 1.0).unwrap().upper;
    0.5 * global_kappa_bound(norm, model.rho(), profile, m).unwrap().value
}

fn ac8() -> Outcome {
    let mut notes = Vec::new();
    for (name, model, profile, m) in fixtures() {
        let eps = half_global(&model, &profile, m);
        let lib = build_library(&model, &profile, eps, m).unwrap();
        let grid = &lib.grid;
        let Some(eta) = grid.eta else {
            return outcome(false, format!("{name}: gate returned a single cell"));
        };
        // (a) tiling
        for l in &grid.ladders {
            let b = &l.breakpoints;
            let tiles = b[0] == -1.0
                && *b.last().unwrap() == 1.0
                && b.windows(2).all(|w| w[0] < w[1])
                && b.iter().zip(b.iter().rev()).all(|(x, y)| *x == -*y);
            if !tiles {
                return outcome(false, format!("{name}: ladder {} does not tile", l.dim));
            }
        }
        // (b) per-cell budget, including the uncut directions
        let kappa = kappa_of(model.rho(), &profile);
        let qt = profile.q_theta();
        for local in &lib.locals {
            let cut = cell_budget(&kappa, &local.cell, qt);
            let rest: f64 = (grid.j..model.dim()).map(|j| kappa.get(j).powf(-qt)).sum();
            if cut > 0.5 * eta + 1e-12 || cut + rest > eta {
                return outcome(false, format!("{name}: cell budget {} > eta {eta}", cut + rest));
            }
        }
        // (c) count bound
        let n = grid.cell_count.unwrap();
        if (n as f64) > grid.bound_on_n {
            return outcome(false, format!("{name}: N {n} > bound {}", grid.bound_on_n));
        }
        // (d) certification
        let report = certify(&lib, &model, MC_SAMPLES, 8).unwrap();
        if !(report.pass_eps && report.pass_dominance) {
            return outcome(
                false,
                format!("{name}: max error {:.3e} vs eps {eps:.3e}", report.max_measured),
            );
        }
        // (e) monotone in eps
        let mut prev: Option<(u64, Vec<usize>)> = None;
        for h in 0..=4 {
            let (_, g, _) = plan_partition(&model, &profile, eps / 2f64.powi(h), m).unwrap();
            let cur = (g.cell_count.unwrap(), g.ks());
            if let Some((pn, pk)) = &prev {
                let ks_ok = pk.iter().enumerate().all(|(j, k)| cur.1.get(j).map_or(false, |c| c >= k));
                if cur.0 < *pn || !ks_ok {
                    return outcome(false, format!("{name}: N decreased at halving {h}"));
                }
            }
            prev = Some(cur);
        }
        notes.push(format!(
            "{name}: N={n} <= {:.1}, max err {:.2e} <= eps {eps:.2e}",
            grid.bound_on_n, report.max_measured
        ));
    }
    outcome(true, notes.join("; "))
}

fn ac9() -> Outcome {
    // rho_j = 2 j, p = 1, q = 2: theta = 1, r = 1/2, predicted exponent
    // q / (theta (1 - s q)) = -2.
    let d = 4000;
    let rho = WeightSequence::power(2.0, 1.0, d).unwrap();
    let model = TaylorModel::scaled_separable(rho, 1e-5).unwrap();
    let profile = ExponentProfile::new(1.0, 2.0).unwrap();
    let (s, q, theta) = (1.0, profile.q(), profile.theta());
    let predicted = q / (theta * (1.0 - s * q));
    let m = 0u64;
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut table = Vec::new();
    for eps in [0.2, 0.2 / 2f64.sqrt(), 0.1, 0.1 / 2f64.sqrt(), 0.05] {
        let (_, grid, _) = match plan_partition(&model, &profile, eps, m) {
            Ok(v) => v,
            Err(e) => return outcome(false, format!("eps {eps}: {e}")),
        };
        let lambda = (m as f64 + 1.0).powf(profile.rate()) * eps;
        xs.push(lambda.ln());
        ys.push(grid.log_cell_count.ln());
        table.push(format!("eps={eps} J={} lnN={:.0}", grid.j, grid.log_cell_count));
        for (j, l) in grid.ladders.iter().enumerate() {
            let kj = kappa_of(model.rho(), &profile).get(j);
            if l.interval_count() as f64 > ladder_count_bound(kj, grid.sigma.unwrap()) + 1e-9 {
                return outcome(false, format!("eps {eps}: ladder {j} exceeds its count bound"));
            }
        }
    }
    let fitted = slope(&xs, &ys);
    let rel = (fitted / predicted - 1.0).abs();
    outcome(
        rel <= 0.25,
        format!(
            "fitted exponent {fitted:.3} vs predicted {predicted:.1} (rel {rel:.3}); {}",
            table.join(", ")
        ),
    )
}

fn ac10() -> Outcome {
    let (_, model, profile, m) = fixtures().remove(2);
    let eps = half_global(&model, &profile, m);
    let run = |threads: usize| -> (String, String) {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let lib = build_library(&model, &profile, eps, m).unwrap();
            let lib_json = lib.to_json().unwrap();
            let reloaded = SurrogateLibrary::from_json(&lib_json).unwrap();
            let report = certify(&reloaded, &model, 500, 42).unwrap();
            (lib_json, report.to_json().unwrap())
        })
    };
    let a = run(1);
    let b = run(4);
    let c = run(4);
    let mut bytes_seen = HashMap::new();
    bytes_seen.insert("library", a.0.len());
    bytes_seen.insert("report", a.1.len());
    outcome(
        a == b && b == c,
        format!(
            "library {} bytes, report {} bytes identical across 3 runs (1 and 4 threads)",
            bytes_seen["library"], bytes_seen["report"]
        ),
    )
}
