use aniso_taylor::bounds::global_kappa_bound;
use aniso_taylor::surrogate::{build_library_with, BuildOptions};
use aniso_taylor::*;
use approx::assert_relative_eq;

fn ws(v: &[f64]) -> WeightSequence {
    WeightSequence::explicit(v.to_vec()).unwrap()
}

fn mi(v: &[u32]) -> MultiIndex {
    MultiIndex::from_dense(v.to_vec())
}

fn half_kappa_bound(model: &TaylorModel, profile: &ExponentProfile, m: u64) -> f64 {
    let kappa = kappa_of(model.rho(), profile);
    let norm = model.class_norm(&kappa, 1.0).unwrap().upper;
    0.5 * global_kappa_bound(norm, model.rho(), profile, m).unwrap().value
}

fn fixture() -> (TaylorModel, ExponentProfile, u64, f64) {
    let model = TaylorModel::scaled_separable(ws(&[2.0, 4.0]), 0.5).unwrap();
    let profile = ExponentProfile::new(1.0, 1.0).unwrap();
    let eps = half_kappa_bound(&model, &profile, 2);
    (model, profile, 2, eps)
}

#[test]
fn fixture_regression() {
    let (model, profile, m, eps) = fixture();
    assert_relative_eq!(eps, 2.0 * 2f64.sqrt() * 2f64.ln(), max_relative = 1e-12);
    let lib = build_library(&model, &profile, eps, m).unwrap();
    let grid = &lib.grid;
    assert_eq!(grid.j, 2);
    assert_eq!(grid.cell_count, Some(45));
    assert_eq!(lib.len(), 45);
    assert!(45.0 <= grid.bound_on_n);
    let eta = grid.eta.unwrap();
    assert_relative_eq!(eta, 3.0 * eps / (4.0 * c_constant(&ws(&[2.0, 4.0]), 1.0).unwrap()), max_relative = 1e-12);
    assert_relative_eq!(grid.sigma.unwrap(), eta / 4.0, max_relative = 1e-12);
    for local in &lib.locals {
        assert_eq!(local.index_set.len(), 3);
        assert!(local.index_set.contains(&MultiIndex::zero()));
    }
}

#[test]
fn fixture_certifies() {
    let (model, profile, m, eps) = fixture();
    let lib = build_library(&model, &profile, eps, m).unwrap();
    let report = certify(&lib, &model, 2000, 11).unwrap();
    assert!(report.passed());
    assert!(report.bounds_meet_eps);
    assert!(report.max_measured <= eps);
    assert_eq!(report.cells.len(), 45);
    assert!(report.ratios.max <= 1.0);
}

#[test]
fn halving_eps_never_increases_certified_error() {
    let model = TaylorModel::scaled_separable(ws(&[2.0, 3.0]), 0.7).unwrap();
    let profile = ExponentProfile::new(1.0, 1.0).unwrap();
    let mut eps = half_kappa_bound(&model, &profile, 1);
    let mut prev_bound = f64::INFINITY;
    for _ in 0..3 {
        let lib = build_library(&model, &profile, eps, 1).unwrap();
        let rep = certify(&lib, &model, 300, 3).unwrap();
        assert!(rep.passed());
        assert!(rep.max_bound_v2 <= prev_bound);
        prev_bound = rep.max_bound_v2;
        eps /= 2.0;
    }
}

#[test]
fn query_matches_closed_form_example() {
    let u = TaylorModel::separable_rational(ws(&[2.0]));
    let poly = LocalPolynomial::taylor(&u, &[0.5], &[MultiIndex::zero(), mi(&[1])]).unwrap();
    assert_relative_eq!(poly.evaluate(&[0.6])[0], 4.0 / 3.0 + 0.1 * 8.0 / 9.0, max_relative = 1e-14);
}

#[test]
fn query_at_center_returns_offset() {
    let (model, profile, m, eps) = fixture();
    let lib = build_library(&model, &profile, eps, m).unwrap();
    for local in &lib.locals {
        let c = local.cell.center_in(2);
        let i = lib.locate(&c).unwrap();
        assert_eq!(&lib.locals[i].cell, &local.cell);
        assert_eq!(lib.query(&c).unwrap(), local.affine_offset);
        assert_relative_eq!(local.affine_offset[0], model.evaluate(&c).unwrap()[0], max_relative = 1e-14);
    }
    assert!(matches!(lib.query(&[1.5, 0.0]), Err(Error::OutsideCube { .. })));
    assert!(matches!(lib.query(&[0.0]), Err(Error::DimensionMismatch { .. })));
}

#[test]
fn polynomial_is_reproduced() {
    // support {0, e1, e2}: contained in every 3-term lower set on 2 coordinates
    // whose weights put both first-order terms ahead of second order ones
    let terms = vec![
        PolynomialTerm { index: MultiIndex::zero(), value: vec![0.5] },
        PolynomialTerm { index: mi(&[1]), value: vec![0.25] },
        PolynomialTerm { index: mi(&[0, 1]), value: vec![-0.125] },
    ];
    let model = TaylorModel::finite_polynomial(ws(&[3.0, 3.5]), terms).unwrap();
    let profile = ExponentProfile::new(1.0, 1.0).unwrap();
    let eps = half_kappa_bound(&model, &profile, 2) / 4.0;
    let lib = build_library(&model, &profile, eps, 2).unwrap();
    assert!(lib.len() > 1);
    for local in &lib.locals {
        for t in [mi(&[]), mi(&[1]), mi(&[0, 1])] {
            assert!(local.index_set.contains(&t));
        }
    }
    let report = certify(&lib, &model, 200, 1).unwrap();
    assert!(report.max_measured <= 1e-12);
}

#[test]
fn single_cell_and_constant_libraries() {
    let (model, profile, _, _) = fixture();
    let lib = build_library(&model, &profile, 1e3, 4).unwrap();
    assert_eq!(lib.len(), 1);
    assert!(lib.grid.is_single_cell());
    let lib0 = build_library(&model, &profile, 0.5, 0).unwrap();
    for y in [[0.1, 0.2], [-0.7, 0.95]] {
        let i = lib0.locate(&y).unwrap();
        let c = lib0.locals[i].cell.center_in(2);
        assert_eq!(lib0.query(&y).unwrap(), model.evaluate(&c).unwrap());
    }
}

#[test]
fn vector_valued_library() {
    let spec = ModelSpec::ScaledSeparable {
        rho: ws(&[2.0, 3.0]),
        scale: 0.8,
        amplitudes: Some(vec![1.0, -2.0, 0.5]),
    };
    let model = TaylorModel::from_spec(spec).unwrap();
    let profile = ExponentProfile::new(2.0, 1.0).unwrap();
    let eps = half_kappa_bound(&model, &profile, 2);
    let lib = build_library(&model, &profile, eps, 2).unwrap();
    assert_eq!(lib.output_dim, 3);
    assert_eq!(lib.query(&[0.3, -0.3]).unwrap().len(), 3);
    assert!(certify(&lib, &model, 200, 5).unwrap().passed());
}

#[test]
fn library_file_is_versioned() {
    let (model, profile, m, eps) = fixture();
    let lib = build_library(&model, &profile, eps, m).unwrap();
    let text = lib.to_json().unwrap();
    assert_eq!(SurrogateLibrary::from_json(&text).unwrap(), lib);
    let wrong_version = text.replacen("\"version\": 1", "\"version\": 9", 1);
    assert!(matches!(SurrogateLibrary::from_json(&wrong_version), Err(Error::Format(_))));
    let truncated = &text[..text.len() / 2];
    assert!(matches!(SurrogateLibrary::from_json(truncated), Err(Error::Format(_))));
}

#[test]
fn certification_is_deterministic() {
    let (model, profile, m, eps) = fixture();
    let lib = build_library(&model, &profile, eps, m).unwrap();
    let a = certify(&lib, &model, 100, 9).unwrap().to_json().unwrap();
    let b = certify(&lib, &model, 100, 9).unwrap().to_json().unwrap();
    let c = certify(&lib, &model, 100, 10).unwrap().to_json().unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn cell_limit_is_enforced() {
    let (model, profile, m, eps) = fixture();
    let err = build_library_with(&model, &profile, eps, m, BuildOptions { max_cells: 10 });
    assert!(matches!(err, Err(Error::Infeasible(_))));
}

#[test]
fn hypothesis_errors_are_named() {
    let err = ExponentProfile::new(2.0, 2.5).unwrap_err();
    assert!(err.to_string().contains("q < p/(p-1) violated"));
    let decreasing = TaylorModel::scaled_separable(ws(&[4.0, 2.0]), 0.5).unwrap();
    let profile = ExponentProfile::new(1.0, 1.0).unwrap();
    let err = build_library(&decreasing, &profile, 0.1, 1).unwrap_err();
    assert!(err.to_string().contains("nondecreasing"));
    let sep = TaylorModel::separable_rational(ws(&[2.0, 4.0]));
    assert!(matches!(build_library(&sep, &profile, 0.1, 1), Err(Error::Divergent(_))));
}
