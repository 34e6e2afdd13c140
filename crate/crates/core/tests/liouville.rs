use mallows_lab::grid::GridFunction2D;
use mallows_lab::limits::limit_density;
use mallows_lab::liouville::{
    existence_margin, liouville_residual, max_abs_residual, scaling_transform, solve_cauchy, CauchyData,
    CauchySolver, FnMap, IdentityMap, Profile,
};
use mallows_lab::LabError;

#[test]
fn perturbed_starts_reach_the_same_fixed_point() {
    let beta = 1.5;
    let data = CauchyData::exponential(beta).unwrap();
    let base = solve_cauchy(&data, beta, 64).unwrap();
    for &s in &[0.5, 1.5] {
        let start = base.u.map(|v| s * v);
        let other = CauchySolver::new(beta, 64).with_initial(start).solve(&data).unwrap();
        assert!(other.u.sup_distance(&base.u) < 1e-10, "scale {s}");
    }
    // a non-uniform perturbation of the default start
    let wobble = GridFunction2D::unit_from_fn(64, |x, y| 1.0 + 0.5 * (7.0 * x * y).sin()).unwrap();
    let other = CauchySolver::new(beta, 64).with_initial(wobble).solve(&data).unwrap();
    assert!(other.u.sup_distance(&base.u) < 1e-10);
}

#[test]
fn second_order_refinement_against_scaling_solution() {
    for &beta in &[-1.0, -3.0, 0.5, 0.9] {
        let data = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
        let exact = |x: f64, y: f64| (1.0 - beta * x * y).powi(-2);
        let e: Vec<f64> = [50usize, 100, 200]
            .iter()
            .map(|&k| solve_cauchy(&data, beta, k).unwrap().u.sup_error_against(exact))
            .collect();
        for w in e.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "beta={beta}: {e:?}");
        }
    }
}

#[test]
fn geometric_convergence_away_from_the_boundary() {
    let data = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
    for &beta in &[-2.0, 0.5] {
        let s = solve_cauchy(&data, beta, 100).unwrap();
        assert!(s.contraction < 1.0, "beta={beta}: {}", s.contraction);
    }
}

#[test]
fn boundary_rows_reproduce_the_data() {
    let beta = 2.0;
    let data = CauchyData::exponential(beta).unwrap();
    let s = solve_cauchy(&data, beta, 128).unwrap();
    for k in 0..s.u.nx() {
        let x = s.u.x(k);
        assert!((s.u.get(k, 0) - data.phi().value(x)).abs() < 1e-12);
        assert!((s.u.get(0, k) - data.psi().value(x)).abs() < 1e-12);
    }
    assert!(s.u.sup_error_against(|x, y| limit_density(x, y, beta)) < 1e-4);
}

#[test]
fn refusal_at_and_beyond_the_existence_boundary() {
    let data = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
    assert!((existence_margin(&data, 1.0)).abs() < 1e-15);
    assert!(matches!(solve_cauchy(&data, 1.0, 20), Err(LabError::ExistenceViolated { .. })));
    assert!(matches!(solve_cauchy(&data, 2.0, 20), Err(LabError::ExistenceViolated { .. })));
    assert_eq!(existence_margin(&data, -1.0), f64::INFINITY);
}

#[test]
fn rectangular_domains() {
    let (alpha, beta, l1, l2) = (2.0, 0.5, 1.5, 0.5);
    let data = CauchyData::constant(alpha, l1, l2).unwrap();
    let err = |k| solve_cauchy(&data, beta, k).unwrap().u.sup_error_against(|x, y| data.exact_solution(x, y, beta));
    let (a, b) = (err(80), err(160));
    assert!((a / b).log2() > 1.9 && b < 1e-2, "{a} {b}");
    assert!((data.exact_solution(0.3, 0.2, beta) - alpha / (1.0 - beta * alpha * 0.06).powi(2)).abs() < 1e-12);
}

#[test]
fn scaling_transform_flattens_exponential_data() {
    let beta = 2.0;
    let cells = 400;
    let u = solve_cauchy(&CauchyData::exponential(beta).unwrap(), beta, cells).unwrap().u;
    let alpha = beta / -(-beta).exp_m1();
    let len = 1.0 / alpha;
    // F = Φ^{-1}(αx) turns φ into the constant α
    let fmap = FnMap { value: |x: f64| -(-beta * x).ln_1p() / beta, derivative: |x: f64| 1.0 / (1.0 - beta * x) };
    let target = GridFunction2D::zeros(cells, cells, len, len).unwrap();
    let v = scaling_transform(&u, &fmap, &fmap, &target).unwrap();
    let flat = |x: f64, y: f64| alpha / (1.0 - beta * alpha * x * y).powi(2);
    let peak = v.sup_norm();
    assert!(v.sup_error_against(flat) < 1e-5 * peak);
    let direct = solve_cauchy(&CauchyData::constant(alpha, len, len).unwrap(), beta, cells).unwrap().u;
    assert!(v.sup_distance(&direct) < 1e-3 * peak);
    let same = scaling_transform(&u, &IdentityMap, &IdentityMap, &u).unwrap();
    assert_eq!(same.values(), u.values());
}

#[test]
fn discrete_residual_vanishes_under_refinement() {
    let beta = -1.5;
    let data = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
    let r = |k| max_abs_residual(&liouville_residual(&solve_cauchy(&data, beta, k).unwrap().u, beta));
    let (a, b) = (r(50), r(100));
    assert!(b < a && b < 1e-3, "{a} {b}");
}

#[test]
fn tabulated_data_matches_closed_data() {
    let beta: f64 = 1.0;
    let coords: Vec<f64> = (0..=2000).map(|k| k as f64 / 2000.0).collect();
    let e = -(-beta).exp_m1();
    let values: Vec<f64> = coords.iter().map(|z| beta * (-beta * z).exp() / e).collect();
    let p = || Profile::from_table(coords.clone(), values.clone()).unwrap();
    let data = CauchyData::new(p(), p()).unwrap();
    let s = solve_cauchy(&data, beta, 200).unwrap();
    assert!(s.u.sup_error_against(|x, y| limit_density(x, y, beta)) < 1e-4);
}
