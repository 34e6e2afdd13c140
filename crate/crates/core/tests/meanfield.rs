use mallows_lab::grid::GridFunction2D;
use mallows_lab::limits::limit_density;
use mallows_lab::liouville::{liouville_residual, max_abs_residual};
use mallows_lab::marginal::MarginalDensity;
use mallows_lab::meanfield::{
    discrete_marginal, fixed_point_residual, gibbs_objective, h_convolution, ipfp, marginal_error, ElInit,
    EulerLagrangeSolver,
};
use mallows_lab::rng;
use rand::Rng;

/// Trapezoid weights of the nodes `0..=k` restricted to `[z_lo, z_hi]`.
fn sub_weights(n: usize, lo: usize, hi: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if hi > lo {
        for (a, wa) in w.iter_mut().enumerate().take(hi + 1).skip(lo) {
            *wa = if a == lo || a == hi { 0.5 * h } else { h };
        }
    }
    w
}

#[test]
fn prefix_sum_convolution_matches_direct_sum() {
    let mut r = rng::stream(77, 0);
    for &k in &[1usize, 2, 5, 16, 32] {
        let shape = GridFunction2D::unit_from_fn(k, |_, _| 0.0).unwrap();
        let u = shape.with_values((0..(k + 1) * (k + 1)).map(|_| r.gen::<f64>()).collect()).unwrap();
        let c = h_convolution(&u);
        let n = k + 1;
        let h = 1.0 / k as f64;
        for i in 0..n {
            let (left, right) = (sub_weights(n, 0, i, h), sub_weights(n, i, k, h));
            for j in 0..n {
                let (below, above) = (sub_weights(n, 0, j, h), sub_weights(n, j, k, h));
                let mut direct = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        direct += (left[a] * above[b] + right[a] * below[b]) * u.get(a, b);
                    }
                }
                assert!((direct - c.get(i, j)).abs() < 1e-12, "k={k} ({i},{j}): {direct} vs {}", c.get(i, j));
            }
        }
    }
}

#[test]
fn converged_density_is_a_fixed_point() {
    let one = MarginalDensity::uniform();
    let s = EulerLagrangeSolver::new(1.0, 512).solve(&one, &one).unwrap();
    let (res, _) = fixed_point_residual(&s.u, &one, &one, 1.0);
    assert!(res < 1e-6, "{res}");
}

#[test]
fn fixed_point_residual_is_second_order_in_the_mesh() {
    let f = MarginalDensity::linear(0.8).unwrap();
    let g = MarginalDensity::uniform();
    for &beta in &[-2.0, 1.0, 3.0] {
        let r: Vec<f64> = [48usize, 96]
            .iter()
            .map(|&k| {
                let s = EulerLagrangeSolver::new(beta, k).solve(&f, &g).unwrap();
                assert!(s.marginal_error < 1e-9);
                fixed_point_residual(&s.u, &f, &g, beta).0
            })
            .collect();
        assert!((r[0] / r[1]).log2() > 1.9, "beta={beta}: {r:?}");
    }
}

#[test]
fn product_and_uniform_starts_agree() {
    let f = MarginalDensity::linear(-0.5).unwrap();
    let g = MarginalDensity::linear(0.3).unwrap();
    for &beta in &[-3.0, 2.0] {
        let a = EulerLagrangeSolver::new(beta, 64).solve(&f, &g).unwrap();
        let b = EulerLagrangeSolver::new(beta, 64).with_init(ElInit::Uniform).solve(&f, &g).unwrap();
        assert!(a.u.sup_distance(&b.u) < 1e-8, "beta={beta}");
    }
}

#[test]
fn no_random_perturbation_improves_the_objective() {
    let one = MarginalDensity::uniform();
    let beta = 1.0;
    let cells = 48;
    let s = EulerLagrangeSolver::new(beta, cells).solve(&one, &one).unwrap();
    let best = gibbs_objective(&s.u, &one, &one, beta).unwrap().objective;
    let fx = discrete_marginal(&one, cells + 1);
    let mut r = rng::stream(31, 0);
    for trial in 0..100 {
        let (a, b, c) = (r.gen_range(-3.0..3.0), r.gen_range(-3.0..3.0), r.gen_range(0.01..0.2));
        let mut v = s.u.clone();
        for i in 0..v.nx() {
            for j in 0..v.ny() {
                let (x, y) = (v.x(i), v.y(j));
                let bump = (a * x + b * y + 5.0 * x * y).sin() + r.gen_range(-0.5..0.5);
                v.set(i, j, v.get(i, j) * (c * bump).exp());
            }
        }
        ipfp(&mut v, &fx, &fx, 1e-13, 100_000).unwrap();
        assert!(marginal_error(&v, &fx, &fx) < 1e-12);
        let other = gibbs_objective(&v, &one, &one, beta).unwrap().objective;
        assert!(other <= best, "trial {trial}: {other} > {best}");
    }
}

#[test]
fn converged_density_solves_liouville_under_refinement() {
    let one = MarginalDensity::uniform();
    let beta = 2.0;
    let r = |k| {
        let u = EulerLagrangeSolver::new(beta, k).solve(&one, &one).unwrap().u;
        max_abs_residual(&liouville_residual(&u, beta))
    };
    let (a, b) = (r(32), r(64));
    assert!(b < a, "{a} {b}");
    let u = EulerLagrangeSolver::new(beta, 64).solve(&one, &one).unwrap().u;
    assert!(u.sup_error_against(|x, y| limit_density(x, y, beta)) < 1e-2);
}
