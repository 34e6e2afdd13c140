//! Closed-form limit objects.
//!
//! The limiting density of the empirical measure of a Mallows permutation
//! with `q = 1 - β/n` is
//!
//! ```text
//! u(x, y; β) = (β/2) sinh(β/2) / (e^{β/4} cosh(β(x-y)/2) - e^{-β/4} cosh(β(x+y-1)/2))²
//! ```
//!
//! and the exclusion-process profile is its partial primitive
//! `ρ(x; y; β) = ∫₀ʸ u(x, y') dy'`.
//!
//! Every formula is 0/0 at `β = 0`; for `|β| < 1e-8` second-order Taylor
//! expansions are used instead. For `|β| > 30` the hyperbolic forms are
//! replaced by exponentially scaled ones so that `β` up to `1e4` and beyond
//! can be evaluated without overflow.

use crate::error::{LabError, Result};
use crate::marginal::MarginalDensity;

const SERIES_BETA: f64 = 1e-8;
const SCALED_BETA: f64 = 30.0;

/// `u(x, y; β)` from the hyperbolic closed form.
///
/// For `β > 0` the denominator is rewritten as
/// `2 sinh(β/4) cosh(β(x-y)/2) + 2 e^{-β/4} sinh(β(2x-1)/4) sinh(β(1-2y)/4)`,
/// whose second term is at most half the first, so no cancellation occurs.
/// Negative `β` uses the reflected form.
pub fn limit_density(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    if beta.abs() < SERIES_BETA {
        let (p, q) = (2.0 * x - 1.0, 2.0 * y - 1.0);
        let (s, t) = (6.0 * x * x - 6.0 * x + 1.0, 6.0 * y * y - 6.0 * y + 1.0);
        return 1.0 + 0.5 * beta * p * q + beta * beta * s * t / 12.0;
    }
    if beta > SCALED_BETA {
        return scaled_density(x, y, beta);
    }
    if beta < -SCALED_BETA {
        return scaled_density(1.0 - x, y, -beta);
    }
    let den = eq9_denominator(x, y, beta);
    debug_assert!(den.is_finite() && den * beta > 0.0, "denominator must be positive");
    0.5 * beta * (0.5 * beta).sinh() / (den * den)
}

/// Denominator of `u` in cancellation-free form. For `β < 0` the terms are
/// those of `-D(1-x, y; -β)`.
fn eq9_denominator(x: f64, y: f64, beta: f64) -> f64 {
    let q = 0.25 * beta;
    let corner = (q * (2.0 * x - 1.0)).sinh() * (q * (1.0 - 2.0 * y)).sinh();
    if beta > 0.0 {
        2.0 * q.sinh() * (0.5 * beta * (x - y)).cosh() + 2.0 * (-q).exp() * corner
    } else {
        2.0 * q.sinh() * (0.5 * beta * (1.0 - (x + y))).cosh() + 2.0 * q.exp() * corner
    }
}

/// `β > 0`: `u = β(1-e^{-β}) e^{-(M-m)} / B²` with `a = βx`, `b = βy`,
/// `m = min(a, b)`, `M = max(a, b)` and
/// `B = (1-e^{-M}) + e^{-(M-m)} (1-e^{-(β-M)})`.
fn scaled_density(x: f64, y: f64, beta: f64) -> f64 {
    let (a, b) = (beta * x, beta * y);
    let (m, big) = if a <= b { (a, b) } else { (b, a) };
    let gap = (-(big - m)).exp();
    let den = -(-big).exp_m1() + gap * -(-(beta - big)).exp_m1();
    beta * -(-beta).exp_m1() * gap / (den * den)
}

/// `u` through the composition `αφ(x)ψ(y) / (α - βΦ(x)Ψ(y))²` with
/// `α = β/(1-e^{-β})`, `φ(z) = ψ(z) = αe^{-βz}` and
/// `Φ(z) = Ψ(z) = (1-e^{-βz})/(1-e^{-β})`.
///
/// Algebraically identical to [`limit_density`] but evaluated independently;
/// intended as a cross-check for moderate `|β|`.
pub fn limit_density_lemma(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return 1.0;
    }
    let e = (-beta).exp_m1();
    let alpha = -beta / e;
    let (a, b) = ((-beta * x).exp(), (-beta * y).exp());
    let phi = alpha * a;
    let psi = alpha * b;
    // α - βΦ(x)Ψ(y) = β[(a - e^{-β}) + b(1 - a)]/(1 - e^{-β})², both terms of one sign
    let s = -a * (-beta * (1.0 - x)).exp_m1() - b * (-beta * x).exp_m1();
    let den = beta * s / (e * e);
    alpha * phi * psi / (den * den)
}

/// `β` with marginal densities `f` (in x) and `g` (in y).
#[derive(Debug, Clone)]
pub struct LimitDensityParams {
    pub beta: f64,
    pub f: MarginalDensity,
    pub g: MarginalDensity,
}

impl LimitDensityParams {
    pub fn uniform(beta: f64) -> Self {
        Self {
            beta,
            f: MarginalDensity::uniform(),
            g: MarginalDensity::uniform(),
        }
    }

    pub fn new(beta: f64, f: MarginalDensity, g: MarginalDensity) -> Result<Self> {
        if !beta.is_finite() {
            return Err(LabError::invalid(format!("beta must be finite, got {beta}")));
        }
        for (name, d) in [("f", &f), ("g", &g)] {
            let (lo, hi) = d.bounds();
            if !(lo > 0.0 && hi.is_finite()) {
                return Err(LabError::invalid(format!("{name} violates 0 < c <= {name} <= C")));
            }
        }
        Ok(Self { beta, f, g })
    }
}

/// `f(x) g(y) u(F(x), G(y); β)`: the fixed point with prescribed marginals.
pub fn limit_density_general(x: f64, y: f64, params: &LimitDensityParams) -> f64 {
    let (f, g) = (&params.f, &params.g);
    f.density(x) * g.density(y) * limit_density(f.cumulative(x), g.cumulative(y), params.beta)
}

/// `ρ(x; y; β) = (1-e^{-βy}) e^{-βx} / ((1-e^{-β}) - (1-e^{-βx})(1-e^{-βy}))`.
pub fn blocking_profile(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return y;
    }
    if beta.abs() < SERIES_BETA {
        let s = 6.0 * x * x - 6.0 * x + 1.0;
        return y
            + 0.5 * beta * y * (2.0 * x - 1.0) * (y - 1.0)
            + beta * beta * y * (y - 1.0) * (2.0 * y - 1.0) * s / 12.0;
    }
    if beta > 0.0 {
        let (a, b) = (beta * x, beta * y);
        let (m, big) = if a <= b { (a, b) } else { (b, a) };
        let gap = (-(big - m)).exp();
        let den = -(-big).exp_m1() + gap * -(-(beta - big)).exp_m1();
        return (-(a - m)).exp() * -(-b).exp_m1() / den;
    }
    if beta < -SCALED_BETA {
        return blocking_profile(1.0 - x, y, -beta);
    }
    let (ea, eb) = ((-beta * x).exp_m1(), (-beta * y).exp_m1());
    -eb * (-beta * x).exp() / (-(-beta).exp_m1() - ea * eb)
}

/// The equivalent form `e^{β(1/2-x)/2} sinh(βy/2) / D(x, y; β)` with `D` the
/// denominator of `u`. Valid for `0 < |β| ≤ 30`.
pub fn blocking_profile_hyperbolic(x: f64, y: f64, beta: f64) -> f64 {
    if beta == 0.0 {
        return y;
    }
    (0.5 * beta * (0.5 - x)).exp() * (0.5 * beta * y).sinh() / eq9_denominator(x, y, beta)
}

/// `ρ(y + t/β; y; β)`. As `β → ∞` this tends to the lattice profile
/// `1/(1 + e^t)` (see [`lattice_limit_curve`]).
pub fn profile_lattice_limit(t: f64, y: f64, beta: f64) -> Result<f64> {
    if !(y > 0.0 && y < 1.0) {
        return Err(LabError::invalid(format!("y must lie in (0, 1), got {y}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(LabError::invalid(format!("beta must be positive, got {beta}")));
    }
    let x = y + t / beta;
    if !(0.0..=1.0).contains(&x) {
        return Err(LabError::invalid(format!(
            "y + t/beta = {x} lies outside [0, 1]"
        )));
    }
    Ok(blocking_profile(x, y, beta))
}

/// Fermi profile `1/(1 + e^t)`.
pub fn lattice_limit_curve(t: f64) -> f64 {
    0.5 * (1.0 - (0.5 * t).tanh())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{integrate, integrate_rect};

    const BETAS: [f64; 9] = [-6.0, -2.0, -0.5, -1e-4, 1e-4, 0.5, 1.0, 2.0, 6.0];

    #[test]
    fn beta_zero_is_uniform() {
        for &(x, y) in &[(0.0, 0.0), (0.3, 0.9), (1.0, 0.5)] {
            assert_eq!(limit_density(x, y, 0.0), 1.0);
            assert_eq!(blocking_profile(x, y, 0.0), y);
        }
    }

    #[test]
    fn corner_value_is_alpha() {
        let alpha = 1.0 / (1.0 - (-1.0f64).exp());
        assert!((limit_density(0.0, 0.0, 1.0) - alpha).abs() < 1e-14);
    }

    #[test]
    fn two_routes_agree() {
        for &beta in &BETAS {
            for k in 0..=10 {
                for l in 0..=10 {
                    let (x, y) = (k as f64 / 10.0, l as f64 / 10.0);
                    let a = limit_density(x, y, beta);
                    let b = limit_density_lemma(x, y, beta);
                    assert!(((a - b) / b).abs() < 1e-12, "beta={beta} x={x} y={y}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn branches_are_continuous() {
        for &(x, y) in &[(0.1, 0.7), (0.5, 0.5), (0.9, 0.2), (1.0, 1.0)] {
            for &b0 in &[SERIES_BETA, SCALED_BETA, -SERIES_BETA, -SCALED_BETA] {
                let lo = limit_density(x, y, b0 * (1.0 - 1e-12));
                let hi = limit_density(x, y, b0 * (1.0 + 1e-12));
                assert!(((lo - hi) / hi).abs() < 1e-9, "u at beta={b0}");
                let lo = blocking_profile(x, y, b0 * (1.0 - 1e-12));
                let hi = blocking_profile(x, y, b0 * (1.0 + 1e-12));
                assert!((lo - hi).abs() < 1e-9, "rho at beta={b0}");
            }
        }
    }

    #[test]
    fn exact_symmetries_on_dyadic_points() {
        for &beta in &BETAS {
            for k in 0..=16 {
                for l in 0..=16 {
                    let (x, y) = (k as f64 / 16.0, l as f64 / 16.0);
                    let u = limit_density(x, y, beta);
                    assert_eq!(u, limit_density(y, x, beta));
                    assert_eq!(u, limit_density(1.0 - x, 1.0 - y, beta));
                    let r = limit_density(1.0 - x, y, -beta);
                    assert!(((u - r) / u).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn normalized_with_uniform_marginals() {
        for &beta in &[-4.0, -1.0, 0.5, 2.0, 6.0] {
            let total = integrate_rect(|x, y| limit_density(x, y, beta), (0.0, 1.0), (0.0, 1.0), 1e-11);
            assert!((total - 1.0).abs() < 1e-8, "beta={beta}: {total}");
            for k in 0..20 {
                let x = (k as f64 + 0.5) / 20.0;
                let m = integrate(|y| limit_density(x, y, beta), 0.0, 1.0, 1e-12, 0.0).value;
                assert!((m - 1.0).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn large_beta_is_finite() {
        for &beta in &[50.0, 1e3, 1e4, -1e4] {
            for &(x, y) in &[(0.0, 0.0), (0.5, 0.5), (0.2, 0.8), (1.0, 0.0)] {
                let u = limit_density(x, y, beta);
                assert!(u.is_finite() && u >= 0.0, "beta={beta}: {u}");
                let r = blocking_profile(x, y, beta);
                assert!((0.0..=1.0).contains(&r));
            }
        }
    }

    #[test]
    fn rho_is_primitive_of_u() {
        let q = integrate(|y| limit_density(0.3, y, 2.0), 0.0, 0.6, 1e-13, 0.0).value;
        assert!((blocking_profile(0.3, 0.6, 2.0) - q).abs() < 1e-10);
        for &beta in &BETAS {
            for k in 0..=10 {
                let x = k as f64 / 10.0;
                assert!((blocking_profile(x, 1.0, beta) - 1.0).abs() < 1e-13);
                let h = blocking_profile_hyperbolic(x, 0.35, beta);
                assert!((h - blocking_profile(x, 0.35, beta)).abs() < 1e-12);
                assert!(
                    (blocking_profile(x, 0.35, beta) - blocking_profile(1.0 - x, 0.35, -beta)).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn rho_decreases_in_x_for_positive_beta() {
        let mut last = f64::INFINITY;
        for k in 0..=50 {
            let r = blocking_profile(k as f64 / 50.0, 0.4, 3.0);
            assert!(r < last);
            last = r;
        }
    }

    #[test]
    fn lattice_collapse() {
        assert!((profile_lattice_limit(0.0, 0.5, 50.0).unwrap() - 0.5).abs() < 0.02);
        let v = profile_lattice_limit(-5.0, 0.5, 50.0).unwrap();
        assert!((v - lattice_limit_curve(-5.0)).abs() < 0.02);
        let v = profile_lattice_limit(1.0, 0.5, 1e4).unwrap();
        assert!((v - 1.0 / (1.0 + 1f64.exp())).abs() < 1e-3);
        assert!(profile_lattice_limit(30.0, 0.5, 50.0).is_err());
        assert!(profile_lattice_limit(0.0, 1.0, 50.0).is_err());
    }

    #[test]
    fn general_reduces_to_uniform() {
        for &beta in &[-2.0, 0.0, 3.0] {
            let p = LimitDensityParams::uniform(beta);
            for k in 0..=8 {
                for l in 0..=8 {
                    let (x, y) = (k as f64 / 8.0, l as f64 / 8.0);
                    assert_eq!(limit_density_general(x, y, &p), limit_density(x, y, beta));
                }
            }
        }
        let f = MarginalDensity::linear(1.0).unwrap();
        let p = LimitDensityParams::new(0.0, f.clone(), MarginalDensity::uniform()).unwrap();
        assert!((limit_density_general(0.4, 0.1, &p) - f.density(0.4)).abs() < 1e-15);
    }
}
