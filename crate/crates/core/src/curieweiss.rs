//! Curie–Weiss model with `N` spins, coupling `t ≥ 0` and field `x`.
//!
//! Pressure `p_N(t, x) = (1/N) ln Σ_σ exp(N(t m²/2 + x m))` with
//! `m = (1/N) Σ σ_i`. Sums over configurations are reduced to the `N + 1`
//! magnetization sectors. The magnetization `u_N = ∂p_N/∂x` solves the viscous
//! Burgers equation `∂_t u = u ∂_x u + (1/2N) ∂²_x u` with `u_N(0, x) = tanh x`.

use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::quad;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CwParams {
    n: usize,
    t: f64,
    x: f64,
}

impl CwParams {
    pub fn new(n: usize, t: f64, x: f64) -> Result<Self> {
        if n == 0 {
            return Err(LabError::invalid("need at least one spin"));
        }
        if !(t >= 0.0 && t.is_finite()) {
            return Err(LabError::invalid(format!("coupling t must be nonnegative, got {t}")));
        }
        if !x.is_finite() {
            return Err(LabError::invalid(format!("field must be finite, got {x}")));
        }
        Ok(Self { n, t, x })
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn t(&self) -> f64 {
        self.t
    }
    pub fn x(&self) -> f64 {
        self.x
    }
}

/// `ln C(N, j)` for `j = 0..=N`.
fn log_binomials(n: usize) -> Vec<f64> {
    let lnf = ln_gamma(n as f64 + 1.0);
    (0..=n)
        .map(|j| lnf - ln_gamma(j as f64 + 1.0) - ln_gamma((n - j) as f64 + 1.0))
        .collect()
}

/// Log-weights `ln C(N, j) + N(t m²/2 + x m)` of the sectors
/// `m = (2j - N)/N`. Negative `t` is accepted here so that central
/// differences in `t` can straddle `t = 0`.
fn sector_log_weights(lc: &[f64], t: f64, x: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
    let nf = (lc.len() - 1) as f64;
    lc.iter().enumerate().map(move |(j, &l)| {
        let m = (2.0 * j as f64 - nf) / nf;
        (m, l + nf * (0.5 * t * m * m + x * m))
    })
}

/// `(⟨m⟩, ⟨m²⟩)` from the sector weights.
fn moments_with(lc: &[f64], t: f64, x: f64) -> (f64, f64) {
    let max = sector_log_weights(lc, t, x).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let (mut z, mut m1, mut m2) = (0.0, 0.0, 0.0);
    for (m, lw) in sector_log_weights(lc, t, x) {
        let e = (lw - max).exp();
        z += e;
        m1 += e * m;
        m2 += e * m * m;
    }
    (m1 / z, m2 / z)
}

fn raw_moments(n: usize, t: f64, x: f64) -> (f64, f64) {
    moments_with(&log_binomials(n), t, x)
}

fn pressure_raw(n: usize, t: f64, x: f64) -> f64 {
    let lc = log_binomials(n);
    let max = sector_log_weights(&lc, t, x).map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = sector_log_weights(&lc, t, x).map(|p| (p.1 - max).exp()).sum();
    (max + sum.ln()) / n as f64
}

/// Exact pressure by log-sum-exp over the `N + 1` sectors.
pub fn cw_pressure_exact(params: &CwParams) -> f64 {
    pressure_raw(params.n, params.t, params.x)
}

/// `⟨m_N⟩`.
pub fn cw_magnetization(params: &CwParams) -> f64 {
    raw_moments(params.n, params.t, params.x).0
}

/// `(⟨m_N⟩, ⟨m_N²⟩)`.
pub fn cw_moments(params: &CwParams) -> (f64, f64) {
    raw_moments(params.n, params.t, params.x)
}

/// `ln(2 cosh z)` without overflow.
fn ln_2cosh(z: f64) -> f64 {
    let a = z.abs();
    a + (-2.0 * a).exp().ln_1p()
}

/// Pressure through the Hubbard–Stratonovich representation
///
/// ```text
/// p_N = (1/N) ln ∫ √(Nt/2π) exp(N(ln 2cosh(x + ty) - t y²/2)) dy
/// ```
///
/// integrated adaptively over `[-1 - 10/√(Nt), 1 + 10/√(Nt)]`, which
/// contains every saddle `y = tanh(x + ty)` with a margin of ten standard
/// deviations. Requires `t > 0`.
pub fn cw_pressure_hs(params: &CwParams) -> Result<f64> {
    let (n, t, x) = (params.n as f64, params.t, params.x);
    if t <= 0.0 {
        return Err(LabError::invalid("the Hubbard-Stratonovich route needs t > 0"));
    }
    let g = |y: f64| ln_2cosh(x + t * y) - 0.5 * t * y * y;
    // saddles solve y = tanh(x + ty); the global maximum is one of the
    // outermost fixed points
    let saddle = |mut y: f64| {
        for _ in 0..10_000 {
            let next = (x + t * y).tanh();
            if (next - y).abs() < 1e-15 {
                return next;
            }
            y = next;
        }
        y
    };
    let gmax = g(saddle(1.0)).max(g(saddle(-1.0)));
    let pad = 10.0 / (n * t).sqrt();
    let (a, b) = (-1.0 - pad, 1.0 + pad);
    let integrand = |y: f64| (n * (g(y) - gmax)).exp();
    // split at the saddles so each panel holds at most one peak
    let mut cuts = vec![a, saddle(-1.0), saddle(1.0), b];
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let integral: f64 = cuts
        .windows(2)
        .map(|w| quad::integrate(integrand, w[0], w[1], 0.0, 1e-14).value)
        .sum();
    Ok(gmax + (integral * (n * t / (2.0 * std::f64::consts::PI)).sqrt()).ln() / n)
}

/// Finite-difference residual of the viscous Burgers equation on a tensor
/// grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BurgersResidual {
    pub n: usize,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `residual[a][b]` at `(t[a], x[b])`.
    pub residual: Vec<Vec<f64>>,
    pub max_abs: f64,
}

/// `∂_t u - u ∂_x u - (1/2N) ∂²_x u` at every `(t, x)` of the grids, with
/// `u = cw_magnetization` and second-order central differences of steps
/// `h_t = t[1] - t[0]` and `h_x = x[1] - x[0]` (a single-point grid reuses
/// the step of the other axis). Stencils may reach `t < 0`, where the sector
/// sum remains well defined.
pub fn burgers_residual(n: usize, t_grid: &[f64], x_grid: &[f64]) -> Result<BurgersResidual> {
    if n == 0 {
        return Err(LabError::invalid("need at least one spin"));
    }
    if t_grid.is_empty() || x_grid.is_empty() {
        return Err(LabError::invalid("grids must be nonempty"));
    }
    let step = |g: &[f64]| if g.len() > 1 { Some(g[1] - g[0]) } else { None };
    let (ht, hx) = match (step(t_grid), step(x_grid)) {
        (Some(a), Some(b)) => (a, b),
        (Some(a), None) => (a, a),
        (None, Some(b)) => (b, b),
        (None, None) => return Err(LabError::invalid("need a grid step on at least one axis")),
    };
    if !(ht > 0.0 && hx > 0.0) {
        return Err(LabError::invalid("grids must be increasing"));
    }
    if t_grid.iter().any(|&t| t < 0.0) {
        return Err(LabError::invalid("t must be nonnegative"));
    }
    let lc = log_binomials(n);
    let u = |t: f64, x: f64| moments_with(&lc, t, x).0;
    let visc = 0.5 / n as f64;
    let residual: Vec<Vec<f64>> = t_grid
        .par_iter()
        .map(|&t| {
            x_grid
                .iter()
                .map(|&x| burgers_terms(&u, t, x, ht, hx, visc).residual())
                .collect()
        })
        .collect();
    let max_abs = residual
        .iter()
        .flatten()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(BurgersResidual {
        n,
        t: t_grid.to_vec(),
        x: x_grid.to_vec(),
        residual,
        max_abs,
    })
}

/// The separate terms of the Burgers balance at one point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BurgersTerms {
    pub u: f64,
    pub u_t: f64,
    pub u_x: f64,
    pub u_xx: f64,
    pub viscosity: f64,
}

impl BurgersTerms {
    pub fn residual(&self) -> f64 {
        self.u_t - self.u * self.u_x - self.viscosity * self.u_xx
    }

    /// `∂_t u - u ∂_x u`, the inviscid part.
    pub fn inviscid_residual(&self) -> f64 {
        self.u_t - self.u * self.u_x
    }
}

fn burgers_terms<U: Fn(f64, f64) -> f64>(u: &U, t: f64, x: f64, ht: f64, hx: f64, visc: f64) -> BurgersTerms {
    let c = u(t, x);
    let (xp, xm) = (u(t, x + hx), u(t, x - hx));
    BurgersTerms {
        u: c,
        u_t: (u(t + ht, x) - u(t - ht, x)) / (2.0 * ht),
        u_x: (xp - xm) / (2.0 * hx),
        u_xx: (xp - 2.0 * c + xm) / (hx * hx),
        viscosity: visc,
    }
}

/// Burgers terms at `(t, x)` for `N` spins, with step `h` in both axes.
pub fn burgers_terms_at(n: usize, t: f64, x: f64, h: f64) -> BurgersTerms {
    let lc = log_binomials(n);
    burgers_terms(&|t, x| moments_with(&lc, t, x).0, t, x, h, h, 0.5 / n as f64)
}

/// `p_N(t, x)` without the `t ≥ 0` check, for difference quotients.
pub fn cw_pressure_unchecked(n: usize, t: f64, x: f64) -> f64 {
    pressure_raw(n, t, x)
}
