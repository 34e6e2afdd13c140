//! Exact q-combinatorics of the Mallows normalization.
//!
//! The Mallows weight `q^{inv(π)}` is normalized by the Poincaré polynomial
//! `P_n(q) = [n]_q! = ∏_{k=1}^n [k]_q`. Its product form means the inversion
//! count is a sum of independent truncated geometric variables
//! `Z_j ∈ {0, …, j-1}` with `P(Z_j = k) ∝ q^k`; the moment formulas below use
//! that factorization directly.
//!
//! Everything that touches `[n]_q!` is computed in log space; at `q = 1` it
//! already overflows an `f64` near `n = 170`.

use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{LabError, Result};
use crate::quad;

/// Which map from `(n, β)` to `q` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum QConvention {
    /// `q = exp(-β/(n-1))`, the Boltzmann weight of the normalized Hamiltonian.
    Exp,
    /// `q = 1 - β/n`, the weakly-asymmetric scaling.
    #[default]
    Lin,
}

/// System size and inverse temperature of a Mallows measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MallowsParams {
    n: usize,
    beta: f64,
}

impl MallowsParams {
    pub fn new(n: usize, beta: f64) -> Result<Self> {
        if n < 1 {
            return Err(LabError::invalid("n must be at least 1"));
        }
        if !beta.is_finite() {
            return Err(LabError::invalid(format!("beta must be finite, got {beta}")));
        }
        Ok(Self { n, beta })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `exp(-β/(n-1))`; equal to 1 when `n = 1` (the weight is irrelevant there).
    pub fn q_exp(&self) -> f64 {
        if self.n < 2 || self.beta == 0.0 {
            1.0
        } else {
            (-self.beta / (self.n - 1) as f64).exp()
        }
    }

    /// `1 - β/n`; non-positive once `β ≥ n`.
    pub fn q_lin(&self) -> f64 {
        1.0 - self.beta / self.n as f64
    }

    pub fn q(&self, convention: QConvention) -> Result<f64> {
        let q = match convention {
            QConvention::Exp => self.q_exp(),
            QConvention::Lin => self.q_lin(),
        };
        if q > 0.0 && q.is_finite() {
            Ok(q)
        } else {
            Err(LabError::invalid(format!(
                "q = {q} is not positive under the {convention:?} convention (n = {}, beta = {})",
                self.n, self.beta
            )))
        }
    }
}

/// Size tag of a pressure value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PressureSize {
    Finite(usize),
    Limit,
}

impl Serialize for PressureSize {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            PressureSize::Finite(n) => s.serialize_u64(*n as u64),
            PressureSize::Limit => s.serialize_str("limit"),
        }
    }
}

/// `p_n(β)` or its limit `p(β)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PressureValue {
    pub value: f64,
    pub n: PressureSize,
}

fn check_q(q: f64) -> Result<()> {
    if q > 0.0 && q.is_finite() {
        Ok(())
    } else {
        Err(LabError::invalid(format!("q must be positive and finite, got {q}")))
    }
}

/// `[n]_q = 1 + q + … + q^{n-1}`; exactly `n` at `q = 1`.
pub fn q_integer(n: usize, q: f64) -> Result<f64> {
    if n < 1 {
        return Err(LabError::invalid("q-integer needs n >= 1"));
    }
    check_q(q)?;
    if q == 1.0 {
        return Ok(n as f64);
    }
    let s = q.ln();
    Ok((n as f64 * s).exp_m1() / s.exp_m1())
}

/// `ln [k]_q` with `s = ln q`, stable for large `k|s|` and `s → 0`.
fn ln_q_integer(k: usize, s: f64) -> f64 {
    let kf = k as f64;
    if s == 0.0 {
        kf.ln()
    } else if s < 0.0 {
        // (1 - q^k) / (1 - q), both factors in (0, 1]
        ((kf * s).exp_m1() / s.exp_m1()).ln()
    } else {
        // [k]_q = q^{k-1} [k]_{1/q}
        (kf - 1.0) * s + ln_q_integer(k, -s)
    }
}

/// `ln P_n(q) = Σ_{k=1}^n ln [k]_q`.
pub fn log_q_factorial(n: usize, q: f64) -> Result<f64> {
    if n < 1 {
        return Err(LabError::invalid("q-factorial needs n >= 1"));
    }
    check_q(q)?;
    let s = if q == 1.0 { 0.0 } else { q.ln() };
    Ok((1..=n).map(|k| ln_q_integer(k, s)).sum())
}

/// `p_n(β) = (1/n) ln(P_n(e^{-β/(n-1)}) / n!)`.
pub fn pressure_finite(params: &MallowsParams) -> Result<PressureValue> {
    let n = params.n();
    if n < 2 {
        return Err(LabError::invalid("finite pressure needs n >= 2"));
    }
    let value = if params.beta() == 0.0 {
        0.0
    } else {
        (log_q_factorial(n, params.q_exp())? - ln_gamma(n as f64 + 1.0)) / n as f64
    };
    Ok(PressureValue {
        value,
        n: PressureSize::Finite(n),
    })
}

/// `ln((1 - e^{-t})/t)`, the integrand of the limiting pressure at `t = βx`.
pub fn log_relative_q_integer(t: f64) -> f64 {
    if t.abs() < 1e-3 {
        let t2 = t * t;
        -0.5 * t + t2 / 24.0 - t2 * t2 / 2880.0
    } else if t < -700.0 {
        // (1 - e^{-t})/t = e^{|t|} (1 - e^{-|t|})/|t|
        -t + log_relative_q_integer(-t)
    } else {
        (-(-t).exp_m1() / t).ln()
    }
}

/// `p(β) = ∫₀¹ ln((1 - e^{-βx})/(βx)) dx` by adaptive quadrature.
pub fn pressure_limit(beta: f64) -> PressureValue {
    let value = if beta == 0.0 {
        0.0
    } else {
        quad::integrate(|x| log_relative_q_integer(beta * x), 0.0, 1.0, 1e-13, 1e-14).value
    };
    PressureValue {
        value,
        n: PressureSize::Limit,
    }
}

// G(t) = 1/(1 - e^{-t}) - 1/t, the mean of the continuous analogue of Z_j,
// and its derivative. Series from t/(1-e^{-t}) = Σ B_k^+ t^k / k!.
fn bernoulli_g(t: f64) -> f64 {
    if t.abs() < 0.25 {
        let t2 = t * t;
        0.5 + t * (1.0 / 12.0 + t2 * (-1.0 / 720.0 + t2 * (1.0 / 30240.0 + t2 * (-1.0 / 1_209_600.0 + t2 / 47_900_160.0))))
    } else {
        -1.0 / (-t).exp_m1() - 1.0 / t
    }
}

fn bernoulli_g_prime(t: f64) -> f64 {
    if t.abs() < 0.25 {
        let t2 = t * t;
        1.0 / 12.0 + t2 * (-1.0 / 240.0 + t2 * (1.0 / 6048.0 + t2 * (-1.0 / 172_800.0 + t2 / 5_322_240.0)))
    } else {
        let sh = (0.5 * t).sinh();
        1.0 / (t * t) - 0.25 / (sh * sh)
    }
}

/// Mean and variance of the truncated geometric `Z_j` on `{0, …, j-1}` with
/// weights `e^{sk}`.
pub fn truncated_geometric_moments(j: usize, s: f64) -> (f64, f64) {
    let jf = j as f64;
    let mean = jf * bernoulli_g(jf * s) - bernoulli_g(s);
    let var = jf * jf * bernoulli_g_prime(jf * s) - bernoulli_g_prime(s);
    (mean, var)
}

/// Mean and variance of the inversion count under the Mallows measure with
/// parameter `q`.
pub fn inversion_moments_q(n: usize, q: f64) -> Result<(f64, f64)> {
    check_q(q)?;
    let s = if q == 1.0 { 0.0 } else { q.ln() };
    Ok((1..=n)
        .map(|j| truncated_geometric_moments(j, s))
        .fold((0.0, 0.0), |(m, v), (a, b)| (m + a, v + b)))
}

/// Inversion-count moments for `params` under the given convention.
pub fn inversion_moments(params: &MallowsParams, convention: QConvention) -> Result<(f64, f64)> {
    if params.n() < 2 {
        return Err(LabError::invalid("inversion moments need n >= 2"));
    }
    inversion_moments_q(params.n(), params.q(convention)?)
}

/// Law of the inversion count, `P(d = m)` for `m = 0..=n(n-1)/2`, by
/// convolving the truncated geometric factors.
pub fn inversion_distribution(n: usize, q: f64) -> Result<Vec<f64>> {
    check_q(q)?;
    let mut dist = vec![1.0];
    for j in 2..=n {
        // normalized weights q^k / [j]_q, scaled from the larger end when q > 1
        let w: Vec<f64> = if q <= 1.0 {
            (0..j).map(|k| q.powi(k as i32)).collect()
        } else {
            (0..j).map(|k| q.powi(k as i32 - (j as i32 - 1))).collect()
        };
        let total: f64 = w.iter().sum();
        let mut next = vec![0.0; dist.len() + j - 1];
        for (a, &pa) in dist.iter().enumerate() {
            for (k, &wk) in w.iter().enumerate() {
                next[a + k] += pa * wk / total;
            }
        }
        dist = next;
    }
    Ok(dist)
}

/// Mahonian numbers: how many permutations of `n` have exactly `m`
/// inversions, by integer convolution of the Lehmer-code factors.
pub fn mahonian_numbers(n: usize) -> Vec<u128> {
    let mut counts: Vec<u128> = vec![1];
    for j in 2..=n {
        let mut next = vec![0u128; counts.len() + j - 1];
        for (a, &c) in counts.iter().enumerate() {
            for slot in &mut next[a..a + j] {
                *slot += c;
            }
        }
        counts = next;
    }
    counts
}
