//! Bounded one-dimensional probability densities on `[0, 1]` together with
//! their primitives.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Repr {
    Uniform,
    Closed { density: RealFn, cumulative: RealFn },
    /// Density tabulated on a uniform grid, linearly interpolated; the
    /// cumulative is the exact primitive of that interpolant.
    Table { values: Vec<f64>, cumulative: Vec<f64> },
}

/// A density `f` on `[0, 1]` with `0 < c ≤ f ≤ C < ∞` and its cumulative
/// `F(x) = ∫₀ˣ f`, normalized so that `F(1) = 1`.
#[derive(Clone)]
pub struct MarginalDensity {
    repr: Repr,
    lower: f64,
    upper: f64,
}

impl fmt::Debug for MarginalDensity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            Repr::Uniform => "uniform",
            Repr::Closed { .. } => "closed",
            Repr::Table { .. } => "table",
        };
        f.debug_struct("MarginalDensity")
            .field("kind", &kind)
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .finish()
    }
}

const PROBE_POINTS: usize = 1024;

impl MarginalDensity {
    pub fn uniform() -> Self {
        Self {
            repr: Repr::Uniform,
            lower: 1.0,
            upper: 1.0,
        }
    }

    /// Closed-form density and primitive. The bounds are estimated on a
    /// probe grid; `F(0) = 0` and `F(1) = 1` must hold to `1e-10`.
    pub fn closed<D, C>(density: D, cumulative: C) -> Result<Self>
    where
        D: Fn(f64) -> f64 + Send + Sync + 'static,
        C: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let (lo, hi) = probe_bounds(&density);
        check_bounds(lo, hi)?;
        let (f0, f1) = (cumulative(0.0), cumulative(1.0));
        if f0.abs() > 1e-10 || (f1 - 1.0).abs() > 1e-10 {
            return Err(LabError::invalid(format!(
                "cumulative must run from 0 to 1, got F(0) = {f0}, F(1) = {f1}"
            )));
        }
        Ok(Self {
            repr: Repr::Closed {
                density: Arc::new(density),
                cumulative: Arc::new(cumulative),
            },
            lower: lo,
            upper: hi,
        })
    }

    /// Density from values at `m` equispaced nodes `x_k = k/(m-1)`. The table
    /// is rescaled so that its piecewise-linear interpolant integrates to one.
    pub fn from_table(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(LabError::invalid("a tabulated density needs at least two nodes"));
        }
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        check_bounds(lo, hi)?;
        let h = 1.0 / (values.len() - 1) as f64;
        let mut cumulative = vec![0.0; values.len()];
        for k in 1..values.len() {
            cumulative[k] = cumulative[k - 1] + 0.5 * h * (values[k - 1] + values[k]);
        }
        let total = cumulative[values.len() - 1];
        let values: Vec<f64> = values.iter().map(|v| v / total).collect();
        let cumulative: Vec<f64> = cumulative.iter().map(|c| c / total).collect();
        Ok(Self {
            repr: Repr::Table { values, cumulative },
            lower: lo / total,
            upper: hi / total,
        })
    }

    /// Density proportional to `1 + slope·x`.
    pub fn linear(slope: f64) -> Result<Self> {
        let z = 1.0 + 0.5 * slope;
        Self::closed(move |x| (1.0 + slope * x) / z, move |x| (x + 0.5 * slope * x * x) / z)
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.repr, Repr::Uniform)
    }

    /// `(c, C)` with `c ≤ f ≤ C` (probe estimate for closed forms).
    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn density(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Uniform => 1.0,
            Repr::Closed { density, .. } => density(x),
            Repr::Table { values, .. } => {
                let (k, t) = locate(x, values.len());
                if t == 0.0 {
                    values[k]
                } else {
                    (1.0 - t) * values[k] + t * values[k + 1]
                }
            }
        }
    }

    pub fn cumulative(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Uniform => x.clamp(0.0, 1.0),
            Repr::Closed { cumulative, .. } => cumulative(x),
            Repr::Table { values, cumulative } => {
                let (k, t) = locate(x, values.len());
                if t == 0.0 {
                    return cumulative[k];
                }
                let h = 1.0 / (values.len() - 1) as f64;
                // ∫ of the linear interpolant over [x_k, x_k + t h]
                cumulative[k] + h * (values[k] * t + 0.5 * (values[k + 1] - values[k]) * t * t)
            }
        }
    }
}

fn locate(x: f64, m: usize) -> (usize, f64) {
    let cells = (m - 1) as f64;
    let s = (x.clamp(0.0, 1.0)) * cells;
    let k = (s.floor() as usize).min(m - 2);
    let t = s - k as f64;
    if t >= 1.0 {
        (k + 1, 0.0)
    } else {
        (k, t)
    }
}

fn probe_bounds<D: Fn(f64) -> f64>(density: &D) -> (f64, f64) {
    (0..=PROBE_POINTS)
        .map(|k| density(k as f64 / PROBE_POINTS as f64))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
            if v.is_nan() {
                (f64::NAN, f64::NAN)
            } else {
                (lo.min(v), hi.max(v))
            }
        })
}

fn check_bounds(lo: f64, hi: f64) -> Result<()> {
    if !(lo > 0.0 && hi.is_finite()) {
        return Err(LabError::invalid(format!(
            "density must satisfy 0 < c <= f <= C < inf, observed range [{lo}, {hi}]"
        )));
    }
    Ok(())
}
