//! Cauchy problem for the hyperbolic Liouville equation `∂²ln u/∂x∂y = 2βu`.
//!
//! With data `u(x, 0) = φ(x)`, `u(0, y) = ψ(y)` and `α = φ(0) = ψ(0)` the
//! problem is equivalent to the integral equation
//!
//! ```text
//! ln u(x, y) = ln φ(x) + ln ψ(y) - ln α + 2β ∫₀ˣ∫₀ʸ u
//! ```
//!
//! which is solved here by damped Picard iteration on a node grid, the double
//! integral being the cumulative tensor trapezoid rule. A solution on
//! `[0, L₁] × [0, L₂]` exists if and only if `β ≤ 0` or
//! `Φ(L₁) Ψ(L₂) < α/β`, where `Φ`, `Ψ` are the primitives of the data; it is
//! then `u = αφψ / (α - βΦΨ)²`.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::grid::GridFunction2D;

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum ProfileRepr {
    Constant(f64),
    Closed { value: RealFn, primitive: RealFn },
    Table { x: Vec<f64>, v: Vec<f64>, prim: Vec<f64> },
}

/// Positive boundary profile on `[0, L]` with its primitive.
#[derive(Clone)]
pub struct Profile {
    repr: ProfileRepr,
    length: f64,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.repr {
            ProfileRepr::Constant(c) => format!("constant({c})"),
            ProfileRepr::Closed { .. } => "closed".to_string(),
            ProfileRepr::Table { x, .. } => format!("table({} points)", x.len()),
        };
        f.debug_struct("Profile")
            .field("kind", &kind)
            .field("length", &self.length)
            .finish()
    }
}

fn check_length(length: f64) -> Result<()> {
    if !(length > 0.0 && length.is_finite()) {
        return Err(LabError::invalid(format!("profile length must be positive, got {length}")));
    }
    Ok(())
}

impl Profile {
    pub fn constant(value: f64, length: f64) -> Result<Self> {
        check_length(length)?;
        Ok(Self {
            repr: ProfileRepr::Constant(value),
            length,
        })
    }

    pub fn closed<V, P>(value: V, primitive: P, length: f64) -> Result<Self>
    where
        V: Fn(f64) -> f64 + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        check_length(length)?;
        Ok(Self {
            repr: ProfileRepr::Closed {
                value: Arc::new(value),
                primitive: Arc::new(primitive),
            },
            length,
        })
    }

    /// Piecewise-linear profile through `(coords[k], values[k])`; `coords`
    /// must start at 0 and increase strictly. The primitive is exact for
    /// the interpolant.
    pub fn from_table(coords: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if coords.len() != values.len() || coords.len() < 2 {
            return Err(LabError::invalid("profile table needs at least two (coordinate, value) pairs"));
        }
        if coords[0] != 0.0 {
            return Err(LabError::invalid(format!("profile must start at 0, got {}", coords[0])));
        }
        if coords.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(LabError::invalid("profile coordinates must increase strictly"));
        }
        let mut prim = vec![0.0; coords.len()];
        for k in 1..coords.len() {
            prim[k] = prim[k - 1] + 0.5 * (coords[k] - coords[k - 1]) * (values[k] + values[k - 1]);
        }
        let length = *coords.last().expect("nonempty");
        check_length(length)?;
        Ok(Self {
            repr: ProfileRepr::Table {
                x: coords,
                v: values,
                prim,
            },
            length,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn value(&self, z: f64) -> f64 {
        match &self.repr {
            ProfileRepr::Constant(c) => *c,
            ProfileRepr::Closed { value, .. } => value(z),
            ProfileRepr::Table { x, v, .. } => {
                let (k, t) = table_locate(x, z);
                v[k] + t * (v[k + 1] - v[k])
            }
        }
    }

    /// `∫₀ᶻ` of the profile.
    pub fn primitive(&self, z: f64) -> f64 {
        match &self.repr {
            ProfileRepr::Constant(c) => c * z,
            ProfileRepr::Closed { primitive, .. } => primitive(z),
            ProfileRepr::Table { x, v, prim } => {
                let (k, t) = table_locate(x, z);
                let h = x[k + 1] - x[k];
                prim[k] + h * (v[k] * t + 0.5 * (v[k + 1] - v[k]) * t * t)
            }
        }
    }
}

fn table_locate(x: &[f64], z: f64) -> (usize, f64) {
    let z = z.clamp(x[0], x[x.len() - 1]);
    let k = x.partition_point(|&c| c <= z).clamp(1, x.len() - 1) - 1;
    (k, (z - x[k]) / (x[k + 1] - x[k]))
}

/// Cauchy data `(φ, ψ)` on `[0, L₁]` and `[0, L₂]` with common corner value
/// `α`.
#[derive(Debug, Clone)]
pub struct CauchyData {
    phi: Profile,
    psi: Profile,
    alpha: f64,
}

const PROBE_POINTS: usize = 1024;

impl CauchyData {
    /// Validates `0 < c ≤ φ, ψ ≤ C < ∞` on a probe grid and
    /// `|φ(0) - ψ(0)| ≤ 1e-10`.
    pub fn new(phi: Profile, psi: Profile) -> Result<Self> {
        for (name, p) in [("phi", &phi), ("psi", &psi)] {
            let l = p.length();
            for k in 0..=PROBE_POINTS {
                let v = p.value(l * k as f64 / PROBE_POINTS as f64);
                if !(v > 0.0 && v.is_finite()) {
                    return Err(LabError::invalid(format!(
                        "{name} must be positive and bounded, found {v}"
                    )));
                }
            }
        }
        let (a, b) = (phi.value(0.0), psi.value(0.0));
        if (a - b).abs() > 1e-10 {
            return Err(LabError::invalid(format!("phi(0) = {a} differs from psi(0) = {b}")));
        }
        Ok(Self { phi, psi, alpha: a })
    }

    /// `φ = ψ = α` on `[0, l1] × [0, l2]`.
    pub fn constant(alpha: f64, l1: f64, l2: f64) -> Result<Self> {
        Self::new(Profile::constant(alpha, l1)?, Profile::constant(alpha, l2)?)
    }

    /// Data whose solution is the limit density `u(·, ·; β)` on the unit
    /// square: `φ(z) = ψ(z) = βe^{-βz}/(1-e^{-β})`.
    pub fn exponential(beta: f64) -> Result<Self> {
        if beta == 0.0 {
            return Self::constant(1.0, 1.0, 1.0);
        }
        let e = -(-beta).exp_m1();
        let make = move || {
            Profile::closed(
                move |z| beta * (-beta * z).exp() / e,
                move |z| -(-beta * z).exp_m1() / e,
                1.0,
            )
        };
        Self::new(make()?, make()?)
    }

    pub fn phi(&self) -> &Profile {
        &self.phi
    }
    pub fn psi(&self) -> &Profile {
        &self.psi
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn l1(&self) -> f64 {
        self.phi.length()
    }
    pub fn l2(&self) -> f64 {
        self.psi.length()
    }

    /// The closed-form solution `αφ(x)ψ(y) / (α - βΦ(x)Ψ(y))²`.
    pub fn exact_solution(&self, x: f64, y: f64, beta: f64) -> f64 {
        let a = self.alpha;
        let d = a - beta * self.phi.primitive(x) * self.psi.primitive(y);
        a * self.phi.value(x) * self.psi.value(y) / (d * d)
    }
}

/// `α/β - Φ(L₁)Ψ(L₂)` for `β > 0`, `+∞` otherwise. Positive means a solution
/// exists on the whole domain.
pub fn existence_margin(data: &CauchyData, beta: f64) -> f64 {
    if beta <= 0.0 {
        return f64::INFINITY;
    }
    data.alpha / beta - data.phi.primitive(data.l1()) * data.psi.primitive(data.l2())
}

/// Picard solver settings.
#[derive(Debug, Clone)]
pub struct CauchySolver {
    pub beta: f64,
    pub cells_x: usize,
    pub cells_y: usize,
    pub max_iterations: usize,
    /// Stop once `sup|u_{k+1} - u_k| < tolerance · max(1, sup|u_k|)`.
    pub tolerance: f64,
    /// Starting iterate; defaults to `φ(x)ψ(y)/α`.
    pub initial: Option<GridFunction2D>,
}

/// Converged grid solution with iteration diagnostics.
#[derive(Debug, Clone)]
pub struct CauchySolution {
    pub u: GridFunction2D,
    pub iterations: usize,
    pub last_change: f64,
    /// Ratio of the last two successive changes.
    pub contraction: f64,
    pub damping: f64,
}

const MARGIN_FLOOR: f64 = 1e-6;
const SWITCH_CONTRACTION: f64 = 0.9;

impl CauchySolver {
    pub fn new(beta: f64, cells: usize) -> Self {
        Self {
            beta,
            cells_x: cells,
            cells_y: cells,
            max_iterations: 10_000,
            tolerance: 1e-12,
            initial: None,
        }
    }

    pub fn with_initial(mut self, u0: GridFunction2D) -> Self {
        self.initial = Some(u0);
        self
    }

    pub fn solve(&self, data: &CauchyData) -> Result<CauchySolution> {
        let beta = self.beta;
        if !beta.is_finite() {
            return Err(LabError::invalid(format!("beta must be finite, got {beta}")));
        }
        if beta > 0.0 {
            let margin = existence_margin(data, beta);
            let required = MARGIN_FLOOR * data.alpha / beta;
            if !(margin >= required) {
                return Err(LabError::ExistenceViolated { margin, required });
            }
        }
        let shape = GridFunction2D::zeros(self.cells_x, self.cells_y, data.l1(), data.l2())?;
        let ln_alpha = data.alpha.ln();
        let lphi: Vec<f64> = (0..shape.nx()).map(|i| data.phi.value(shape.x(i)).ln()).collect();
        let lpsi: Vec<f64> = (0..shape.ny()).map(|j| data.psi.value(shape.y(j)).ln()).collect();
        let ny = shape.ny();
        let base: Vec<f64> = (0..shape.nx() * ny)
            .map(|k| lphi[k / ny] + lpsi[k % ny] - ln_alpha)
            .collect();

        let mut u = match &self.initial {
            Some(u0) => {
                if !u0.same_shape(&shape) {
                    return Err(LabError::invalid("initial iterate has the wrong grid shape"));
                }
                u0.clone()
            }
            None => shape.with_values(base.iter().map(|b| b.exp()).collect())?,
        };

        let mut damping = 1.0;
        let mut prev_change = f64::NAN;
        let mut contraction = f64::NAN;
        for it in 1..=self.max_iterations {
            let s = u.cumulative_integral();
            let mut change: f64 = 0.0;
            let mut scale: f64 = 0.0;
            for ((v, &b), &sv) in u.values_mut().iter_mut().zip(&base).zip(s.values()) {
                let next = (b + 2.0 * beta * sv).exp();
                let mixed = (1.0 - damping) * *v + damping * next;
                change = change.max((mixed - *v).abs());
                scale = scale.max(v.abs());
                *v = mixed;
            }
            if !change.is_finite() {
                return Err(LabError::NonConvergence {
                    iterations: it,
                    last_change: change,
                    detail: "iterates diverged".into(),
                });
            }
            if prev_change > 0.0 {
                contraction = change / prev_change;
                if it > 3 && contraction > SWITCH_CONTRACTION && damping == 1.0 {
                    damping = 0.5;
                }
            }
            prev_change = change;
            if change < self.tolerance * scale.max(1.0) {
                return Ok(CauchySolution {
                    u,
                    iterations: it,
                    last_change: change,
                    contraction,
                    damping,
                });
            }
        }
        Err(LabError::NonConvergence {
            iterations: self.max_iterations,
            last_change: prev_change,
            detail: format!("contraction estimate {contraction:.4}, damping {damping}"),
        })
    }
}

/// Solve on a `cells × cells` grid with default settings.
pub fn solve_cauchy(data: &CauchyData, beta: f64, cells: usize) -> Result<CauchySolution> {
    CauchySolver::new(beta, cells).solve(data)
}

/// Strictly increasing differentiable map of an interval.
pub trait Reparametrization {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// The identity map.
#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityMap;

impl Reparametrization for IdentityMap {
    fn value(&self, x: f64) -> f64 {
        x
    }
    fn derivative(&self, _x: f64) -> f64 {
        1.0
    }
}

/// A reparametrization given by a value closure and a derivative closure.
pub struct FnMap<F, D> {
    pub value: F,
    pub derivative: D,
}

impl<F: Fn(f64) -> f64, D: Fn(f64) -> f64> Reparametrization for FnMap<F, D> {
    fn value(&self, x: f64) -> f64 {
        (self.value)(x)
    }
    fn derivative(&self, x: f64) -> f64 {
        (self.derivative)(x)
    }
}

/// `v(x, y) = F'(x) G'(y) u(F(x), G(y))` on `target` (only its shape is
/// used), with `u` bilinearly interpolated. If `u` solves the Liouville
/// equation so does `v`, with the same `β`.
pub fn scaling_transform<FM, GM>(
    u: &GridFunction2D,
    fmap: &FM,
    gmap: &GM,
    target: &GridFunction2D,
) -> Result<GridFunction2D>
where
    FM: Reparametrization + ?Sized,
    GM: Reparametrization + ?Sized,
{
    let fx = mapped_axis(fmap, target.nx(), |i| target.x(i), u.lx(), "F")?;
    let gy = mapped_axis(gmap, target.ny(), |j| target.y(j), u.ly(), "G")?;
    let mut v = target.clone();
    for (i, &(xv, xd)) in fx.iter().enumerate() {
        for (j, &(yv, yd)) in gy.iter().enumerate() {
            v.set(i, j, xd * yd * u.interpolate(xv, yv));
        }
    }
    Ok(v)
}

fn mapped_axis<M: Reparametrization + ?Sized>(
    map: &M,
    n: usize,
    coord: impl Fn(usize) -> f64,
    source_len: f64,
    name: &str,
) -> Result<Vec<(f64, f64)>> {
    let tol = 1e-12 * source_len.max(1.0);
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(n);
    for k in 0..n {
        let (v, d) = (map.value(coord(k)), map.derivative(coord(k)));
        if !(d > 0.0 && d.is_finite()) {
            return Err(LabError::invalid(format!("{name}' must be positive, found {d}")));
        }
        if let Some(&(last, _)) = out.last() {
            if !(v > last) {
                return Err(LabError::invalid(format!("{name} must be strictly increasing")));
            }
        }
        if !(v >= -tol && v <= source_len + tol) {
            return Err(LabError::invalid(format!(
                "{name} maps outside the source domain [0, {source_len}]: {v}"
            )));
        }
        out.push((v.clamp(0.0, source_len), d));
    }
    Ok(out)
}

/// Central-difference residual `∂²ln u/∂x∂y - 2βu` at interior nodes; `NaN`
/// on the boundary.
pub fn liouville_residual(u: &GridFunction2D, beta: f64) -> GridFunction2D {
    let (hx, hy) = (u.hx(), u.hy());
    let lu = u.map(f64::ln);
    let mut r = u.map(|_| f64::NAN);
    for i in 1..u.nx() - 1 {
        for j in 1..u.ny() - 1 {
            let mixed = (lu.get(i + 1, j + 1) - lu.get(i + 1, j - 1) - lu.get(i - 1, j + 1)
                + lu.get(i - 1, j - 1))
                / (4.0 * hx * hy);
            r.set(i, j, mixed - 2.0 * beta * u.get(i, j));
        }
    }
    r
}

/// Largest finite `|residual|`.
pub fn max_abs_residual(r: &GridFunction2D) -> f64 {
    r.values()
        .iter()
        .filter(|v| v.is_finite())
        .fold(0.0, |m, v| m.max(v.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::limit_density;

    #[test]
    fn margins() {
        let flat = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
        assert_eq!(existence_margin(&flat, 0.5), 1.0);
        assert_eq!(existence_margin(&flat, 1.0), 0.0);
        assert_eq!(existence_margin(&flat, -3.0), f64::INFINITY);
        for &b in &[0.5, 2.0, 7.0] {
            let d = CauchyData::exponential(b).unwrap();
            let want = 1.0 / (1.0 - (-b).exp()) - 1.0;
            assert!((existence_margin(&d, b) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn refuses_blow_up() {
        let flat = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
        let e = solve_cauchy(&flat, 1.0, 8).unwrap_err();
        assert_eq!(e.kind(), "existence_violated");
        assert!(solve_cauchy(&flat, 1.5, 8).is_err());
    }

    #[test]
    fn beta_zero_is_product() {
        let flat = CauchyData::constant(1.0, 1.0, 2.0).unwrap();
        let s = solve_cauchy(&flat, 0.0, 10).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.u.values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn data_validation() {
        let a = Profile::constant(1.0, 1.0).unwrap();
        let b = Profile::constant(2.0, 1.0).unwrap();
        assert!(CauchyData::new(a.clone(), b).is_err());
        let z = Profile::closed(|x| 1.0 - x, |x| x - 0.5 * x * x, 1.0).unwrap();
        assert!(CauchyData::new(z, a).is_err());
        assert!(Profile::from_table(vec![0.0, 0.5, 0.5], vec![1.0; 3]).is_err());
        assert!(Profile::from_table(vec![0.1, 0.5], vec![1.0; 2]).is_err());
    }

    #[test]
    fn table_profile_primitive() {
        let p = Profile::from_table(vec![0.0, 0.5, 2.0], vec![1.0, 2.0, 0.5]).unwrap();
        assert_eq!(p.length(), 2.0);
        assert!((p.primitive(0.5) - 0.75).abs() < 1e-15);
        assert!((p.primitive(2.0) - (0.75 + 1.5 * 1.25)).abs() < 1e-15);
        assert!((p.value(1.25) - 1.25).abs() < 1e-15);
    }

    #[test]
    fn negative_beta_flat_data_converges_at_second_order() {
        let flat = CauchyData::constant(1.0, 1.0, 1.0).unwrap();
        let exact = |x: f64, y: f64| (1.0 + x * y).powi(-2);
        let e1 = solve_cauchy(&flat, -1.0, 20).unwrap().u.sup_error_against(exact);
        let e2 = solve_cauchy(&flat, -1.0, 40).unwrap().u.sup_error_against(exact);
        let order = (e1 / e2).log2();
        assert!(order > 1.9, "order {order}");
    }

    #[test]
    fn rows_equal_the_data() {
        let d = CauchyData::exponential(2.0).unwrap();
        let s = solve_cauchy(&d, 2.0, 32).unwrap();
        for k in 0..s.u.nx() {
            let x = s.u.x(k);
            assert!((s.u.get(k, 0) - d.phi().value(x)).abs() < 1e-13);
            assert!((s.u.get(0, k) - d.psi().value(x)).abs() < 1e-13);
        }
        assert!(s.u.sup_error_against(|x, y| limit_density(x, y, 2.0)) < 1e-2);
    }

    #[test]
    fn identity_transform_is_exact() {
        let u = GridFunction2D::unit_from_fn(10, |x, y| 1.0 + x * y * y).unwrap();
        let v = scaling_transform(&u, &IdentityMap, &IdentityMap, &u).unwrap();
        assert_eq!(u, v);
        let bad = FnMap {
            value: |x: f64| 1.0 - x,
            derivative: |_| -1.0,
        };
        assert!(scaling_transform(&u, &bad, &IdentityMap, &u).is_err());
    }

    #[test]
    fn residual_is_small_for_exact_solution() {
        let u = GridFunction2D::unit_from_fn(64, |x, y| limit_density(x, y, 1.5)).unwrap();
        let r = liouville_residual(&u, 1.5);
        assert!(r.get(0, 3).is_nan());
        assert!(max_abs_residual(&r) < 1e-3);
    }
}
