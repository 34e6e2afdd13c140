//! Mean-field side: the two-point interaction, the constrained
//! Euler–Lagrange fixed point and the Gibbs variational functional.
//!
//! The interaction between `(x₁, y₁)` and `(x₂, y₂)` is 1 when the pair is
//! an inversion and 0 otherwise. Against a density `u` it produces
//!
//! ```text
//! C(x, y) = (h ⋆ u)(x, y) = ∬_{x'<x, y'>y} u + ∬_{x'>x, y'<y} u
//! ```
//!
//! The limiting density with marginals `f`, `g` is the solution of
//! `u = f(x) g(y) e^{-βC(x,y)} / Z` subject to those marginals, and the
//! limiting pressure is the maximum over such `u` of
//! `S(u) - (β/2) ∬ u C(u)` with `S(u) = -∬ u ln(u/(fg))`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::grid::GridFunction2D;
use crate::marginal::MarginalDensity;

/// `h((x₁,y₁),(x₂,y₂)) = θ(x₁-x₂)θ(y₂-y₁) + θ(x₂-x₁)θ(y₁-y₂)` with
/// `θ(0) = 1/2`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct InteractionKernel;

fn heaviside(t: f64) -> f64 {
    if t > 0.0 {
        1.0
    } else if t < 0.0 {
        0.0
    } else {
        0.5
    }
}

impl InteractionKernel {
    pub fn eval(&self, (x1, y1): (f64, f64), (x2, y2): (f64, f64)) -> f64 {
        heaviside(x1 - x2) * heaviside(y2 - y1) + heaviside(x2 - x1) * heaviside(y1 - y2)
    }
}

/// `h ⋆ u` on the grid of `u`, from the cumulative trapezoid sums `S`:
/// `C(i, j) = S(i, last) + S(last, j) - 2 S(i, j)`. Cost `O(nx·ny)`.
pub fn h_convolution(u: &GridFunction2D) -> GridFunction2D {
    let s = u.cumulative_integral();
    let (lx, ly) = (u.nx() - 1, u.ny() - 1);
    let mut c = s.clone();
    for i in 0..u.nx() {
        let row_end = s.get(i, ly);
        for j in 0..u.ny() {
            c.set(i, j, row_end + s.get(lx, j) - 2.0 * s.get(i, j));
        }
    }
    c
}

/// Nodal values of a marginal density, rescaled so that their trapezoid sum
/// is exactly one.
pub fn discrete_marginal(d: &MarginalDensity, n: usize) -> Vec<f64> {
    let h = 1.0 / (n - 1) as f64;
    let w = crate::grid::trapezoid_weights(n, h);
    let raw: Vec<f64> = (0..n).map(|i| d.density(i as f64 * h)).collect();
    let total: f64 = raw.iter().zip(&w).map(|(a, b)| a * b).sum();
    raw.into_iter().map(|v| v / total).collect()
}

/// Largest deviation of the trapezoid marginals of `u` from `fx`, `gy`.
pub fn marginal_error(u: &GridFunction2D, fx: &[f64], gy: &[f64]) -> f64 {
    let mx = u.marginal_x();
    let my = u.marginal_y();
    let ex = mx.iter().zip(fx).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let ey = my.iter().zip(gy).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    ex.max(ey)
}

/// Iterative proportional fitting: alternately rescales rows and columns of
/// the positive grid `w` until its trapezoid marginals match `fx` and `gy`
/// to `tol`. Returns the number of sweeps.
pub fn ipfp(w: &mut GridFunction2D, fx: &[f64], gy: &[f64], tol: f64, max_sweeps: usize) -> Result<usize> {
    let (nx, ny) = (w.nx(), w.ny());
    if fx.len() != nx || gy.len() != ny {
        return Err(LabError::invalid("marginal lengths do not match the grid"));
    }
    let wy = w.weights_y();
    let mut err = f64::INFINITY;
    for sweep in 1..=max_sweeps {
        for i in 0..nx {
            let row = &mut w.values_mut()[i * ny..(i + 1) * ny];
            let m: f64 = row.iter().zip(&wy).map(|(a, b)| a * b).sum();
            let r = fx[i] / m;
            row.iter_mut().for_each(|v| *v *= r);
        }
        let my = w.marginal_y();
        let scale: Vec<f64> = gy.iter().zip(&my).map(|(g, m)| g / m).collect();
        for i in 0..nx {
            let row = &mut w.values_mut()[i * ny..(i + 1) * ny];
            row.iter_mut().zip(&scale).for_each(|(v, s)| *v *= s);
        }
        err = w
            .marginal_x()
            .iter()
            .zip(fx)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        if !err.is_finite() {
            break;
        }
        if err < tol {
            return Ok(sweep);
        }
    }
    Err(LabError::NonConvergence {
        iterations: max_sweeps,
        last_change: err,
        detail: "proportional fitting did not match the marginals".into(),
    })
}

/// Starting point of the Euler–Lagrange iteration.
#[derive(Debug, Clone)]
pub enum ElInit {
    /// `f(x) g(y)`.
    Product,
    /// The constant 1 projected onto the marginals.
    Uniform,
    /// A supplied positive grid, projected onto the marginals.
    Grid(GridFunction2D),
}

/// Settings for the constrained fixed-point iteration.
#[derive(Debug, Clone)]
pub struct EulerLagrangeSolver {
    pub beta: f64,
    pub cells: usize,
    /// Mixing weight `λ` in `u ← (1-λ)u + λw`.
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub ipfp_tolerance: f64,
    pub init: ElInit,
}

#[derive(Debug, Clone)]
pub struct ElSolution {
    pub u: GridFunction2D,
    pub iterations: usize,
    pub last_change: f64,
    pub marginal_error: f64,
    pub damping: f64,
}

impl EulerLagrangeSolver {
    pub fn new(beta: f64, cells: usize) -> Self {
        Self {
            beta,
            cells,
            damping: 0.5,
            tolerance: 1e-10,
            max_iterations: 20_000,
            ipfp_tolerance: 1e-13,
            init: ElInit::Product,
        }
    }

    pub fn with_init(mut self, init: ElInit) -> Self {
        self.init = init;
        self
    }

    pub fn solve(&self, f: &MarginalDensity, g: &MarginalDensity) -> Result<ElSolution> {
        if !self.beta.is_finite() {
            return Err(LabError::invalid(format!("beta must be finite, got {}", self.beta)));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(LabError::invalid("damping must lie in (0, 1]"));
        }
        let shape = GridFunction2D::zeros(self.cells, self.cells, 1.0, 1.0)?;
        let n = shape.nx();
        let fx = discrete_marginal(f, n);
        let gy = discrete_marginal(g, n);
        let product = shape.with_values((0..n * n).map(|k| fx[k / n] * gy[k % n]).collect())?;
        let mut u = match &self.init {
            ElInit::Product => product.clone(),
            ElInit::Uniform => shape.map(|_| 1.0),
            ElInit::Grid(u0) => {
                if !u0.same_shape(&shape) {
                    return Err(LabError::invalid("initial grid has the wrong shape"));
                }
                if !(u0.min_value() > 0.0) {
                    return Err(LabError::invalid("initial grid must be positive"));
                }
                u0.clone()
            }
        };
        ipfp(&mut u, &fx, &gy, self.ipfp_tolerance, 100_000)?;

        let mut lambda = self.damping;
        let mut prev = f64::INFINITY;
        let mut rises = 0;
        let mut change = f64::NAN;
        for it in 1..=self.max_iterations {
            let c = h_convolution(&u);
            let mut w = product.clone();
            for (wv, cv) in w.values_mut().iter_mut().zip(c.values()) {
                *wv *= (-self.beta * cv).exp();
            }
            ipfp(&mut w, &fx, &gy, self.ipfp_tolerance, 100_000)?;
            change = 0.0;
            for (uv, wv) in u.values_mut().iter_mut().zip(w.values()) {
                let next = (1.0 - lambda) * *uv + lambda * wv;
                change = change.max((next - *uv).abs());
                *uv = next;
            }
            if !change.is_finite() {
                break;
            }
            if change < self.tolerance {
                return Ok(ElSolution {
                    marginal_error: marginal_error(&u, &fx, &gy),
                    u,
                    iterations: it,
                    last_change: change,
                    damping: lambda,
                });
            }
            // halve the step after repeated growth of the update
            if change > prev {
                rises += 1;
                if rises >= 3 {
                    lambda *= 0.5;
                    rises = 0;
                }
            } else {
                rises = 0;
            }
            prev = change;
        }
        Err(LabError::NonConvergence {
            iterations: self.max_iterations,
            last_change: change,
            detail: format!("marginal error {:e}", marginal_error(&u, &fx, &gy)),
        })
    }
}

/// Solve with default settings on a `cells × cells` grid.
pub fn solve_euler_lagrange(
    f: &MarginalDensity,
    g: &MarginalDensity,
    beta: f64,
    cells: usize,
) -> Result<ElSolution> {
    EulerLagrangeSolver::new(beta, cells).solve(f, g)
}

/// Terms of the Gibbs functional for one density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GibbsFunctionalValue {
    pub entropy: f64,
    pub energy: f64,
    pub objective: f64,
}

/// `S(u) - (β/2)∬ u (h ⋆ u)` by trapezoid quadrature on the grid of `u`,
/// where `S(u) = -∬ u ln(u/(fg))`. `u` is assumed to carry the marginals
/// `f`, `g`.
pub fn gibbs_objective(
    u: &GridFunction2D,
    f: &MarginalDensity,
    g: &MarginalDensity,
    beta: f64,
) -> Result<GibbsFunctionalValue> {
    if !(u.min_value() > 0.0) {
        return Err(LabError::invalid("density must be positive at every node"));
    }
    let c = h_convolution(u);
    let wx = u.weights_x();
    let wy = u.weights_y();
    let mut entropy = 0.0;
    let mut energy = 0.0;
    for i in 0..u.nx() {
        let fv = f.density(u.x(i));
        let (mut es, mut en) = (0.0, 0.0);
        for j in 0..u.ny() {
            let v = u.get(i, j);
            es += wy[j] * v * (v / (fv * g.density(u.y(j)))).ln();
            en += wy[j] * v * c.get(i, j);
        }
        entropy -= wx[i] * es;
        energy += wx[i] * en;
    }
    Ok(GibbsFunctionalValue {
        entropy,
        energy,
        objective: entropy - 0.5 * beta * energy,
    })
}

/// `sup |ln u - ln f - ln g + β(h ⋆ u) - c|` minimized over the constant
/// `c` in the least-squares sense. Returns `(residual, c)`.
pub fn fixed_point_residual(
    u: &GridFunction2D,
    f: &MarginalDensity,
    g: &MarginalDensity,
    beta: f64,
) -> (f64, f64) {
    let c = h_convolution(u);
    let r: Vec<f64> = (0..u.nx())
        .flat_map(|i| (0..u.ny()).map(move |j| (i, j)))
        .map(|(i, j)| {
            u.get(i, j).ln() - f.density(u.x(i)).ln() - g.density(u.y(j)).ln() + beta * c.get(i, j)
        })
        .collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let sup = r.iter().fold(0.0f64, |m, v| m.max((v - mean).abs()));
    (sup, mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limits::limit_density;

    #[test]
    fn kernel_values() {
        let h = InteractionKernel;
        assert_eq!(h.eval((0.2, 0.8), (0.5, 0.1)), 1.0);
        assert_eq!(h.eval((0.2, 0.1), (0.5, 0.8)), 0.0);
        assert_eq!(h.eval((0.5, 0.1), (0.2, 0.8)), 1.0);
        assert_eq!(h.eval((0.5, 0.5), (0.5, 0.5)), 0.5);
    }

    #[test]
    fn convolution_of_uniform() {
        let u = GridFunction2D::unit_from_fn(16, |_, _| 1.0).unwrap();
        let c = h_convolution(&u);
        for (i, j) in [(0, 5), (7, 0), (3, 11), (16, 16)] {
            let (x, y) = (c.x(i), c.y(j));
            assert!((c.get(i, j) - (x * (1.0 - y) + (1.0 - x) * y)).abs() < 1e-14);
        }
    }

    #[test]
    fn uniform_objective() {
        let u = GridFunction2D::unit_from_fn(20, |_, _| 1.0).unwrap();
        let one = MarginalDensity::uniform();
        let v = gibbs_objective(&u, &one, &one, 3.0).unwrap();
        assert_eq!(v.entropy, 0.0);
        assert!((v.energy - 0.5).abs() < 1e-12);
        assert!((v.objective + 0.75).abs() < 1e-12);
        let bad = u.map(|_| 0.0);
        assert!(gibbs_objective(&bad, &one, &one, 1.0).is_err());
    }

    #[test]
    fn beta_zero_one_sweep() {
        let one = MarginalDensity::uniform();
        let s = solve_euler_lagrange(&one, &one, 0.0, 16).unwrap();
        assert_eq!(s.iterations, 1);
        assert!(s.u.values().iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn closed_form_is_a_fixed_point() {
        let one = MarginalDensity::uniform();
        let u = GridFunction2D::unit_from_fn(128, |x, y| limit_density(x, y, 1.0)).unwrap();
        let (r, _) = fixed_point_residual(&u, &one, &one, 1.0);
        assert!(r < 1e-4, "residual {r}");
    }

    #[test]
    fn small_grid_solution() {
        let one = MarginalDensity::uniform();
        let s = solve_euler_lagrange(&one, &one, 1.0, 32).unwrap();
        assert!(s.marginal_error < 1e-9);
        assert!(s.u.sup_error_against(|x, y| limit_density(x, y, 1.0)) < 1e-2);
    }

    #[test]
    fn ipfp_matches_marginals() {
        let mut w = GridFunction2D::unit_from_fn(12, |x, y| 1.0 + x + 3.0 * y * y).unwrap();
        let f = discrete_marginal(&MarginalDensity::linear(1.0).unwrap(), 13);
        let g = discrete_marginal(&MarginalDensity::uniform(), 13);
        ipfp(&mut w, &f, &g, 1e-14, 10_000).unwrap();
        assert!(marginal_error(&w, &f, &g) < 1e-13);
    }
}
