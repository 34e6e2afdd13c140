//! Uniform node grids on `[0, lx] × [0, ly]`.

use crate::error::{LabError, Result};

/// Values sampled at the `nx × ny` corner nodes of a uniform grid on
/// `[0, lx] × [0, ly]`. Node `(i, j)` sits at `(i·hx, j·hy)`; storage is
/// row-major in `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction2D {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    values: Vec<f64>,
}

impl GridFunction2D {
    /// Grid with `cells_x × cells_y` cells, i.e. `(cells_x+1) × (cells_y+1)` nodes.
    pub fn zeros(cells_x: usize, cells_y: usize, lx: f64, ly: f64) -> Result<Self> {
        if cells_x == 0 || cells_y == 0 {
            return Err(LabError::invalid("grid needs at least one cell per axis"));
        }
        if !(lx > 0.0 && ly > 0.0 && lx.is_finite() && ly.is_finite()) {
            return Err(LabError::invalid(format!(
                "grid extents must be positive, got ({lx}, {ly})"
            )));
        }
        Ok(Self {
            nx: cells_x + 1,
            ny: cells_y + 1,
            lx,
            ly,
            values: vec![0.0; (cells_x + 1) * (cells_y + 1)],
        })
    }

    /// Unit square with `cells × cells` cells, filled from `f(x, y)`.
    pub fn unit_from_fn<F: Fn(f64, f64) -> f64>(cells: usize, f: F) -> Result<Self> {
        Self::from_fn(cells, cells, 1.0, 1.0, f)
    }

    pub fn from_fn<F: Fn(f64, f64) -> f64>(
        cells_x: usize,
        cells_y: usize,
        lx: f64,
        ly: f64,
        f: F,
    ) -> Result<Self> {
        let mut g = Self::zeros(cells_x, cells_y, lx, ly)?;
        for i in 0..g.nx {
            let x = g.x(i);
            for j in 0..g.ny {
                let v = f(x, g.y(j));
                g.values[i * g.ny + j] = v;
            }
        }
        Ok(g)
    }

    /// Same shape as `self`, values replaced.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(LabError::invalid(format!(
                "expected {} values, got {}",
                self.values.len(),
                values.len()
            )));
        }
        Ok(Self {
            values,
            ..self.clone()
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn hx(&self) -> f64 {
        self.lx / (self.nx - 1) as f64
    }
    pub fn hy(&self) -> f64 {
        self.ly / (self.ny - 1) as f64
    }
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.lx / (self.nx - 1) as f64
    }
    pub fn y(&self, j: usize) -> f64 {
        j as f64 * self.ly / (self.ny - 1) as f64
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.ny + j]
    }
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.values[i * self.ny + j] = v;
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.nx == other.nx && self.ny == other.ny && self.lx == other.lx && self.ly == other.ly
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        Self {
            values: self.values.iter().map(|&v| f(v)).collect(),
            ..self.clone()
        }
    }

    /// Iterator over `(x, y, value)` in storage order.
    pub fn nodes(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        (0..self.nx).flat_map(move |i| (0..self.ny).map(move |j| (self.x(i), self.y(j), self.get(i, j))))
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max |self - other|` over nodes. Panics on shape mismatch.
    pub fn sup_distance(&self, other: &Self) -> f64 {
        assert!(self.same_shape(other), "grid shape mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `max |self - f(x, y)|` over nodes.
    pub fn sup_error_against<F: Fn(f64, f64) -> f64>(&self, f: F) -> f64 {
        self.nodes().fold(0.0, |m, (x, y, v)| m.max((v - f(x, y)).abs()))
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Trapezoid weights along x (`hx/2` at both ends, `hx` inside).
    pub fn weights_x(&self) -> Vec<f64> {
        trapezoid_weights(self.nx, self.hx())
    }
    pub fn weights_y(&self) -> Vec<f64> {
        trapezoid_weights(self.ny, self.hy())
    }

    /// Tensor trapezoid rule over the whole domain.
    pub fn integral(&self) -> f64 {
        let wx = self.weights_x();
        let wy = self.weights_y();
        (0..self.nx)
            .map(|i| wx[i] * (0..self.ny).map(|j| wy[j] * self.get(i, j)).sum::<f64>())
            .sum()
    }

    /// Trapezoid `∫ u(x_i, y) dy` for each row `i`.
    pub fn marginal_x(&self) -> Vec<f64> {
        let wy = self.weights_y();
        (0..self.nx)
            .map(|i| (0..self.ny).map(|j| wy[j] * self.get(i, j)).sum())
            .collect()
    }

    /// Trapezoid `∫ u(x, y_j) dx` for each column `j`.
    pub fn marginal_y(&self) -> Vec<f64> {
        let wx = self.weights_x();
        let mut out = vec![0.0; self.ny];
        for i in 0..self.nx {
            for (j, o) in out.iter_mut().enumerate() {
                *o += wx[i] * self.get(i, j);
            }
        }
        out
    }

    /// Cumulative trapezoid `S(x_i, y_j) = ∫₀^{x_i} ∫₀^{y_j} u`, computed
    /// as a 1D cumulative trapezoid along x followed by one along y.
    pub fn cumulative_integral(&self) -> Self {
        let (nx, ny) = (self.nx, self.ny);
        let (hx, hy) = (self.hx(), self.hy());
        let mut cx = vec![0.0; nx * ny];
        for i in 1..nx {
            for j in 0..ny {
                cx[i * ny + j] =
                    cx[(i - 1) * ny + j] + 0.5 * hx * (self.values[(i - 1) * ny + j] + self.values[i * ny + j]);
            }
        }
        let mut out = vec![0.0; nx * ny];
        for i in 0..nx {
            let row = &cx[i * ny..(i + 1) * ny];
            let dst = &mut out[i * ny..(i + 1) * ny];
            for j in 1..ny {
                dst[j] = dst[j - 1] + 0.5 * hy * (row[j - 1] + row[j]);
            }
        }
        Self {
            values: out,
            ..self.clone()
        }
    }

    /// Bilinear interpolation at `(x, y)` inside the domain. Node
    /// coordinates are snapped so that evaluation at a node returns the
    /// stored value exactly.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let (i, tx) = locate(x, self.lx, self.nx);
        let (j, ty) = locate(y, self.ly, self.ny);
        let v00 = self.get(i, j);
        if tx == 0.0 && ty == 0.0 {
            return v00;
        }
        let i1 = (i + 1).min(self.nx - 1);
        let j1 = (j + 1).min(self.ny - 1);
        let v10 = self.get(i1, j);
        let v01 = self.get(i, j1);
        let v11 = self.get(i1, j1);
        (1.0 - tx) * ((1.0 - ty) * v00 + ty * v01) + tx * ((1.0 - ty) * v10 + ty * v11)
    }
}

fn locate(x: f64, l: f64, n: usize) -> (usize, f64) {
    let cells = (n - 1) as f64;
    let s = (x / l * cells).clamp(0.0, cells);
    let r = s.round();
    if (s - r).abs() < 1e-9 {
        return (r as usize, 0.0);
    }
    let i = (s.floor() as usize).min(n - 2);
    (i, s - i as f64)
}

pub(crate) fn trapezoid_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![h; n];
    w[0] = 0.5 * h;
    w[n - 1] = 0.5 * h;
    w
}
