use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform node-centred mesh on `[a, b]` with `nodes` points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    pub a: f64,
    pub b: f64,
    pub nodes: usize,
}

impl Grid1D {
    pub fn new(a: f64, b: f64, nodes: usize) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::ParameterDomain(format!("grid needs at least 2 nodes, got {nodes}")));
        }
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::ParameterDomain(format!("grid needs a < b, got [{a}, {b}]")));
        }
        Ok(Self { a, b, nodes })
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / (self.nodes - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        if j + 1 == self.nodes {
            self.b
        } else {
            self.a + j as f64 * self.dx()
        }
    }

    pub fn coordinates(&self) -> Vec<f64> {
        (0..self.nodes).map(|j| self.x(j)).collect()
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.nodes).map(|j| f(self.x(j))).collect()
    }
}

/// Field values on a [`Grid1D`] at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct EulerianField {
    pub grid: Grid1D,
    pub t: f64,
    pub values: Vec<f64>,
}

impl EulerianField {
    pub fn new(grid: Grid1D, t: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.nodes {
            return Err(Error::ParameterDomain(format!("field has {} values for {} nodes", values.len(), grid.nodes)));
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::DegenerateData(format!("non-finite value at node {j}")));
        }
        Ok(Self { grid, t, values })
    }

    pub fn from_fn(grid: Grid1D, t: f64, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(grid, t, grid.sample(f))
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dx()
    }
}

/// Lagrangian node positions `x` carrying values `u`.
#[derive(Debug, Clone, PartialEq)]
pub struct MovingGrid {
    pub t: f64,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
}

impl MovingGrid {
    pub fn new(t: f64, x: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        if x.len() != u.len() {
            return Err(Error::ParameterDomain(format!(
                "moving grid has {} positions and {} values",
                x.len(),
                u.len()
            )));
        }
        Ok(Self { t, x, u })
    }

    pub fn from_field(field: &EulerianField) -> Self {
        Self { t: field.t, x: field.grid.coordinates(), u: field.values.clone() }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Number of adjacent node pairs that are out of order.
    pub fn inversions(&self) -> usize {
        self.x.windows(2).filter(|w| w[1] <= w[0]).count()
    }

    pub fn is_monotone(&self) -> bool {
        self.inversions() == 0
    }
}

/// Piecewise-linear interpolant through scattered nodes, sorted by position.
#[derive(Debug, Clone)]
pub struct SortedInterpolant {
    xs: Vec<f64>,
    us: Vec<f64>,
}

impl SortedInterpolant {
    pub fn new(x: &[f64], u: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..x.len()).collect();
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        Self { xs: order.iter().map(|&i| x[i]).collect(), us: order.iter().map(|&i| u[i]).collect() }
    }

    /// Reuses a permutation that is nearly sorted already.
    pub fn with_order(x: &[f64], u: &[f64], order: &mut [usize]) -> Self {
        order.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
        Self { xs: order.iter().map(|&i| x[i]).collect(), us: order.iter().map(|&i| u[i]).collect() }
    }

    /// Returns the value and whether the query fell outside the node range.
    pub fn eval(&self, x: f64) -> (f64, bool) {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return (self.us[0], x < self.xs[0]);
        }
        if x >= self.xs[n - 1] {
            return (self.us[n - 1], x > self.xs[n - 1]);
        }
        let k = self.xs.partition_point(|&v| v <= x);
        (lerp(self.xs[k - 1], self.us[k - 1], self.xs[k], self.us[k], x), false)
    }
}

pub(crate) fn lerp(x0: f64, u0: f64, x1: f64, u1: f64, x: f64) -> f64 {
    if x1 == x0 {
        return 0.5 * (u0 + u1);
    }
    let w = (x - x0) / (x1 - x0);
    u0 + w * (u1 - u0)
}

/// Linear interpolation on an increasing abscissa, clamped to the end values.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let k = xs.partition_point(|&v| v <= x);
    lerp(xs[k - 1], ys[k - 1], xs[k], ys[k], x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing() {
        let g = Grid1D::new(0.0, 1.0, 11).unwrap();
        assert!((g.dx() - 0.1).abs() < 1e-15);
        assert_eq!(g.x(10), 1.0);
        let xs = g.coordinates();
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(1.0, 0.0, 5).is_err());
    }

    #[test]
    fn field_rejects_nan() {
        let g = Grid1D::new(0.0, 1.0, 3).unwrap();
        assert!(EulerianField::new(g, 0.0, vec![0.0, f64::NAN, 1.0]).is_err());
        assert!(EulerianField::new(g, 0.0, vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn interpolant_clamps() {
        let s = SortedInterpolant::new(&[1.0, 0.0, 2.0], &[10.0, 0.0, 20.0]);
        assert_eq!(s.eval(0.5), (5.0, false));
        assert_eq!(s.eval(-1.0), (0.0, true));
        assert_eq!(s.eval(3.0), (20.0, true));
    }
}
