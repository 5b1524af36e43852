//! Thrust profiles on altitude grids and the trapezoidal quadrature used for
//! inner products over altitude.

use crate::error::{Error, Result};

/// `n` equally spaced altitudes from `lo` to `hi` inclusive.
pub fn uniform_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "a grid needs at least two nodes");
    (0..n)
        .map(|i| {
            if i + 1 == n {
                hi
            } else {
                lo + (hi - lo) * i as f64 / (n - 1) as f64
            }
        })
        .collect()
}

/// Trapezoidal quadrature weights for an increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let half = 0.5 * (grid[i + 1] - grid[i]);
        w[i] += half;
        w[i + 1] += half;
    }
    w
}

/// Piecewise-linear interpolation of `(xs, ys)` at `x`, clamped to the end
/// values outside `[xs[0], xs[n-1]]`. `xs` must be strictly increasing.
pub fn interp_clamped(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[n - 1] {
        return ys[n - 1];
    }
    let i = xs.partition_point(|&g| g <= x);
    let (x0, x1) = (xs[i - 1], xs[i]);
    let frac = (x - x0) / (x1 - x0);
    ys[i - 1] + frac * (ys[i] - ys[i - 1])
}

/// Effective thrust (N) sampled on an ascending altitude grid (m).
#[derive(Debug, Clone, PartialEq)]
pub struct ThrustProfile {
    grid: Vec<f64>,
    values: Vec<f64>,
}

impl ThrustProfile {
    pub fn new(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::GridMismatch("profile needs at least two nodes".into()));
        }
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid nodes but {} values",
                grid.len(),
                values.len()
            )));
        }
        if grid.windows(2).any(|w| !(w[1] > w[0])) || grid.iter().any(|g| !g.is_finite()) {
            return Err(Error::GridMismatch("grid must be strictly increasing".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("thrust profile", "values must be finite"));
        }
        Ok(ThrustProfile { grid, values })
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.grid[0]
    }

    pub fn upper(&self) -> f64 {
        self.grid[self.grid.len() - 1]
    }

    /// Linearly interpolated thrust, clamped outside the grid.
    pub fn value_at(&self, h: f64) -> f64 {
        interp_clamped(&self.grid, &self.values, h)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ThrustProfile {
        ThrustProfile {
            grid: self.grid.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_grid(&self, other: &[f64]) -> bool {
        self.grid.len() == other.len()
            && self
                .grid
                .iter()
                .zip(other)
                .all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs().max(1.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_hits_both_ends() {
        let g = uniform_grid(4572.0, 9906.0, 100);
        assert_eq!(g.len(), 100);
        assert_eq!(g[0], 4572.0);
        assert_eq!(g[99], 9906.0);
    }

    #[test]
    fn trapezoid_integrates_linear_functions_exactly() {
        let g = uniform_grid(1.0, 3.0, 7);
        let w = trapezoid_weights(&g);
        let integral: f64 = g.iter().zip(&w).map(|(x, wi)| (2.0 * x + 1.0) * wi).sum();
        assert!((integral - 10.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_identity_on_nodes_and_clamps() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [5.0, 7.0, 3.0];
        for (x, y) in xs.iter().zip(&ys) {
            assert_eq!(interp_clamped(&xs, &ys, *x), *y);
        }
        assert_eq!(interp_clamped(&xs, &ys, 2.0), 5.0);
        assert_eq!(interp_clamped(&xs, &ys, -1.0), 5.0);
        assert_eq!(interp_clamped(&xs, &ys, 9.0), 3.0);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(ThrustProfile::new(vec![0.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(ThrustProfile::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(ThrustProfile::new(vec![0.0, 1.0], vec![1.0, f64::NAN]).is_err());
    }
}
