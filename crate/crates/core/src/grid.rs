//! Uniform cell-centred mesh on the unit torus and the discrete calculus used
//! by the rest of the crate.
//!
//! Cell `i` covers `[i dx, (i+1) dx)` and its centre sits at `(i + 1/2) dx`.
//! All index arithmetic wraps modulo `n_cells`.

use crate::error::{Result, SimError};
use serde::{Deserialize, Serialize};

pub const MIN_CELLS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n_cells: usize,
    dx: f64,
}

impl Grid {
    pub const LENGTH: f64 = 1.0;

    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < MIN_CELLS {
            return Err(SimError::Config(format!(
                "grid needs at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        Ok(Grid {
            n_cells,
            dx: Self::LENGTH / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> Field {
        Field::from_fn(self, |x| x)
    }

    #[inline]
    pub fn prev(&self, i: usize) -> usize {
        if i == 0 {
            self.n_cells - 1
        } else {
            i - 1
        }
    }

    #[inline]
    pub fn next(&self, i: usize) -> usize {
        if i + 1 == self.n_cells {
            0
        } else {
            i + 1
        }
    }

    pub fn check(&self, f: &Field) -> Result<()> {
        if f.len() != self.n_cells {
            return Err(SimError::Dimension {
                expected: self.n_cells,
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// Cell-centre samples of a periodic function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Field {
    values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Field {
            values: vec![value; grid.n_cells()],
        }
    }

    pub fn zeros(grid: &Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64) -> f64) -> Self {
        Field {
            values: (0..grid.n_cells()).map(|i| f(grid.center(i))).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.values.iter()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field {
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field> {
        if self.len() != other.len() {
            return Err(SimError::Dimension {
                expected: self.len(),
                got: other.len(),
            });
        }
        Ok(Field {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index of the smallest entry (first one on ties).
    pub fn argmin(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v < self.values[best] {
                best = i;
            }
        }
        best
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

impl std::ops::IndexMut<usize> for Field {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.values[i]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormKind {
    L1,
    L2,
    Linf,
}

/// Central difference `(f_{i+1} - f_{i-1}) / (2 dx)` with periodic wrap.
///
/// Non-periodic input (a sawtooth such as `f_i = x_i`) produces an `O(1/dx)`
/// spike at the wrap; that is the expected answer for the periodic extension.
pub fn ddx_central(f: &Field, grid: &Grid) -> Result<Field> {
    grid.check(f)?;
    let inv = 1.0 / (2.0 * grid.dx());
    let v = f.values();
    let out = (0..grid.n_cells())
        .map(|i| (v[grid.next(i)] - v[grid.prev(i)]) * inv)
        .collect();
    Ok(Field::new(out))
}

/// Midpoint rule: `dx * sum f_i`.
pub fn integrate(f: &Field, grid: &Grid) -> Result<f64> {
    grid.check(f)?;
    Ok(grid.dx() * f.iter().sum::<f64>())
}

pub fn norm(f: &Field, grid: &Grid, kind: NormKind) -> Result<f64> {
    grid.check(f)?;
    Ok(match kind {
        NormKind::L1 => grid.dx() * f.iter().map(|v| v.abs()).sum::<f64>(),
        NormKind::L2 => (grid.dx() * f.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        NormKind::Linf => f.max_abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_tiny_grids() {
        assert!(Grid::new(3).is_err());
        let g = Grid::new(4).unwrap();
        assert!((g.dx() * g.n_cells() as f64 - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn wraps_indices() {
        let g = Grid::new(8).unwrap();
        assert_eq!(g.prev(0), 7);
        assert_eq!(g.next(7), 0);
        assert_eq!(g.next(3), 4);
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = Grid::new(37).unwrap();
        let d = ddx_central(&Field::constant(&g, 3.7), &g).unwrap();
        assert!(d.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn derivative_of_sine() {
        let g = Grid::new(1024).unwrap();
        let f = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        let d = ddx_central(&f, &g).unwrap();
        for i in 0..g.n_cells() {
            let exact = 2.0 * PI * (2.0 * PI * g.center(i)).cos();
            assert!((d[i] - exact).abs() < 1e-4);
        }
    }

    #[test]
    fn sawtooth_spikes_at_wrap() {
        let g = Grid::new(16).unwrap();
        let d = ddx_central(&g.centers(), &g).unwrap();
        // interior slope 1, wrap cells see a jump of -1 over 2dx
        assert!((d[5] - 1.0).abs() < 1e-12);
        assert!(d[0] < -5.0 && d[15] < -5.0);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Grid::new(8).unwrap();
        let f = Field::new(vec![0.0; 7]);
        assert_eq!(
            ddx_central(&f, &g).unwrap_err(),
            SimError::Dimension { expected: 8, got: 7 }
        );
        assert!(integrate(&f, &g).is_err());
        assert!(norm(&f, &g, NormKind::L2).is_err());
    }

    #[test]
    fn integrals() {
        let g = Grid::new(64).unwrap();
        assert_eq!(integrate(&Field::constant(&g, 1.0), &g).unwrap(), 1.0);
        let s = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        assert!(integrate(&s, &g).unwrap().abs() <= 1e-14);
        let c = Field::from_fn(&g, |x| 0.8 + 0.1 * (2.0 * PI * x).cos());
        // plain summation oracle
        let oracle: f64 = (0..64)
            .map(|i| 0.8 + 0.1 * (2.0 * PI * (i as f64 + 0.5) / 64.0).cos())
            .sum::<f64>()
            / 64.0;
        assert!((integrate(&c, &g).unwrap() - 0.8).abs() < 1e-13);
        assert!((oracle - 0.8).abs() < 1e-13);
    }

    #[test]
    fn norms() {
        let g = Grid::new(32).unwrap();
        let f = Field::constant(&g, -2.0);
        for k in [NormKind::L1, NormKind::L2, NormKind::Linf] {
            assert!((norm(&f, &g, k).unwrap() - 2.0).abs() < 1e-14);
            assert_eq!(norm(&Field::zeros(&g), &g, k).unwrap(), 0.0);
        }
        let g = Grid::new(256).unwrap();
        let s = Field::from_fn(&g, |x| (2.0 * PI * x).sin());
        assert!((norm(&s, &g, NormKind::L2).unwrap() - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn central_difference_is_second_order() {
        for k in 1..=4usize {
            let err = |n: usize| {
                let g = Grid::new(n).unwrap();
                let kk = 2.0 * PI * k as f64;
                let f = Field::from_fn(&g, |x| (kk * x).sin());
                let d = ddx_central(&f, &g).unwrap();
                (0..n)
                    .map(|i| (d[i] - kk * (kk * g.center(i)).cos()).abs())
                    .fold(0.0, f64::max)
            };
            let n = 32 * k;
            let order = (err(n) / err(2 * n)).log2();
            assert!(order >= 1.95, "k = {k}: order {order}");
        }
    }

    proptest! {
        #[test]
        fn discrete_divergence_theorem(vals in prop::collection::vec(-10.0f64..10.0, 4..200)) {
            let g = Grid::new(vals.len()).unwrap();
            let f = Field::new(vals);
            let d = ddx_central(&f, &g).unwrap();
            prop_assert!(integrate(&d, &g).unwrap().abs() <= 1e-13);
        }

        #[test]
        fn norm_interpolation(vals in prop::collection::vec(-10.0f64..10.0, 4..200)) {
            let g = Grid::new(vals.len()).unwrap();
            let f = Field::new(vals);
            let l1 = norm(&f, &g, NormKind::L1).unwrap();
            let l2 = norm(&f, &g, NormKind::L2).unwrap();
            let li = norm(&f, &g, NormKind::Linf).unwrap();
            prop_assert!(l2 * l2 <= l1 * li * (1.0 + 1e-12) + 1e-300);
            prop_assert!(l1 <= li * (1.0 + 1e-12));
        }
    }
}
