//! Periodic (cyclic) tridiagonal solves by Sherman-Morrison correction of two
//! Thomas-algorithm solves.

use crate::error::{Result, SimError};

/// Row `i` reads `sub[i] x[i-1] + diag[i] x[i] + sup[i] x[i+1] = rhs[i]`
/// with indices wrapping. `sub[0]` is the top-right corner `A[0][n-1]` and
/// `sup[n-1]` the bottom-left corner `A[n-1][0]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CyclicTridiagonal {
    pub sub: Vec<f64>,
    pub diag: Vec<f64>,
    pub sup: Vec<f64>,
}

const PIVOT_FLOOR: f64 = 1e-300;

impl CyclicTridiagonal {
    pub fn new(sub: Vec<f64>, diag: Vec<f64>, sup: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n < 3 {
            return Err(SimError::Precondition(format!(
                "cyclic tridiagonal system needs n >= 3, got {n}"
            )));
        }
        for v in [&sub, &sup] {
            if v.len() != n {
                return Err(SimError::Dimension { expected: n, got: v.len() });
            }
        }
        Ok(CyclicTridiagonal { sub, diag, sup })
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let im = if i == 0 { n - 1 } else { i - 1 };
                let ip = if i + 1 == n { 0 } else { i + 1 };
                self.sub[i] * x[im] + self.diag[i] * x[i] + self.sup[i] * x[ip]
            })
            .collect()
    }

    pub fn residual_max(&self, x: &[f64], rhs: &[f64]) -> f64 {
        self.apply(x)
            .iter()
            .zip(rhs)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        if rhs.len() != n {
            return Err(SimError::Dimension { expected: n, got: rhs.len() });
        }
        let corner_hi = self.sub[0];
        let corner_lo = self.sup[n - 1];

        // A = T + a b^T with a = (g, 0, .., 0, corner_lo), b = (1, 0, .., 0, corner_hi / g)
        let g = -self.diag[0];
        let mut diag = self.diag.clone();
        diag[0] -= g;
        diag[n - 1] -= corner_lo * corner_hi / g;

        let x = thomas(&self.sub, &diag, &self.sup, rhs)?;
        let mut a = vec![0.0; n];
        a[0] = g;
        a[n - 1] = corner_lo;
        let z = thomas(&self.sub, &diag, &self.sup, &a)?;

        let denom = 1.0 + z[0] + corner_hi * z[n - 1] / g;
        if denom.abs() < PIVOT_FLOOR {
            return Err(SimError::Numerical("singular Sherman-Morrison correction".into()));
        }
        let fact = (x[0] + corner_hi * x[n - 1] / g) / denom;
        Ok(x.iter().zip(&z).map(|(xi, zi)| xi - fact * zi).collect())
    }
}

/// Non-periodic tridiagonal solve; `sub[0]` and `sup[n-1]` are ignored.
fn thomas(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut gam = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut bet = diag[0];
    if bet.abs() < PIVOT_FLOOR {
        return Err(SimError::Numerical("zero pivot in row 0".into()));
    }
    x[0] = rhs[0] / bet;
    for j in 1..n {
        gam[j] = sup[j - 1] / bet;
        bet = diag[j] - sub[j] * gam[j];
        if bet.abs() < PIVOT_FLOOR {
            return Err(SimError::Numerical(format!("zero pivot in row {j}")));
        }
        x[j] = (rhs[j] - sub[j] * x[j - 1]) / bet;
    }
    for j in (0..n - 1).rev() {
        x[j] -= gam[j + 1] * x[j + 1];
    }
    Ok(x)
}

/// Solves the periodic tridiagonal system in the band-plus-corners layout:
/// `sub` and `sup` have length `n - 1` (`sub[k] = A[k+1][k]`, `sup[k] = A[k][k+1]`),
/// `corner_lo = A[n-1][0]` and `corner_hi = A[0][n-1]`.
pub fn solve_cyclic_tridiagonal(
    sub: &[f64],
    diag: &[f64],
    sup: &[f64],
    corner_lo: f64,
    corner_hi: f64,
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if n < 3 {
        return Err(SimError::Precondition(format!(
            "cyclic tridiagonal system needs n >= 3, got {n}"
        )));
    }
    for v in [sub, sup] {
        if v.len() + 1 != n {
            return Err(SimError::Dimension { expected: n - 1, got: v.len() });
        }
    }
    let mut lower = Vec::with_capacity(n);
    lower.push(corner_hi);
    lower.extend_from_slice(sub);
    let mut upper = sup.to_vec();
    upper.push(corner_lo);
    CyclicTridiagonal::new(lower, diag.to_vec(), upper)?.solve(rhs)
}
