//! Brute-force single step for tiny grids: plain loops, `powf`, and a dense LU
//! solve. Shares no code with the solver beyond the state type.

use crate::error::{Result, SimError};
use crate::model::{Formulation, ModelParams, State};
use nalgebra::{DMatrix, DVector};

pub const MAX_ORACLE_CELLS: usize = 8;

fn lax_friedrichs(carrier: &[f64], q: &[f64], visc: f64) -> Vec<f64> {
    let n = q.len();
    (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            carrier[i] * (q[i] + q[j]) / 2.0 - visc / 2.0 * (q[j] - q[i])
        })
        .collect()
}

fn largest(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

fn divergence(f: &[f64], r: f64) -> Vec<f64> {
    let n = f.len();
    (0..n).map(|i| r * (f[i] - f[(i + n - 1) % n])).collect()
}

/// `base_i + c (k_{i-1/2} + k_{i+1/2})` on the diagonal, `-c k` beside it.
fn dense_diffusion(base: &[f64], cell_coef: &[f64], c: f64) -> (DMatrix<f64>, Vec<f64>) {
    let n = base.len();
    let face: Vec<f64> = (0..n).map(|i| (cell_coef[i] + cell_coef[(i + 1) % n]) / 2.0).collect();
    let mut a = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        let l = (i + n - 1) % n;
        let rgt = (i + 1) % n;
        a[(i, i)] += base[i] + c * (face[l] + face[i]);
        a[(i, l)] -= c * face[l];
        a[(i, rgt)] -= c * face[i];
    }
    (a, face)
}

fn dense_solve(a: DMatrix<f64>, rhs: &[f64]) -> Result<Vec<f64>> {
    a.lu()
        .solve(&DVector::from_column_slice(rhs))
        .map(|x| x.iter().copied().collect())
        .ok_or_else(|| SimError::Numerical("dense oracle matrix is singular".into()))
}

/// One step of the state's formulation with time step `dt`, no positivity rescue.
pub fn dense_step_oracle(state: &State, params: &ModelParams, dt: f64) -> Result<State> {
    let n = state.grid.n_cells();
    if n > MAX_ORACLE_CELLS {
        return Err(SimError::Precondition(format!(
            "dense oracle is limited to {MAX_ORACLE_CELLS} cells, got {n}"
        )));
    }
    let g = params.gamma();
    let dx = 1.0 / n as f64;
    let r = dt / dx;
    let c = dt / (dx * dx);
    let rho: Vec<f64> = state.rho.values().to_vec();
    let m: Vec<f64> = state.mom.values().to_vec();
    let v: Vec<f64> = (0..n).map(|i| m[i] / rho[i]).collect();
    let speed: Vec<f64> = (0..n).map(|i| (v[i] + v[(i + 1) % n]) / 2.0).collect();
    let adv = lax_friedrichs(&speed, &rho, largest(&speed));

    let (rho_new, flux) = match state.formulation {
        Formulation::UForm => {
            let div = divergence(&adv, r);
            ((0..n).map(|i| rho[i] - div[i]).collect::<Vec<_>>(), adv)
        }
        Formulation::WForm => {
            let d: Vec<f64> = rho.iter().map(|x| g * x.powf(g)).collect();
            let (a, d_face) = dense_diffusion(&vec![1.0; n], &d, c);
            let div = divergence(&adv, r);
            let rhs: Vec<f64> = (0..n).map(|i| rho[i] - div[i]).collect();
            let rn = dense_solve(a, &rhs)?;
            let total = (0..n)
                .map(|i| adv[i] - d_face[i] * (rn[(i + 1) % n] - rn[i]) / dx)
                .collect();
            (rn, total)
        }
    };
    let mom_flux = lax_friedrichs(&flux, &v, largest(&flux));
    let div = divergence(&mom_flux, r);
    let mom_star: Vec<f64> = (0..n).map(|i| m[i] - div[i]).collect();

    let mom_new = match state.formulation {
        Formulation::UForm => {
            let lam: Vec<f64> = rho.iter().map(|x| g * x.powf(g + 1.0)).collect();
            let (a, _) = dense_diffusion(&rho_new, &lam, c);
            let u = dense_solve(a, &mom_star)?;
            (0..n).map(|i| rho_new[i] * u[i]).collect()
        }
        Formulation::WForm => mom_star,
    };
    State::new(
        state.t + dt,
        state.grid,
        crate::grid::Field::new(rho_new),
        crate::grid::Field::new(mom_new),
        state.formulation,
    )
}
