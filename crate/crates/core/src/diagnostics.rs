//! Discrete evaluation of the conservation laws, energy balances, bounds and
//! limit relations the continuous system satisfies.
//!
//! Each check belongs to one of three classes:
//!
//! * **exact**: the scheme preserves it to rounding (mass, the `u`-energy
//!   inequality in the u-formulation, `int rho w^2` in the w-formulation, the
//!   transported-`W` maximum principle, the `Psi` identities);
//! * **reconstruction**: the quantity is rebuilt from the state and carries
//!   scheme error (reconstructed `W`, `int rho W^2`); a fixed slack applies;
//! * **refinement**: only the continuum satisfies it (`H` and `rho p`
//!   balances); the residual must shrink under grid refinement.
//!
//! Threshold values live in [`crate::tolerances`].

use crate::error::Result;
use crate::grid::{ddx_central, integrate, norm, Field, Grid, NormKind};
use crate::model::{compute_W, derive_fields, ModelParams, State};
use crate::solver::{Accumulators, Trajectory};
use crate::tolerances;
use serde::{Deserialize, Serialize};

/// One snapshot of every monitored functional. Serialized field names are part
/// of the diagnostics JSON-lines format.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub ke_u: f64,
    pub ke_w: f64,
    pub H_total: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    pub W_max: f64,
    pub W_min: f64,
    pub rhoW2: f64,
    pub pi_l1: f64,
    pub dpi_l2: f64,
    pub switching_residual: f64,
    pub lower_bound_margin: f64,
    pub energy_residual: f64,
    pub H_balance_residual: f64,
    pub rho_p_balance_residual: f64,
}

impl DiagnosticsRecord {
    pub const FIELD_NAMES: [&'static str; 17] = [
        "t",
        "mass",
        "ke_u",
        "ke_w",
        "H_total",
        "rho_min",
        "rho_max",
        "W_max",
        "W_min",
        "rhoW2",
        "pi_l1",
        "dpi_l2",
        "switching_residual",
        "lower_bound_margin",
        "energy_residual",
        "H_balance_residual",
        "rho_p_balance_residual",
    ];

    pub fn values(&self) -> [f64; 17] {
        [
            self.t,
            self.mass,
            self.ke_u,
            self.ke_w,
            self.H_total,
            self.rho_min,
            self.rho_max,
            self.W_max,
            self.W_min,
            self.rhoW2,
            self.pi_l1,
            self.dpi_l2,
            self.switching_residual,
            self.lower_bound_margin,
            self.energy_residual,
            self.H_balance_residual,
            self.rho_p_balance_residual,
        ]
    }
}

/// Quantities fixed by the initial data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialDataSummary {
    /// `max (d_x w0 / rho0)`.
    pub m0: f64,
    pub rho0_min: f64,
    pub rho0_max: f64,
    pub mean_rho0: f64,
    /// `int rho0`.
    pub e0: f64,
    /// `int rho0 u0^2`.
    pub e1: f64,
    /// `int rho0 w0^2 + int H(rho0)`.
    pub e2: f64,
    pub h_total0: f64,
    /// `int rho0 p(rho0)`.
    pub rho_p0: f64,
    /// `|d_x w0|_{L2}`.
    pub dw0_l2: f64,
}

pub fn summarize_initial(state: &State, params: &ModelParams) -> Result<InitialDataSummary> {
    let grid = &state.grid;
    let d = derive_fields(state, params)?;
    let mass = integrate(&state.rho, grid)?;
    let ke_w = integrate(&weighted_square(&state.rho, &d.w), grid)?;
    let h_total0 = integrate(&d.H, grid)?;
    Ok(InitialDataSummary {
        m0: d.W.max(),
        rho0_min: state.rho.min(),
        rho0_max: state.rho.max(),
        mean_rho0: mass / Grid::LENGTH,
        e0: mass,
        e1: integrate(&weighted_square(&state.rho, &d.u), grid)?,
        e2: ke_w + h_total0,
        h_total0,
        rho_p0: integrate(&state.rho.zip_map(&d.p, |r, p| r * p)?, grid)?,
        dw0_l2: norm(&ddx_central(&d.w, grid)?, grid, NormKind::L2)?,
    })
}

fn weighted_square(rho: &Field, v: &Field) -> Field {
    rho.zip_map(v, |r, x| r * x * x).expect("fields share one grid")
}

/// `|| (1 - rho) pi(rho) ||_{L2}`, no clamping of `rho` above 1.
pub fn switching_residual(rho: &Field, params: &ModelParams, grid: &Grid) -> Result<f64> {
    let pi = crate::model::pi_field(rho, params)?;
    norm(&rho.zip_map(&pi, |r, p| (1.0 - r) * p)?, grid, NormKind::L2)
}

/// `ke_u + 2 int int lambda (d_x u)^2 - E1`.
pub fn basic_energy_residual(ke_u: f64, e1_seed: f64, dissipation: f64) -> f64 {
    ke_u + 2.0 * dissipation - e1_seed
}

/// `int H(t) - int H(0) + int int rho (d_x p)^2 - int int (d_x p) rho w`.
pub fn h_balance_residual(h_total: f64, h_total0: f64, acc: &Accumulators) -> f64 {
    h_total - h_total0 + acc.offset_dissipation - acc.work
}

/// `int rho p(t) - int rho0 p(rho0) + int int lambda d_x u`.
pub fn rho_p_balance_residual(rho_p: f64, rho_p0: f64, acc: &Accumulators) -> f64 {
    rho_p - rho_p0 + acc.plain_dissipation
}

/// Guaranteed lower bound `1 / (M0 t + 1 / min rho0)`; equals `min rho0` at `M0 t = 0`.
pub fn density_lower_bound(t: f64, init: &InitialDataSummary) -> f64 {
    let growth = init.m0 * t;
    if growth == 0.0 {
        init.rho0_min
    } else {
        1.0 / (growth + 1.0 / init.rho0_min)
    }
}

pub fn lower_bound_margin(rho_min: f64, t: f64, init: &InitialDataSummary) -> f64 {
    rho_min - density_lower_bound(t, init)
}

/// Fills a full record. `u` and `w` are both derived from the state whatever
/// its formulation.
pub fn record(
    state: &State,
    params: &ModelParams,
    acc: &Accumulators,
    init: &InitialDataSummary,
) -> Result<DiagnosticsRecord> {
    let grid = &state.grid;
    let d = derive_fields(state, params)?;
    let rho = &state.rho;
    let ke_u = integrate(&weighted_square(rho, &d.u), grid)?;
    let h_total = integrate(&d.H, grid)?;
    let rho_p = integrate(&rho.zip_map(&d.p, |r, p| r * p)?, grid)?;
    let dw = ddx_central(&d.w, grid)?;
    let rho_w2 = integrate(&dw.zip_map(rho, |g, r| g * g / r)?, grid)?;
    let rho_min = rho.min();
    Ok(DiagnosticsRecord {
        t: state.t,
        mass: integrate(rho, grid)?,
        ke_u,
        ke_w: integrate(&weighted_square(rho, &d.w), grid)?,
        H_total: h_total,
        rho_min,
        rho_max: rho.max(),
        W_max: d.W.max(),
        W_min: d.W.min(),
        rhoW2: rho_w2,
        pi_l1: norm(&d.pi, grid, NormKind::L1)?,
        dpi_l2: norm(&ddx_central(&d.pi, grid)?, grid, NormKind::L2)?,
        switching_residual: switching_residual(rho, params, grid)?,
        lower_bound_margin: lower_bound_margin(rho_min, state.t, init),
        energy_residual: basic_energy_residual(ke_u, init.e1, acc.dissipation),
        H_balance_residual: h_balance_residual(h_total, init.h_total0, acc),
        rho_p_balance_residual: rho_p_balance_residual(rho_p, init.rho_p0, acc),
    })
}

/// `int rho W^2` by way of `W` itself; [`record`] uses `(d_x w)^2 / rho`.
#[allow(non_snake_case)]
pub fn rho_W2_via_potential(state: &State, params: &ModelParams) -> Result<f64> {
    let w = state.w(params)?;
    let big_w = compute_W(&state.rho, &w, &state.grid)?;
    integrate(&weighted_square(&state.rho, &big_w), &state.grid)
}

/// Outcome of a trajectory-level check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: &'static str,
    pub holds: bool,
    /// Worst observed value of the checked quantity (violation or drift).
    pub worst: f64,
    pub tolerance: f64,
}

impl Verdict {
    fn new(name: &'static str, worst: f64, tolerance: f64) -> Self {
        Verdict {
            name,
            holds: worst <= tolerance,
            worst,
            tolerance,
        }
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: worst {:.6e} (tolerance {:.3e})",
            if self.holds { "PASS" } else { "FAIL" },
            self.name,
            self.worst,
            self.tolerance
        )
    }
}

pub fn mass_conservation_check(records: &[DiagnosticsRecord]) -> Verdict {
    let m0 = records[0].mass;
    let worst = records.iter().fold(0.0f64, |w, r| w.max(((r.mass - m0) / m0).abs()));
    Verdict::new("mass conservation", worst, tolerances::MASS_REL)
}

/// The basic-energy residual must lie in `[-0.05 E1, 1e-8]`. Reports the
/// distance outside that band (zero when inside).
pub fn basic_energy_check(records: &[DiagnosticsRecord], e1: f64) -> Verdict {
    let lower = -tolerances::ENERGY_LOWER_REL * e1;
    let worst = records.iter().fold(0.0f64, |w, r| {
        let above = r.energy_residual - tolerances::ENERGY_UPPER;
        let below = lower - r.energy_residual;
        w.max(above).max(below)
    });
    Verdict::new("basic energy band", worst, 0.0)
}

/// `int rho w^2` non-increasing between consecutive snapshots.
pub fn ke_w_monotone_check(records: &[DiagnosticsRecord]) -> Verdict {
    let scale = records[0].ke_w.max(f64::MIN_POSITIVE);
    let worst = records
        .windows(2)
        .fold(0.0f64, |w, p| w.max((p[1].ke_w - p[0].ke_w) / scale));
    Verdict::new("int rho w^2 non-increasing", worst, tolerances::KE_W_MONOTONE_REL)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WSource {
    /// Evolved by `step_W_transport`.
    Transported,
    /// Rebuilt from the PDE state with `compute_W`.
    Reconstructed,
}

/// `W_max(t) <= W_max(0) + tol (1 + |W_max(0)|)`.
#[allow(non_snake_case)]
pub fn W_max_principle_check(w_max: &[f64], source: WSource) -> Verdict {
    let first = w_max[0];
    let factor = match source {
        WSource::Transported => tolerances::W_TRANSPORT_TOL,
        WSource::Reconstructed => tolerances::W_RECONSTRUCTED_TOL,
    };
    let worst = w_max.iter().fold(0.0f64, |w, &m| w.max(m - first));
    Verdict::new("W maximum principle", worst, factor * (1.0 + first.abs()))
}

/// Largest `W_max(t) - W_max(0)` over the records (zero when never exceeded).
#[allow(non_snake_case)]
pub fn W_max_violation(records: &[DiagnosticsRecord]) -> f64 {
    let first = records[0].W_max;
    records.iter().fold(0.0f64, |w, r| w.max(r.W_max - first))
}

/// `|int rho W^2 (t) - int rho W^2 (0)| <= tol (1 + int rho W^2 (0))`.
#[allow(non_snake_case)]
pub fn rhoW2_conservation_check(records: &[DiagnosticsRecord], tol: f64) -> Verdict {
    let first = records[0].rhoW2;
    Verdict::new("int rho W^2 conservation", rho_w2_drift(records), tol * (1.0 + first))
}

/// Largest absolute drift of `int rho W^2` from its initial value.
pub fn rho_w2_drift(records: &[DiagnosticsRecord]) -> f64 {
    let first = records[0].rhoW2;
    records.iter().fold(0.0f64, |w, r| w.max((r.rhoW2 - first).abs()))
}

/// Lower-bound margins must stay above `-tol`.
pub fn lower_bound_check(records: &[DiagnosticsRecord], tol: f64) -> Verdict {
    let worst = records.iter().fold(0.0f64, |w, r| w.max(-r.lower_bound_margin));
    Verdict::new("density lower bound", worst, tol)
}

/// Discrete test function of the improved potential estimate,
/// `Psi(x, t) = int_0^x (rho0 - <rho>) - int_0^t (mass flux)(x, s) ds`,
/// sampled on faces at every snapshot.
#[derive(Debug, Clone)]
pub struct PsiReport {
    pub times: Vec<f64>,
    /// `Psi` on the `n + 1` faces `x = 0, dx, .., 1` at each snapshot.
    pub psi: Vec<Vec<f64>>,
    /// `max |Psi(1, t) - Psi(0, t)|`.
    pub periodicity_gap: f64,
    /// `max |(Psi_{i+1/2} - Psi_{i-1/2}) / dx - (rho_i - <rho>)|`.
    pub slope_error: f64,
    pub dx: f64,
}

impl PsiReport {
    pub fn periodic(&self) -> bool {
        self.periodicity_gap <= tolerances::PSI_PERIODIC
    }

    pub fn slope_ok(&self) -> bool {
        self.slope_error <= tolerances::PSI_SLOPE_DX * self.dx
    }
}

pub fn psi_test_function(trajectory: &Trajectory) -> Result<PsiReport> {
    let init = trajectory.initial_state();
    let grid = init.grid;
    let n = grid.n_cells();
    let dx = grid.dx();
    let mean = trajectory.init.mean_rho0;

    // prefix sums of rho0 - <rho> at faces 0..=n
    let mut base = vec![0.0; n + 1];
    for i in 0..n {
        base[i + 1] = base[i] + (init.rho[i] - mean) * dx;
    }

    let mut report = PsiReport {
        times: Vec::with_capacity(trajectory.snapshots.len()),
        psi: Vec::with_capacity(trajectory.snapshots.len()),
        periodicity_gap: 0.0,
        slope_error: 0.0,
        dx,
    };
    for snap in &trajectory.snapshots {
        grid.check(&snap.mass_flux)?;
        // face k sits at x = k dx; face 0 is the right face of cell n-1
        let psi: Vec<f64> = (0..=n)
            .map(|k| {
                let flux = snap.mass_flux[(k + n - 1) % n];
                base[k] - flux
            })
            .collect();
        report.periodicity_gap = report.periodicity_gap.max((psi[n] - psi[0]).abs());
        for i in 0..n {
            let slope = (psi[i + 1] - psi[i]) / dx;
            let err = (slope - (snap.state.rho[i] - mean)).abs();
            report.slope_error = report.slope_error.max(err);
        }
        report.times.push(snap.state.t);
        report.psi.push(psi);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeightedDissipation {
    /// `int int (rho - <rho>) lambda d_x u`.
    pub i_mean: f64,
    /// `int int lambda d_x u`.
    pub i_plain: f64,
    /// `i_plain` restricted to `rho <= S_m`.
    pub low: f64,
    /// `i_plain` restricted to `rho > S_m`.
    pub high: f64,
    pub threshold: f64,
}

pub fn weighted_dissipation_report(trajectory: &Trajectory) -> WeightedDissipation {
    let acc = &trajectory.accumulators;
    WeightedDissipation {
        i_mean: acc.weighted_dissipation,
        i_plain: acc.plain_dissipation,
        low: acc.plain_low,
        high: acc.plain_high,
        threshold: Accumulators::split_threshold(trajectory.init.mean_rho0),
    }
}
