//! Grid-convergence studies against manufactured solutions or a finer run.

use super::mms::{ManufacturedCase, MmsSource};
use crate::error::{Result, SimError};
use crate::grid::{norm, Field, Grid, NormKind};
use crate::model::{Formulation, ModelParams, State};
use crate::solver::{run_simulation, run_with_source, step_W_transport, SchemeConfig, Snapshot};
use crate::tolerances::{self, observed_order};
use serde::Serialize;

/// Observed convergence order between consecutive resolutions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ObservedOrder {
    /// Both errors at rounding level.
    Exact,
    Value(f64),
}

impl ObservedOrder {
    pub fn in_band(&self, (lo, hi): (f64, f64)) -> bool {
        match *self {
            ObservedOrder::Exact => true,
            ObservedOrder::Value(o) => o >= lo && o <= hi,
        }
    }
}

impl std::fmt::Display for ObservedOrder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObservedOrder::Exact => write!(f, "exact"),
            ObservedOrder::Value(o) => write!(f, "{o:.3}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorRow {
    pub n: usize,
    pub rho_l1: f64,
    pub rho_linf: f64,
    /// Error of the evolved momentum (`rho u` or `rho w`).
    pub mom_l1: f64,
    pub mom_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStudy {
    pub label: String,
    pub rows: Vec<ErrorRow>,
}

impl ConvergenceStudy {
    pub fn orders(&self, pick: impl Fn(&ErrorRow) -> f64) -> Vec<ObservedOrder> {
        self.rows
            .windows(2)
            .map(|p| match observed_order(pick(&p[0]), pick(&p[1])) {
                None => ObservedOrder::Exact,
                Some(o) => ObservedOrder::Value(o),
            })
            .collect()
    }

    pub fn rho_l1_orders(&self) -> Vec<ObservedOrder> {
        self.orders(|r| r.rho_l1)
    }

    /// Every `rho` L1 order inside the first-order band.
    pub fn first_order(&self) -> bool {
        self.rho_l1_orders().iter().all(|o| o.in_band(tolerances::ORDER_BAND))
    }

    pub fn table(&self) -> String {
        let mut out = format!("{}\n{:>6} {:>12} {:>12} {:>12} {:>12} {:>8}\n", self.label, "n", "rho_L1", "rho_Linf", "mom_L1", "mom_Linf", "order");
        let orders = self.rho_l1_orders();
        for (k, r) in self.rows.iter().enumerate() {
            let o = if k == 0 { "-".to_string() } else { orders[k - 1].to_string() };
            out.push_str(&format!(
                "{:>6} {:>12.4e} {:>12.4e} {:>12.4e} {:>12.4e} {:>8}\n",
                r.n, r.rho_l1, r.rho_linf, r.mom_l1, r.mom_linf, o
            ));
        }
        out
    }
}

fn check_resolutions(resolutions: &[usize]) -> Result<()> {
    if resolutions.len() < 3 {
        return Err(SimError::Precondition(format!(
            "a convergence study needs at least 3 resolutions, got {}",
            resolutions.len()
        )));
    }
    if resolutions.windows(2).any(|p| p[1] != 2 * p[0]) {
        return Err(SimError::Precondition(format!("resolutions {resolutions:?} are not successive doublings")));
    }
    Ok(())
}

fn errors(n: usize, rho: &Field, mom: &Field, rho_ref: &Field, mom_ref: &Field, grid: &Grid) -> Result<ErrorRow> {
    let dr = rho.zip_map(rho_ref, |a, b| a - b)?;
    let dm = mom.zip_map(mom_ref, |a, b| a - b)?;
    Ok(ErrorRow {
        n,
        rho_l1: norm(&dr, grid, NormKind::L1)?,
        rho_linf: norm(&dr, grid, NormKind::Linf)?,
        mom_l1: norm(&dm, grid, NormKind::L1)?,
        mom_linf: norm(&dm, grid, NormKind::Linf)?,
    })
}

fn at_resolution(n: usize, e: SimError) -> SimError {
    SimError::Numerical(format!("convergence study failed at n = {n}: {e}"))
}

/// Scheme used by the studies: `dt` is CFL-limited by the flow and by a unit
/// reference speed (the manufactured waves travel at speed 1), so it scales with `dx`.
pub fn study_scheme(formulation: Formulation, t_end: f64, grid: &Grid) -> SchemeConfig {
    let base = SchemeConfig::with_formulation(formulation);
    SchemeConfig {
        dt_max: base.cfl * grid.dx(),
        dt_init: base.cfl * grid.dx(),
        snapshot_every: t_end.max(f64::MIN_POSITIVE),
        ..base
    }
}

/// Solver with manufactured sources against the exact solution at `t_end`.
pub fn mms_study(case: &ManufacturedCase, formulation: Formulation, resolutions: &[usize]) -> Result<ConvergenceStudy> {
    check_resolutions(resolutions)?;
    let params = case.params();
    let source = MmsSource { case, formulation };
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let row = (|| {
            let grid = Grid::new(n)?;
            let scheme = study_scheme(formulation, case.t_end, &grid);
            let init = case.state(&grid, 0.0, formulation)?;
            let tr = run_with_source(&init, &params, &scheme, case.t_end, Some(&source), &mut |_: &Snapshot| Ok(()))?;
            let exact = case.state(&grid, case.t_end, formulation)?;
            let fin = tr.final_state();
            errors(n, &fin.rho, &fin.mom, &exact.rho, &exact.mom, &grid)
        })()
        .map_err(|e| at_resolution(n, e))?;
        rows.push(row);
    }
    Ok(ConvergenceStudy {
        label: format!("mms {} ({formulation})", case.name),
        rows,
    })
}

/// Average of each run of `factor` consecutive cells.
pub fn coarsen(fine: &Field, factor: usize) -> Field {
    Field::new(
        fine.values()
            .chunks(factor)
            .map(|c| c.iter().sum::<f64>() / factor as f64)
            .collect(),
    )
}

/// Each resolution against a run on a four times finer grid, averaged back
/// onto the coarse cells. `make_init` builds the initial state on a grid.
pub fn self_reference_study(
    label: &str,
    make_init: &dyn Fn(&Grid) -> Result<State>,
    params: &ModelParams,
    scheme: &SchemeConfig,
    t_end: f64,
    resolutions: &[usize],
) -> Result<ConvergenceStudy> {
    check_resolutions(resolutions)?;
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let row = (|| {
            let grid = Grid::new(n)?;
            let fine_grid = Grid::new(4 * n)?;
            let coarse = run_simulation(&make_init(&grid)?, params, scheme, t_end)?;
            let fine = run_simulation(&make_init(&fine_grid)?, params, scheme, t_end)?;
            let (c, f) = (coarse.final_state(), fine.final_state());
            errors(n, &c.rho, &c.mom, &coarsen(&f.rho, 4), &coarsen(&f.mom, 4), &grid)
        })()
        .map_err(|e| at_resolution(n, e))?;
        rows.push(row);
    }
    Ok(ConvergenceStudy {
        label: label.to_string(),
        rows,
    })
}

/// `W` transported by `u = 1` at unit CFL for one full period: the exact
/// solution is the initial profile. Errors are reported in the `rho` columns.
pub fn transport_shift_study(resolutions: &[usize]) -> Result<ConvergenceStudy> {
    check_resolutions(resolutions)?;
    let mut rows = Vec::with_capacity(resolutions.len());
    for &n in resolutions {
        let grid = Grid::new(n)?;
        let w0 = Field::from_fn(&grid, |x| (2.0 * std::f64::consts::PI * x).sin() + 0.3 * (6.0 * std::f64::consts::PI * x).cos());
        let u = Field::constant(&grid, 1.0);
        let mut w = w0.clone();
        for _ in 0..n {
            w = step_W_transport(&w, &u, &grid, grid.dx())?;
        }
        rows.push(errors(n, &w, &w, &w0, &w0, &grid)?);
    }
    Ok(ConvergenceStudy {
        label: "W transport, unit CFL".into(),
        rows,
    })
}
