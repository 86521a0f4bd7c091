//! Matched runs over an increasing sequence of `gamma`, sharing grid, initial
//! recipe and scheme, and the cross-`gamma` quantities that track the
//! hard-congestion limit.

use crate::diagnostics::{summarize_initial, weighted_dissipation_report, InitialDataSummary};
use crate::error::{Result, SimError};
use crate::grid::{ddx_central, norm, Field, Grid, NormKind};
use crate::model::{Formulation, ModelParams, State};
use crate::solver::{run_simulation, SchemeConfig};
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;
use std::time::Instant;

/// Environment variable overriding [`SweepConfig::parallel_runs`].
pub const THREADS_ENV: &str = "CONGESTION_SIM_THREADS";

/// Initial density and desired velocity `w`, shared by every run of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InitialRecipe {
    /// `rho = mean + amp cos(2 pi x + phase)`, `w = w_amp sin(2 pi x)`.
    Cosine {
        rho_mean: f64,
        rho_amp: f64,
        w_amp: f64,
        phase: f64,
    },
    /// Cosine plus the second harmonic at half amplitude in both fields.
    TwoMode {
        rho_mean: f64,
        rho_amp: f64,
        w_amp: f64,
        phase: f64,
    },
    /// Tabulated profile, resampled to cells by nearest sample.
    Samples { x: Vec<f64>, rho: Vec<f64>, w: Vec<f64> },
}

impl InitialRecipe {
    pub fn constant(rho: f64, w: f64) -> Self {
        InitialRecipe::Samples {
            x: vec![0.5],
            rho: vec![rho],
            w: vec![w],
        }
    }

    /// `(rho0, w0)` sampled at the cell centres.
    pub fn fields(&self, grid: &Grid) -> Result<(Field, Field)> {
        match self {
            InitialRecipe::Cosine {
                rho_mean,
                rho_amp,
                w_amp,
                phase,
            } => Ok((
                Field::from_fn(grid, |x| rho_mean + rho_amp * (2.0 * PI * x + phase).cos()),
                Field::from_fn(grid, |x| w_amp * (2.0 * PI * x).sin()),
            )),
            InitialRecipe::TwoMode {
                rho_mean,
                rho_amp,
                w_amp,
                phase,
            } => Ok((
                Field::from_fn(grid, |x| {
                    let a = 2.0 * PI * x + phase;
                    rho_mean + rho_amp * (a.cos() + 0.5 * (2.0 * a).cos())
                }),
                Field::from_fn(grid, |x| w_amp * ((2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).sin())),
            )),
            InitialRecipe::Samples { x, rho, w } => {
                if x.is_empty() || x.len() != rho.len() || x.len() != w.len() {
                    return Err(SimError::Config(format!(
                        "tabulated initial data needs equal, non-empty columns (x: {}, rho: {}, w: {})",
                        x.len(),
                        rho.len(),
                        w.len()
                    )));
                }
                let mut r = Vec::with_capacity(grid.n_cells());
                let mut v = Vec::with_capacity(grid.n_cells());
                for &xc in grid.centers().iter() {
                    let k = nearest_sample(x, xc);
                    r.push(rho[k]);
                    v.push(w[k]);
                }
                Ok((Field::new(r), Field::new(v)))
            }
        }
    }

    /// Initial state in the requested formulation.
    pub fn state(&self, grid: &Grid, params: &ModelParams, formulation: Formulation) -> Result<State> {
        let (rho, w) = self.fields(grid)?;
        if let Some(i) = rho.iter().position(|&r| !(r > 0.0)) {
            return Err(SimError::Config(format!(
                "lower bound rho0 > 0 violated: rho0 = {} at x = {}",
                rho[i],
                grid.center(i)
            )));
        }
        State::from_velocity(0.0, *grid, rho, &w, Formulation::WForm)?.converted(formulation, params)
    }
}

/// Index of the sample closest to `xc` in periodic distance; ties go to the first.
fn nearest_sample(xs: &[f64], xc: f64) -> usize {
    let dist = |x: f64| {
        let d = (x - xc).rem_euclid(Grid::LENGTH);
        d.min(Grid::LENGTH - d)
    };
    let mut best = 0;
    for (k, &x) in xs.iter().enumerate() {
        if dist(x) < dist(xs[best]) {
            best = k;
        }
    }
    best
}

/// A recipe that satisfies the well-posedness hypotheses for every `gamma`
/// of the sweep, with its initial summary at the largest `gamma`.
#[derive(Debug, Clone)]
pub struct CheckedRecipe {
    pub recipe: InitialRecipe,
    pub summary: InitialDataSummary,
}

/// Checks `0 < rho0 <= 1 + 1/gamma_max`, `<rho0> < 1`, finite `M0` and
/// finite `|d_x w0|_{L2}` on the discrete grid.
pub fn validate_recipe(recipe: &InitialRecipe, gammas: &[f64], grid: &Grid) -> Result<CheckedRecipe> {
    let gamma_max = gammas
        .iter()
        .copied()
        .fold(f64::NAN, f64::max);
    if !(gamma_max > 0.0) {
        return Err(SimError::Config("sweep needs at least one positive gamma".into()));
    }
    let (rho, w) = recipe.fields(grid)?;
    let (rho_min, rho_max) = (rho.min(), rho.max());
    if !(rho_min > 0.0) {
        return Err(SimError::Config(format!("lower bound rho0 > 0 violated: min rho0 = {rho_min}")));
    }
    let cap = 1.0 + 1.0 / gamma_max;
    if !(rho_max <= cap) {
        return Err(SimError::Config(format!(
            "upper bound rho0 <= 1 + 1/gamma violated: max rho0 = {rho_max} > {cap} (gamma = {gamma_max})"
        )));
    }
    let mean = rho.iter().sum::<f64>() / rho.len() as f64;
    if !(mean < 1.0) {
        return Err(SimError::Config(format!("mean bound <rho0> < 1 violated: <rho0> = {mean}")));
    }
    let params = ModelParams::new(gamma_max)?;
    let state = State::from_velocity(0.0, *grid, rho, &w, Formulation::WForm)?;
    let summary = summarize_initial(&state, &params)?;
    let dw = norm(&ddx_central(&w, grid)?, grid, NormKind::L2)?;
    if !(summary.m0.is_finite() && dw.is_finite()) {
        return Err(SimError::Config(format!(
            "bounded d_x w0 violated: M0 = {}, |d_x w0|_L2 = {dw}",
            summary.m0
        )));
    }
    Ok(CheckedRecipe {
        recipe: recipe.clone(),
        summary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub gammas: Vec<f64>,
    pub recipe: InitialRecipe,
    pub n_cells: usize,
    pub t_end: f64,
    pub scheme: SchemeConfig,
    pub parallel_runs: usize,
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if self.gammas.is_empty() {
            return Err(SimError::Config("sweep.gammas is empty".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            return Err(SimError::Config(format!("sweep.gammas entry {g} must be positive")));
        }
        if self.gammas.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(SimError::Config("sweep.gammas must be strictly increasing".into()));
        }
        if self.parallel_runs == 0 {
            return Err(SimError::Config("sweep.parallel_runs must be at least 1".into()));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(SimError::Config(format!("time.t_end = {} is out of range", self.t_end)));
        }
        self.scheme.validate()
    }
}

/// Per-run figures, maxima and minima over every snapshot.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunMetrics {
    pub max_rho_over_run: f64,
    pub min_rho_over_run: f64,
    pub switching_residual_max: f64,
    pub pi_l1_max: f64,
    pub dpi_l2_max: f64,
    pub I_plain_abs: f64,
    /// `max_t |W_max(t) - W_max(0)|`.
    pub W_max_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RowOutcome {
    Ok(RunMetrics),
    Failed { error: String },
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub gamma: f64,
    pub outcome: RowOutcome,
    /// Wall-clock seconds. Not part of the serialized report.
    #[serde(skip)]
    pub runtime: f64,
}

impl SweepRow {
    pub fn metrics(&self) -> Option<&RunMetrics> {
        match &self.outcome {
            RowOutcome::Ok(m) => Some(m),
            RowOutcome::Failed { .. } => None,
        }
    }
}

/// Differences between consecutive `gamma` runs at `t_end`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CauchyRow {
    pub gamma_a: f64,
    pub gamma_b: f64,
    pub rho_l1: f64,
    pub w_linf: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CongestionFit {
    /// No run pushed the density above 1.
    Degenerate,
    InsufficientData { usable_rows: usize },
    Fit { slope: f64, intercept: f64, r2: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub n_cells: usize,
    pub t_end: f64,
    pub rows: Vec<SweepRow>,
    pub cauchy: Vec<CauchyRow>,
    pub congestion_rate: CongestionFit,
}

impl SweepReport {
    pub fn all_ok(&self) -> bool {
        self.rows.iter().all(|r| r.metrics().is_some())
    }
}

/// Threads to use: the environment override if set and valid, else `parallel_runs`.
pub fn effective_threads(parallel_runs: usize) -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or(parallel_runs)
        .max(1)
}

struct GammaRun {
    row: SweepRow,
    final_fields: Option<(Field, Field)>,
}

fn run_gamma(config: &SweepConfig, grid: &Grid, gamma: f64) -> GammaRun {
    let start = Instant::now();
    let result = (|| -> Result<(RunMetrics, Field, Field)> {
        let params = ModelParams::new(gamma)?;
        let init = config.recipe.state(grid, &params, config.scheme.formulation)?;
        let tr = run_simulation(&init, &params, &config.scheme, config.t_end)?;
        let rs = tr.records();
        let w0 = rs[0].W_max;
        let fold_max = |f: fn(&crate::diagnostics::DiagnosticsRecord) -> f64| {
            rs.iter().map(f).fold(f64::NEG_INFINITY, f64::max)
        };
        let metrics = RunMetrics {
            max_rho_over_run: fold_max(|r| r.rho_max),
            min_rho_over_run: rs.iter().map(|r| r.rho_min).fold(f64::INFINITY, f64::min),
            switching_residual_max: fold_max(|r| r.switching_residual),
            pi_l1_max: fold_max(|r| r.pi_l1),
            dpi_l2_max: fold_max(|r| r.dpi_l2),
            I_plain_abs: weighted_dissipation_report(&tr).i_plain.abs(),
            W_max_drift: rs.iter().fold(0.0f64, |m, r| m.max((r.W_max - w0).abs())),
        };
        let fin = tr.final_state();
        Ok((metrics, fin.rho.clone(), fin.w(&params)?))
    })();
    let runtime = start.elapsed().as_secs_f64();
    match result {
        Ok((metrics, rho, w)) => GammaRun {
            row: SweepRow {
                gamma,
                outcome: RowOutcome::Ok(metrics),
                runtime,
            },
            final_fields: Some((rho, w)),
        },
        Err(e) => GammaRun {
            row: SweepRow {
                gamma,
                outcome: RowOutcome::Failed { error: e.to_string() },
                runtime,
            },
            final_fields: None,
        },
    }
}

/// Runs every `gamma` (concurrently up to the thread budget) and assembles the
/// report in `gamma` order. Run failures become failed rows; only invalid
/// configurations are errors.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    config.validate()?;
    let grid = Grid::new(config.n_cells)?;
    validate_recipe(&config.recipe, &config.gammas, &grid)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective_threads(config.parallel_runs))
        .build()
        .map_err(|e| SimError::Config(format!("cannot start worker pool: {e}")))?;
    let runs: Vec<GammaRun> = pool.install(|| {
        config
            .gammas
            .par_iter()
            .map(|&g| run_gamma(config, &grid, g))
            .collect()
    });

    let mut cauchy = Vec::new();
    for pair in runs.windows(2) {
        if let (Some((ra, wa)), Some((rb, wb))) = (&pair[0].final_fields, &pair[1].final_fields) {
            cauchy.push(CauchyRow {
                gamma_a: pair[0].row.gamma,
                gamma_b: pair[1].row.gamma,
                rho_l1: norm(&ra.zip_map(rb, |a, b| a - b)?, &grid, NormKind::L1)?,
                w_linf: norm(&wa.zip_map(wb, |a, b| a - b)?, &grid, NormKind::Linf)?,
            });
        }
    }
    let rows: Vec<SweepRow> = runs.into_iter().map(|r| r.row).collect();
    let congestion_rate = fit_congestion_rate(&rows);
    Ok(SweepReport {
        n_cells: config.n_cells,
        t_end: config.t_end,
        rows,
        cauchy,
        congestion_rate,
    })
}

/// Least-squares line (with intercept) of `max_rho - 1` against `ln(gamma) / gamma`
/// over the rows whose density exceeded 1.
pub fn fit_congestion_rate(rows: &[SweepRow]) -> CongestionFit {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.metrics().map(|m| (r.gamma, m.max_rho_over_run - 1.0)))
        .filter(|&(_, excess)| excess > 0.0)
        .map(|(g, excess)| (g.ln() / g, excess))
        .collect();
    if pts.is_empty() {
        return CongestionFit::Degenerate;
    }
    if pts.len() < 3 {
        return CongestionFit::InsufficientData { usable_rows: pts.len() };
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return CongestionFit::InsufficientData { usable_rows: pts.len() };
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    CongestionFit::Fit {
        slope,
        intercept: my - slope * mx,
        r2,
    }
}
