use super::{compute_dt, step_with_source, SchemeConfig, SourceTerm};
use crate::diagnostics::{self, DiagnosticsRecord, InitialDataSummary};
use crate::error::{Result, SimError};
use crate::grid::{ddx_central, Field, Grid};
use crate::model::{lambda_field, pressure_field, ModelParams, State};

/// Space-time integrals accumulated step by step. Each increment is evaluated
/// at the post-step state (the time level the implicit solve lands on).
#[derive(Debug, Clone, PartialEq)]
pub struct Accumulators {
    /// `int int lambda (d_x u)^2`, face differences, lambda lagged as in the implicit solve.
    pub dissipation: f64,
    /// `int int rho (d_x p)^2`.
    pub offset_dissipation: f64,
    /// `int int (d_x p) rho w`.
    pub work: f64,
    /// `int int (rho - <rho>) lambda d_x u`.
    pub weighted_dissipation: f64,
    /// `int int lambda d_x u`.
    pub plain_dissipation: f64,
    /// Part of `plain_dissipation` over cells with `rho <= S_m`.
    pub plain_low: f64,
    /// Part of `plain_dissipation` over cells with `rho > S_m`.
    pub plain_high: f64,
    /// Time integral of the scheme's mass flux through each face `i + 1/2`.
    pub mass_flux: Field,
}

impl Accumulators {
    pub fn new(grid: &Grid) -> Self {
        Accumulators {
            dissipation: 0.0,
            offset_dissipation: 0.0,
            work: 0.0,
            weighted_dissipation: 0.0,
            plain_dissipation: 0.0,
            plain_low: 0.0,
            plain_high: 0.0,
            mass_flux: Field::zeros(grid),
        }
    }

    /// Threshold splitting `plain_dissipation`: `(1 + <rho>) / 2`.
    pub fn split_threshold(mean_rho: f64) -> f64 {
        0.5 * (1.0 + mean_rho)
    }

    fn add_step(
        &mut self,
        old: &State,
        new: &State,
        face_flux: &[f64],
        dt: f64,
        params: &ModelParams,
        mean_rho: f64,
    ) -> Result<()> {
        let grid = &new.grid;
        let n = grid.n_cells();
        let dx = grid.dx();
        let u = new.u(params)?;
        let w = new.w(params)?;
        let lam_old = lambda_field(&old.rho, params)?;
        let lam = lambda_field(&new.rho, params)?;
        let p = pressure_field(&new.rho, params)?;
        let dp = ddx_central(&p, grid)?;
        let du = ddx_central(&u, grid)?;
        let threshold = Self::split_threshold(mean_rho);

        let (mut diss, mut offset, mut work) = (0.0, 0.0, 0.0);
        let (mut weighted, mut low, mut high) = (0.0, 0.0, 0.0);
        for i in 0..n {
            let ip = grid.next(i);
            let lam_face = 0.5 * (lam_old[i] + lam_old[ip]);
            let du_face = (u[ip] - u[i]) / dx;
            diss += lam_face * du_face * du_face;
            let rho_face = 0.5 * (new.rho[i] + new.rho[ip]);
            let dp_face = (p[ip] - p[i]) / dx;
            offset += rho_face * dp_face * dp_face;
            work += dp[i] * new.rho[i] * w[i];
            let v = lam[i] * du[i];
            weighted += (new.rho[i] - mean_rho) * v;
            if new.rho[i] <= threshold {
                low += v;
            } else {
                high += v;
            }
        }
        let q = dt * dx;
        self.dissipation += q * diss;
        self.offset_dissipation += q * offset;
        self.work += q * work;
        self.weighted_dissipation += q * weighted;
        self.plain_low += q * low;
        self.plain_high += q * high;
        self.plain_dissipation += q * (low + high);
        for (acc, f) in self.mass_flux.values_mut().iter_mut().zip(face_flux) {
            *acc += dt * f;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub state: State,
    pub record: DiagnosticsRecord,
    /// Accumulated face mass flux at this time (input to the `Psi` test function).
    pub mass_flux: Field,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub params: ModelParams,
    pub init: InitialDataSummary,
    pub snapshots: Vec<Snapshot>,
    pub accumulators: Accumulators,
    pub steps: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &State {
        &self.snapshots.last().expect("trajectory holds the initial snapshot").state
    }

    pub fn initial_state(&self) -> &State {
        &self.snapshots[0].state
    }

    pub fn records(&self) -> Vec<DiagnosticsRecord> {
        self.snapshots.iter().map(|s| s.record.clone()).collect()
    }
}

pub fn run_simulation(init: &State, params: &ModelParams, config: &SchemeConfig, t_end: f64) -> Result<Trajectory> {
    run_with_source(init, params, config, t_end, None, &mut |_: &Snapshot| Ok(()))
}

/// Like [`run_simulation`], calling `hook` on every snapshot as it is taken.
pub fn run_simulation_with(
    init: &State,
    params: &ModelParams,
    config: &SchemeConfig,
    t_end: f64,
    hook: &mut dyn FnMut(&Snapshot) -> Result<()>,
) -> Result<Trajectory> {
    run_with_source(init, params, config, t_end, None, hook)
}

/// Relative slack under which a step is stretched to land on the next output time.
const LANDING_SLACK: f64 = 1e-12;

pub fn run_with_source(
    init: &State,
    params: &ModelParams,
    config: &SchemeConfig,
    t_end: f64,
    source: Option<&dyn SourceTerm>,
    hook: &mut dyn FnMut(&Snapshot) -> Result<()>,
) -> Result<Trajectory> {
    config.validate()?;
    init.check_positive()?;
    if init.formulation != config.formulation {
        return Err(SimError::Config(format!(
            "initial state is {} but the scheme is configured for {}",
            init.formulation, config.formulation
        )));
    }
    if !(t_end >= init.t) {
        return Err(SimError::Precondition(format!("t_end = {t_end} precedes t0 = {}", init.t)));
    }
    let grid = init.grid;
    let summary = diagnostics::summarize_initial(init, params)?;
    let mut acc = Accumulators::new(&grid);

    let first = Snapshot {
        record: diagnostics::record(init, params, &acc, &summary)?,
        state: init.clone(),
        mass_flux: acc.mass_flux.clone(),
    };
    hook(&first)?;
    let mut snapshots = vec![first];

    let t0 = init.t;
    let mut k = 1u64;
    let snap_time = |k: u64| (t0 + k as f64 * config.snapshot_every).min(t_end);
    let mut state = init.clone();
    let mut steps = 0usize;

    while state.t < t_end {
        let target = snap_time(k);
        let mut dt = compute_dt(&state, params, config)?;
        if steps == 0 {
            dt = dt.min(config.dt_init);
        }
        let remaining = target - state.t;
        let mut lands = false;
        if dt >= remaining * (1.0 - LANDING_SLACK) {
            dt = remaining;
            lands = true;
        }
        let outcome = step_with_source(&state, params, config, dt, source)?;
        if outcome.halvings > 0 {
            lands = false;
        }
        let mut next = outcome.state;
        if lands {
            next.t = target;
        }
        acc.add_step(&state, &next, &outcome.face_mass_flux, outcome.dt, params, summary.mean_rho0)?;
        state = next;
        steps += 1;

        if lands {
            let snap = Snapshot {
                record: diagnostics::record(&state, params, &acc, &summary)?,
                state: state.clone(),
                mass_flux: acc.mass_flux.clone(),
            };
            hook(&snap)?;
            snapshots.push(snap);
            while snap_time(k) <= state.t && state.t < t_end {
                k += 1;
            }
        }
    }

    Ok(Trajectory {
        params: *params,
        init: summary,
        snapshots,
        accumulators: acc,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Formulation;
    use std::f64::consts::PI;

    fn smooth(n: usize, form: Formulation, p: &ModelParams) -> State {
        let g = Grid::new(n).unwrap();
        let rho = Field::from_fn(&g, |x| 0.8 + 0.1 * (2.0 * PI * x).cos());
        let w = Field::from_fn(&g, |x| 0.2 * (2.0 * PI * x).sin());
        State::from_velocity(0.0, g, rho, &w, Formulation::WForm)
            .unwrap()
            .converted(form, p)
            .unwrap()
    }

    #[test]
    fn zero_length_run() {
        let p = ModelParams::new(10.0).unwrap();
        let s = smooth(32, Formulation::WForm, &p);
        let tr = run_simulation(&s, &p, &SchemeConfig::default(), 0.0).unwrap();
        assert_eq!(tr.snapshots.len(), 1);
        assert_eq!(tr.steps, 0);
        assert_eq!(tr.accumulators, Accumulators::new(&s.grid));
    }

    #[test]
    fn snapshots_land_on_cadence_and_end() {
        let p = ModelParams::new(10.0).unwrap();
        let s = smooth(64, Formulation::WForm, &p);
        let cfg = SchemeConfig {
            snapshot_every: 0.1,
            ..Default::default()
        };
        let tr = run_simulation(&s, &p, &cfg, 0.35).unwrap();
        let times: Vec<f64> = tr.snapshots.iter().map(|s| s.state.t).collect();
        assert_eq!(times.len(), 5);
        assert_eq!(*times.last().unwrap(), 0.35);
        for (k, t) in times.iter().enumerate().take(4) {
            assert!((t - 0.1 * k as f64).abs() < 1e-12);
        }
        assert!(times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn formulation_mismatch_is_config_error() {
        let p = ModelParams::new(10.0).unwrap();
        let s = smooth(16, Formulation::UForm, &p);
        let r = run_simulation(&s, &p, &SchemeConfig::default(), 0.1);
        assert!(matches!(r, Err(SimError::Config(_))));
    }

    #[test]
    fn runs_are_bit_reproducible() {
        let p = ModelParams::new(20.0).unwrap();
        for form in [Formulation::UForm, Formulation::WForm] {
            let s = smooth(64, form, &p);
            let cfg = SchemeConfig::with_formulation(form);
            let a = run_simulation(&s, &p, &cfg, 0.2).unwrap();
            let b = run_simulation(&s, &p, &cfg, 0.2).unwrap();
            assert_eq!(a.final_state(), b.final_state());
            assert_eq!(a.records(), b.records());
        }
    }
}
