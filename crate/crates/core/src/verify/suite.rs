//! The suites behind `verify --suite`.

use super::{dense_step_oracle, mms_study, transport_shift_study, ManufacturedCase};
use crate::cli::config::{parse_config, ModelChoice, RunConfig};
use crate::cli::shipped::SHIPPED;
use crate::diagnostics::{
    basic_energy_check, ke_w_monotone_check, lower_bound_check, mass_conservation_check, psi_test_function,
    rhoW2_conservation_check, W_max_principle_check, WSource,
};
use crate::error::{Result, SimError};
use crate::grid::{Field, Grid};
use crate::model::{Formulation, ModelParams, State};
use crate::solver::{run_simulation, step_W_transport, step_with_source, CyclicTridiagonal, SchemeConfig};
use crate::sweep::run_sweep;
use crate::tolerances;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Mms,
    Oracle,
    Invariants,
}

impl Suite {
    pub const ALL: [Suite; 3] = [Suite::Mms, Suite::Oracle, Suite::Invariants];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Mms => "mms",
            Suite::Oracle => "oracle",
            Suite::Invariants => "invariants",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, holds: bool, detail: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }

    fn from_verdict(prefix: &str, v: &crate::diagnostics::Verdict) -> Self {
        Check::new(
            format!("{prefix}: {}", v.name),
            v.holds,
            format!("worst {:.3e}, tolerance {:.3e}", v.worst, v.tolerance),
        )
    }
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} {} ({})", if self.holds { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<Check>> {
    match suite {
        Suite::Mms => mms_suite(),
        Suite::Oracle => oracle_suite(),
        Suite::Invariants => invariants_suite(),
    }
}

pub const MMS_RESOLUTIONS: [usize; 3] = [64, 128, 256];

fn mms_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for name in ManufacturedCase::NAMES {
        let case = ManufacturedCase::by_name(name)?;
        for form in [Formulation::UForm, Formulation::WForm] {
            let study = mms_study(&case, form, &MMS_RESOLUTIONS)?;
            let orders: Vec<String> = study.rho_l1_orders().iter().map(|o| o.to_string()).collect();
            checks.push(Check::new(
                format!("mms {name} ({form}) rho L1 order"),
                study.first_order(),
                format!("orders [{}], band {:?}", orders.join(", "), tolerances::ORDER_BAND),
            ));
        }
    }
    let shift = transport_shift_study(&MMS_RESOLUTIONS)?;
    let worst = shift.rows.iter().map(|r| r.rho_linf).fold(0.0, f64::max);
    checks.push(Check::new("W transport unit-CFL shift", worst == 0.0, format!("max error {worst:e}")));
    Ok(checks)
}

/// The small oracle cases: `(label, state, params, dt)`.
pub fn oracle_cases() -> Result<Vec<(String, State, ModelParams, f64)>> {
    let mut cases = Vec::new();
    let g8 = Grid::new(8)?;
    let p2 = ModelParams::new(2.0)?;
    let rho = Field::from_fn(&g8, |x| 1.0 + 0.1 * (2.0 * PI * x).cos());
    let base = State::from_velocity(0.0, g8, rho, &Field::zeros(&g8), Formulation::UForm)?;
    for form in [Formulation::UForm, Formulation::WForm] {
        cases.push((format!("reference n=8 gamma=2 ({form})"), base.converted(form, &p2)?, p2, 1e-4));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for k in 0..6 {
        let n = rng.gen_range(4..=8);
        let grid = Grid::new(n)?;
        let params = ModelParams::new(rng.gen_range(1.0..12.0))?;
        let rho = Field::new((0..n).map(|_| rng.gen_range(0.6..0.95)).collect());
        let vel = Field::new((0..n).map(|_| rng.gen_range(-0.3..0.3)).collect());
        let form = if k % 2 == 0 { Formulation::UForm } else { Formulation::WForm };
        let state = State::from_velocity(0.0, grid, rho, &vel, form)?;
        cases.push((format!("random #{k} n={n} gamma={:.3} ({form})", params.gamma()), state, params, 1e-3));
    }
    Ok(cases)
}

fn oracle_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, state, params, dt) in oracle_cases()? {
        let cfg = SchemeConfig {
            max_halvings: 0,
            ..SchemeConfig::with_formulation(state.formulation)
        };
        let solver = step_with_source(&state, &params, &cfg, dt, None)?.state;
        let oracle = dense_step_oracle(&state, &params, dt)?;
        let diff = (0..state.grid.n_cells())
            .map(|i| (solver.rho[i] - oracle.rho[i]).abs().max((solver.mom[i] - oracle.mom[i]).abs()))
            .fold(0.0, f64::max);
        checks.push(Check::new(
            format!("dense oracle {label}"),
            diff <= tolerances::ORACLE_AGREEMENT,
            format!("max difference {diff:.3e}"),
        ));
    }
    let worst = cyclic_vs_dense(100, 99)?;
    checks.push(Check::new(
        "cyclic tridiagonal vs dense LU, 100 systems",
        worst <= tolerances::ORACLE_AGREEMENT,
        format!("max difference {worst:.3e}"),
    ));
    Ok(checks)
}

/// Largest solution difference between the cyclic solver and a dense LU
/// solve over `count` random strictly dominant systems.
pub fn cyclic_vs_dense(count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..count {
        let n = rng.gen_range(3..48);
        let sub: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let sup: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let diag: Vec<f64> = (0..n)
            .map(|i| sub[i].abs() + sup[i].abs() + rng.gen_range(0.1..3.0))
            .collect();
        let rhs: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let mut a = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            a[(i, (i + n - 1) % n)] += sub[i];
            a[(i, i)] += diag[i];
            a[(i, (i + 1) % n)] += sup[i];
        }
        let dense = a
            .lu()
            .solve(&DVector::from_vec(rhs.clone()))
            .ok_or_else(|| SimError::Numerical("dense reference is singular".into()))?;
        let x = CyclicTridiagonal::new(sub, diag, sup)?.solve(&rhs)?;
        for i in 0..n {
            worst = worst.max((x[i] - dense[i]).abs());
        }
    }
    Ok(worst)
}

/// Largest per-step increase of `max W` (and decrease of `min W`) over
/// `steps` random transport steps at CFL numbers up to 1.
pub fn random_transport_slack(steps: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = f64::NEG_INFINITY;
    let mut k = 0;
    while k < steps {
        let n = rng.gen_range(4..128);
        let grid = Grid::new(n)?;
        let mut w = Field::new((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect());
        for _ in 0..100.min(steps - k) {
            let u = Field::new((0..n).map(|_| rng.gen_range(-2.0..2.0)).collect());
            let dt = rng.gen_range(0.0..1.0) * grid.dx() / u.max_abs().max(1e-12);
            let next = step_W_transport(&w, &u, &grid, dt)?;
            worst = worst.max(next.max() - w.max()).max(w.min() - next.min());
            w = next;
            k += 1;
        }
    }
    Ok(worst)
}

fn single_run_checks(name: &str, cfg: &RunConfig, gamma: f64) -> Result<Vec<Check>> {
    let params = ModelParams::new(gamma)?;
    let grid = Grid::new(cfg.n_cells)?;
    let init = cfg.init.recipe()?.state(&grid, &params, cfg.scheme.formulation)?;
    let tr = run_simulation(&init, &params, &cfg.scheme, cfg.t_end)?;
    let rs = tr.records();
    let mut checks = vec![
        Check::from_verdict(name, &mass_conservation_check(&rs)),
        Check::from_verdict(name, &basic_energy_check(&rs, tr.init.e1)),
        Check::from_verdict(
            name,
            &lower_bound_check(&rs, tolerances::LOWER_BOUND_REL * tr.init.rho0_min),
        ),
    ];
    if cfg.scheme.formulation == Formulation::WForm {
        let w_max: Vec<f64> = rs.iter().map(|r| r.W_max).collect();
        checks.push(Check::from_verdict(name, &ke_w_monotone_check(&rs)));
        checks.push(Check::from_verdict(name, &W_max_principle_check(&w_max, WSource::Reconstructed)));
        checks.push(Check::from_verdict(name, &rhoW2_conservation_check(&rs, tolerances::RHO_W2_DRIFT)));
    }
    let psi = psi_test_function(&tr)?;
    checks.push(Check::new(
        format!("{name}: Psi periodicity"),
        psi.periodic(),
        format!("gap {:.3e}", psi.periodicity_gap),
    ));
    checks.push(Check::new(
        format!("{name}: d_x Psi = rho - <rho>"),
        psi.slope_ok(),
        format!("error {:.3e} = {:.3} dx", psi.slope_error, psi.slope_error / psi.dx),
    ));
    Ok(checks)
}

fn sweep_checks(name: &str, cfg: &RunConfig) -> Result<Vec<Check>> {
    let report = run_sweep(&cfg.sweep_config()?)?;
    let mut checks = vec![Check::new(
        format!("{name}: every gamma completed"),
        report.all_ok(),
        format!("{} rows", report.rows.len()),
    )];
    let ms: Vec<_> = report.rows.iter().filter_map(|r| r.metrics()).collect();
    if ms.len() == report.rows.len() && !ms.is_empty() {
        let sw: Vec<f64> = ms.iter().map(|m| m.switching_residual_max).collect();
        checks.push(Check::new(
            format!("{name}: switching residual decreasing in gamma"),
            sw.windows(2).all(|p| p[1] < p[0]),
            list(&sw),
        ));
        let wl: Vec<f64> = report.cauchy.iter().map(|c| c.w_linf).collect();
        checks.push(Check::new(
            format!("{name}: Cauchy differences of w non-increasing"),
            wl.windows(2).all(|p| p[1] <= p[0]),
            list(&wl),
        ));
        let first = ms[0].I_plain_abs;
        let worst = ms.iter().map(|m| m.I_plain_abs).fold(0.0, f64::max);
        checks.push(Check::new(
            format!("{name}: |I_plain| bounded across gamma"),
            worst <= tolerances::I_PLAIN_FACTOR * first,
            format!("max {worst:.3e} vs first {first:.3e}"),
        ));
    }
    Ok(checks)
}

fn list(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn invariants_suite() -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let slack = random_transport_slack(10_000, 5)?;
    checks.push(Check::new(
        "W transport max principle, 1e4 random steps",
        slack <= tolerances::W_TRANSPORT_SLACK,
        format!("worst per-step slack {slack:.3e}"),
    ));
    for (name, text) in SHIPPED {
        let cfg = parse_config(text, Path::new("."))?;
        let more = match &cfg.model {
            ModelChoice::Single(g) => single_run_checks(name, &cfg, *g)?,
            ModelChoice::Sweep(_) => sweep_checks(name, &cfg)?,
        };
        checks.extend(more);
    }
    Ok(checks)
}
