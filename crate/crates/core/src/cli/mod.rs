//! Command-line front end: `simulate`, `sweep`, `verify`, `mms`.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration or precondition
//! error, 3 runtime failure of a run.

pub mod config;
pub mod output;
pub mod shipped;

use crate::diagnostics::{
    basic_energy_check, ke_w_monotone_check, lower_bound_check, mass_conservation_check, rhoW2_conservation_check,
    weighted_dissipation_report, InitialDataSummary, Verdict, W_max_principle_check, WSource,
};
use crate::error::{Result, SimError};
use crate::grid::Grid;
use crate::model::{Formulation, ModelParams, State};
use crate::solver::{run_simulation_with, Snapshot};
use crate::sweep::{run_sweep, validate_recipe, RowOutcome};
use crate::tolerances;
use crate::verify::suite::{run_suite, Suite};
use crate::verify::{mms_study, ManufacturedCase};
use clap::{Parser, Subcommand, ValueEnum};
use config::{load_config, RunConfig};
use output::{describe_fit, snapshot_path, write_json, write_log, write_snapshot, write_sweep, DiagnosticsWriter, RunSummary};
use std::path::{Path, PathBuf};
use std::time::Instant;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "congestion-sim", version, about = "1D periodic congestion model simulator", after_help = config::keys_help())]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one simulation and write snapshots, diagnostics and a summary.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the same initial data for several gamma values.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run verification suites and print PASS/FAIL per check.
    Verify {
        #[arg(long, value_enum)]
        suite: Option<SuiteArg>,
    },
    /// Convergence table for one manufactured solution.
    Mms {
        #[arg(long)]
        case: String,
        #[arg(long, value_enum)]
        formulation: Option<FormArg>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![64usize, 128, 256])]
        resolutions: Vec<usize>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SuiteArg {
    Mms,
    Oracle,
    Invariants,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Mms => Suite::Mms,
            SuiteArg::Oracle => Suite::Oracle,
            SuiteArg::Invariants => Suite::Invariants,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormArg {
    #[value(name = "u_form")]
    UForm,
    #[value(name = "w_form")]
    WForm,
}

/// Builds and checks the initial state of a single-gamma run.
pub fn make_initial_data(config: &RunConfig, grid: &Grid, params: &ModelParams) -> Result<(State, InitialDataSummary)> {
    let recipe = config.init.recipe()?;
    let checked = validate_recipe(&recipe, &[params.gamma()], grid)?;
    let state = checked.recipe.state(grid, params, config.scheme.formulation)?;
    let summary = crate::diagnostics::summarize_initial(&state, params)?;
    Ok((state, summary))
}

/// Checks reported in `summary.json` for a finished run.
pub fn run_verdicts(records: &[crate::diagnostics::DiagnosticsRecord], init: &InitialDataSummary, formulation: Formulation) -> Vec<Verdict> {
    let mut v = vec![
        mass_conservation_check(records),
        basic_energy_check(records, init.e1),
        lower_bound_check(records, tolerances::LOWER_BOUND_REL * init.rho0_min),
    ];
    if formulation == Formulation::WForm {
        let w_max: Vec<f64> = records.iter().map(|r| r.W_max).collect();
        v.push(ke_w_monotone_check(records));
        v.push(W_max_principle_check(&w_max, WSource::Reconstructed));
        v.push(rhoW2_conservation_check(records, tolerances::RHO_W2_DRIFT));
    }
    v
}

fn simulate(path: &Path) -> Result<i32> {
    let cfg = load_config(path)?;
    let params = ModelParams::new(cfg.gamma()?)?;
    let grid = Grid::new(cfg.n_cells)?;
    let (init, _) = make_initial_data(&cfg, &grid, &params)?;
    let dir = cfg.output_dir.clone();
    let mut diag = DiagnosticsWriter::create(&dir, cfg.format)?;
    let mut count = 0usize;
    let started = Instant::now();
    let tr = run_simulation_with(&init, &params, &cfg.scheme, cfg.t_end, &mut |s: &Snapshot| {
        write_snapshot(&snapshot_path(&dir, count), &s.state, &params)?;
        diag.write(&s.record)?;
        count += 1;
        Ok(())
    })?;
    let elapsed = started.elapsed().as_secs_f64();
    diag.finish()?;

    let records = tr.records();
    let verdicts = run_verdicts(&records, &tr.init, cfg.scheme.formulation);
    let last = records.last().expect("a run has at least one record").clone();
    let summary = RunSummary {
        gamma: params.gamma(),
        formulation: cfg.scheme.formulation.to_string(),
        n_cells: cfg.n_cells,
        t_end: cfg.t_end,
        steps: tr.steps,
        snapshots: records.len(),
        initial: tr.init.clone(),
        mass_drift_rel: (last.mass - records[0].mass).abs() / records[0].mass,
        final_record: last,
        weighted_dissipation: weighted_dissipation_report(&tr),
        verdicts: verdicts.clone(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    write_log(
        &dir.join("run.log"),
        &[format!("steps {}", tr.steps), format!("runtime_seconds {elapsed:.3}")],
    )?;
    for v in &verdicts {
        println!("{v}");
    }
    println!("wrote {} snapshots to {}", records.len(), dir.display());
    // Verdicts are informational here; `verify` is the gate.
    Ok(EXIT_OK)
}

fn sweep(path: &Path) -> Result<i32> {
    let cfg = load_config(path)?;
    let sc = cfg.sweep_config()?;
    let started = Instant::now();
    let report = run_sweep(&sc)?;
    let elapsed = started.elapsed().as_secs_f64();
    write_sweep(&cfg.output_dir, &report)?;
    let mut log = vec![format!("total_runtime_seconds {elapsed:.3}")];
    for row in &report.rows {
        log.push(format!("gamma {} runtime_seconds {:.3}", row.gamma, row.runtime));
        match &row.outcome {
            RowOutcome::Ok(m) => println!(
                "gamma {:>8}: max rho {:.6}, switching residual {:.3e}",
                row.gamma, m.max_rho_over_run, m.switching_residual_max
            ),
            RowOutcome::Failed { error } => eprintln!("gamma {:>8}: FAILED {error}", row.gamma),
        }
    }
    write_log(&cfg.output_dir.join("sweep_runtime.log"), &log)?;
    println!("congestion rate: {}", describe_fit(&report.congestion_rate));
    println!("wrote sweep tables to {}", cfg.output_dir.display());
    Ok(if report.all_ok() { EXIT_OK } else { EXIT_RUNTIME })
}

fn verify(suite: Option<SuiteArg>) -> Result<i32> {
    let suites: Vec<Suite> = match suite {
        Some(s) => vec![s.into()],
        None => Suite::ALL.to_vec(),
    };
    let mut ok = true;
    for s in suites {
        println!("== {}", s.name());
        for c in run_suite(s)? {
            ok &= c.holds;
            println!("{c}");
        }
    }
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn mms(case: &str, form: Option<FormArg>, resolutions: &[usize]) -> Result<i32> {
    let case = ManufacturedCase::by_name(case)?;
    let forms = match form {
        Some(FormArg::UForm) => vec![Formulation::UForm],
        Some(FormArg::WForm) => vec![Formulation::WForm],
        None => vec![Formulation::UForm, Formulation::WForm],
    };
    let mut ok = true;
    for f in forms {
        let study = mms_study(&case, f, resolutions)?;
        print!("{}", study.table());
        ok &= study.first_order();
    }
    Ok(if ok { EXIT_OK } else { EXIT_CHECK_FAILED })
}

pub fn exit_code(err: &SimError) -> i32 {
    if err.is_runtime() {
        EXIT_RUNTIME
    } else {
        EXIT_CONFIG
    }
}

/// Runs the parsed command and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let result = match &cli.command {
        Command::Simulate { config } => simulate(config),
        Command::Sweep { config } => sweep(config),
        Command::Verify { suite } => verify(*suite),
        Command::Mms {
            case,
            formulation,
            resolutions,
        } => mms(case, *formulation, resolutions),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            code
        }
    }
}
