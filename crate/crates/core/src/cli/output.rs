//! File formats: snapshot CSV, diagnostics (JSON lines or CSV), run summary,
//! sweep tables. Data files carry no timestamps or wall-clock times.

use super::config::OutputFormat;
use crate::diagnostics::{DiagnosticsRecord, InitialDataSummary, Verdict, WeightedDissipation};
use crate::error::{Result, SimError};
use crate::model::{derive_fields, ModelParams, State};
use crate::sweep::{CongestionFit, RowOutcome, SweepReport};
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

fn io_err(path: &Path, e: impl std::fmt::Display) -> SimError {
    SimError::Config(format!("cannot write {}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

/// 17 significant digits.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub const SNAPSHOT_HEADER: &str = "x,rho,u,w,pi,W,V";

pub fn write_snapshot(path: &Path, state: &State, params: &ModelParams) -> Result<()> {
    let d = derive_fields(state, params)?;
    let mut out = create(path)?;
    let mut text = String::with_capacity(state.grid.n_cells() * 170);
    text.push_str(SNAPSHOT_HEADER);
    text.push('\n');
    for i in 0..state.grid.n_cells() {
        let row = [
            state.grid.center(i),
            state.rho[i],
            d.u[i],
            d.w[i],
            d.pi[i],
            d.W[i],
            d.V[i],
        ];
        text.push_str(&row.map(num).join(","));
        text.push('\n');
    }
    out.write_all(text.as_bytes()).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join("snapshots").join(format!("snapshot_{index:05}.csv"))
}

/// Appends one diagnostics record per snapshot.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
    format: OutputFormat,
}

impl DiagnosticsWriter {
    pub fn create(dir: &Path, format: OutputFormat) -> Result<Self> {
        let path = dir.join(match format {
            OutputFormat::Jsonl => "diagnostics.jsonl",
            OutputFormat::Csv => "diagnostics.csv",
        });
        let mut out = create(&path)?;
        if format == OutputFormat::Csv {
            writeln!(out, "{}", DiagnosticsRecord::FIELD_NAMES.join(",")).map_err(|e| io_err(&path, e))?;
        }
        Ok(DiagnosticsWriter { path, out, format })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        let line = match self.format {
            OutputFormat::Jsonl => serde_json::to_string(record).map_err(|e| io_err(&self.path, e))?,
            OutputFormat::Csv => record.values().map(num).join(","),
        };
        writeln!(self.out, "{line}").map_err(|e| io_err(&self.path, e))
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| io_err(&self.path, e))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub gamma: f64,
    pub formulation: String,
    pub n_cells: usize,
    pub t_end: f64,
    pub steps: usize,
    pub snapshots: usize,
    pub initial: InitialDataSummary,
    pub final_record: DiagnosticsRecord,
    pub mass_drift_rel: f64,
    pub weighted_dissipation: WeightedDissipation,
    pub verdicts: Vec<Verdict>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| io_err(path, e))?;
    writeln!(out).map_err(|e| io_err(path, e))?;
    out.flush().map_err(|e| io_err(path, e))
}

pub const SWEEP_HEADER: &str =
    "gamma,status,max_rho_over_run,min_rho_over_run,switching_residual_max,pi_l1_max,dpi_l2_max,I_plain_abs,W_max_drift";

/// `sweep.csv`, `sweep_cauchy.csv` and `sweep.json` in `dir`.
pub fn write_sweep(dir: &Path, report: &SweepReport) -> Result<()> {
    let path = dir.join("sweep.csv");
    let mut text = String::from(SWEEP_HEADER);
    text.push('\n');
    for row in &report.rows {
        match &row.outcome {
            RowOutcome::Ok(m) => {
                let vals = [
                    m.max_rho_over_run,
                    m.min_rho_over_run,
                    m.switching_residual_max,
                    m.pi_l1_max,
                    m.dpi_l2_max,
                    m.I_plain_abs,
                    m.W_max_drift,
                ];
                text.push_str(&format!("{},ok,{}\n", num(row.gamma), vals.map(num).join(",")));
            }
            RowOutcome::Failed { .. } => text.push_str(&format!("{},failed,,,,,,,\n", num(row.gamma))),
        }
    }
    let mut out = create(&path)?;
    out.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))?;
    out.flush().map_err(|e| io_err(&path, e))?;

    let path = dir.join("sweep_cauchy.csv");
    let mut text = String::from("gamma_a,gamma_b,rho_l1,w_linf\n");
    for c in &report.cauchy {
        text.push_str(&[c.gamma_a, c.gamma_b, c.rho_l1, c.w_linf].map(num).join(","));
        text.push('\n');
    }
    let mut out = create(&path)?;
    out.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))?;
    out.flush().map_err(|e| io_err(&path, e))?;

    write_json(&dir.join("sweep.json"), report)
}

pub fn describe_fit(fit: &CongestionFit) -> String {
    match fit {
        CongestionFit::Degenerate => "congestion never exceeded".into(),
        CongestionFit::InsufficientData { usable_rows } => {
            format!("insufficient data ({usable_rows} rows with max rho > 1)")
        }
        CongestionFit::Fit { slope, r2, .. } => format!("slope {slope:.6e}, r2 {r2:.4}"),
    }
}

/// Wall-clock information kept apart from the data files.
pub fn write_log(path: &Path, lines: &[String]) -> Result<()> {
    let mut out = create(path)?;
    for l in lines {
        writeln!(out, "{l}").map_err(|e| io_err(path, e))?;
    }
    out.flush().map_err(|e| io_err(path, e))
}
