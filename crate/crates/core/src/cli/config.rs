//! Flat `section.key = value` configuration files.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Unknown keys, repeated keys and unparsable values are configuration errors.

use crate::error::{Result, SimError};
use crate::solver::SchemeConfig;
use crate::sweep::{InitialRecipe, SweepConfig};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// `(key, default, meaning)` for every accepted key.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("scheme.formulation", "w_form", "evolved velocity: u_form (rho, rho u) or w_form (rho, rho w)"),
    ("scheme.cfl", "0.45", "CFL number in (0, 1]"),
    ("scheme.dt_max", "0.01", "largest time step"),
    ("scheme.dt_init", "0.01", "cap on the first time step"),
    ("scheme.newton_tol", "1e-10", "max-norm residual allowed in the implicit solve, relative to 1 + |rhs|"),
    ("scheme.max_halvings", "20", "time-step halvings tried before a vacuum error"),
    ("grid.n_cells", "256", "number of cells on [0, 1), at least 4"),
    ("model.gamma", "-", "pressure exponent for a single run (exclusive with sweep.gammas)"),
    ("sweep.gammas", "-", "comma-separated, strictly increasing exponents for a sweep"),
    ("sweep.parallel_runs", "1", "concurrent runs in a sweep (CONGESTION_SIM_THREADS overrides)"),
    ("init.kind", "cosine", "cosine | two_mode | custom_csv"),
    ("init.rho_mean", "0.8", "mean density of the cosine families"),
    ("init.rho_amp", "0.1", "density amplitude of the cosine families"),
    ("init.w_amp", "0.2", "amplitude of w0 = w_amp sin(2 pi x)"),
    ("init.phase", "0", "phase of the density cosine"),
    ("init.csv_path", "-", "custom_csv input with columns x, rho, w (relative to the config file)"),
    ("time.t_end", "0.5", "final time"),
    ("output.dir", "out", "output directory (relative to the working directory)"),
    ("output.format", "jsonl", "diagnostics file format: jsonl | csv"),
    ("diagnostics.every", "0.05", "time between snapshots"),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitKind {
    Cosine,
    TwoMode,
    CustomCsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    Single(f64),
    Sweep(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitSpec {
    pub kind: InitKind,
    pub rho_mean: f64,
    pub rho_amp: f64,
    pub w_amp: f64,
    pub phase: f64,
    pub csv_path: Option<PathBuf>,
}

impl InitSpec {
    pub fn recipe(&self) -> Result<InitialRecipe> {
        let (rho_mean, rho_amp, w_amp, phase) = (self.rho_mean, self.rho_amp, self.w_amp, self.phase);
        match self.kind {
            InitKind::Cosine | InitKind::TwoMode => {
                if !(rho_mean > rho_amp && rho_amp >= 0.0) {
                    return Err(SimError::Config(format!(
                        "init.rho_mean > init.rho_amp >= 0 required, got {rho_mean} and {rho_amp}"
                    )));
                }
                Ok(if self.kind == InitKind::Cosine {
                    InitialRecipe::Cosine { rho_mean, rho_amp, w_amp, phase }
                } else {
                    InitialRecipe::TwoMode { rho_mean, rho_amp, w_amp, phase }
                })
            }
            InitKind::CustomCsv => {
                let path = self
                    .csv_path
                    .as_ref()
                    .ok_or_else(|| SimError::Config("init.kind = custom_csv needs init.csv_path".into()))?;
                read_profile(path)
            }
        }
    }
}

/// Reads the `x`, `rho` and `w` columns of a CSV file (other columns are ignored).
pub fn read_profile(path: &Path) -> Result<InitialRecipe> {
    let bad = |msg: String| SimError::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| bad(e.to_string()))?;
    let headers = reader.headers().map_err(|e| bad(e.to_string()))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| bad(format!("missing column '{name}'")))
    };
    let (ix, ir, iw) = (column("x")?, column("rho")?, column("w")?);
    let (mut x, mut rho, mut w) = (Vec::new(), Vec::new(), Vec::new());
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| bad(e.to_string()))?;
        let get = |i: usize| -> Result<f64> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>()
                .map_err(|_| bad(format!("row {}: '{text}' is not a number", line + 1)))
        };
        x.push(get(ix)?);
        rho.push(get(ir)?);
        w.push(get(iw)?);
    }
    if x.is_empty() {
        return Err(bad("no data rows".into()));
    }
    Ok(InitialRecipe::Samples { x, rho, w })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub scheme: SchemeConfig,
    pub n_cells: usize,
    pub model: ModelChoice,
    pub parallel_runs: usize,
    pub init: InitSpec,
    pub t_end: f64,
    pub output_dir: PathBuf,
    pub format: OutputFormat,
}

impl RunConfig {
    pub fn gamma(&self) -> Result<f64> {
        match &self.model {
            ModelChoice::Single(g) => Ok(*g),
            ModelChoice::Sweep(_) => Err(SimError::Config(
                "this command needs model.gamma, the file sets sweep.gammas".into(),
            )),
        }
    }

    pub fn sweep_config(&self) -> Result<SweepConfig> {
        let gammas = match &self.model {
            ModelChoice::Sweep(g) => g.clone(),
            ModelChoice::Single(_) => {
                return Err(SimError::Config(
                    "this command needs sweep.gammas, the file sets model.gamma".into(),
                ))
            }
        };
        Ok(SweepConfig {
            gammas,
            recipe: self.init.recipe()?,
            n_cells: self.n_cells,
            t_end: self.t_end,
            scheme: self.scheme.clone(),
            parallel_runs: self.parallel_runs,
        })
    }
}

/// Raw assignments, with the line each came from.
fn assignments(text: &str) -> Result<BTreeMap<String, (usize, String)>> {
    let mut out = BTreeMap::new();
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| SimError::Config(format!("line {line_no}: expected 'section.key = value'")))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(name, _, _)| *name == key) {
            return Err(SimError::Config(format!("line {line_no}: unknown key '{key}'")));
        }
        if value.is_empty() {
            return Err(SimError::Config(format!("line {line_no}: '{key}' has no value")));
        }
        if let Some((first, _)) = out.insert(key.to_string(), (line_no, value.to_string())) {
            return Err(SimError::Config(format!("line {line_no}: '{key}' already set on line {first}")));
        }
    }
    Ok(out)
}

struct Values {
    map: BTreeMap<String, (usize, String)>,
}

impl Values {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key) {
            None => Ok(None),
            Some((line, v)) => v
                .parse::<T>()
                .map(Some)
                .map_err(|_| SimError::Config(format!("line {line}: cannot parse '{v}' for {key}"))),
        }
    }

    fn or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }
}

/// Parses a configuration file's text. Relative `init.csv_path` values are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig> {
    let v = Values { map: assignments(text)? };
    let d = SchemeConfig::default();

    let formulation = v.or("scheme.formulation", d.formulation)?;
    let scheme = SchemeConfig {
        formulation,
        cfl: v.or("scheme.cfl", d.cfl)?,
        dt_max: v.or("scheme.dt_max", d.dt_max)?,
        dt_init: v.or("scheme.dt_init", d.dt_init)?,
        newton_tol: v.or("scheme.newton_tol", d.newton_tol)?,
        max_halvings: v.or("scheme.max_halvings", d.max_halvings)?,
        snapshot_every: v.or("diagnostics.every", d.snapshot_every)?,
    };
    scheme.validate()?;

    let model = match (v.get::<f64>("model.gamma")?, v.raw("sweep.gammas")) {
        (Some(g), None) => ModelChoice::Single(g),
        (None, Some((line, list))) => {
            let gammas = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| SimError::Config(format!("line {line}: cannot parse '{}' in sweep.gammas", s.trim())))
                })
                .collect::<Result<Vec<_>>>()?;
            ModelChoice::Sweep(gammas)
        }
        (Some(_), Some(_)) => {
            return Err(SimError::Config("set exactly one of model.gamma and sweep.gammas, not both".into()))
        }
        (None, None) => return Err(SimError::Config("set exactly one of model.gamma and sweep.gammas".into())),
    };
    if let ModelChoice::Single(g) = model {
        if !(g > 0.0 && g.is_finite()) {
            return Err(SimError::Config(format!("model.gamma = {g} must be positive")));
        }
    }

    let kind = match v.or("init.kind", "cosine".to_string())?.as_str() {
        "cosine" => InitKind::Cosine,
        "two_mode" => InitKind::TwoMode,
        "custom_csv" => InitKind::CustomCsv,
        other => {
            return Err(SimError::Config(format!(
                "init.kind = '{other}' (expected cosine, two_mode or custom_csv)"
            )))
        }
    };
    let csv_path = v.get::<String>("init.csv_path")?.map(|p| {
        let p = PathBuf::from(p);
        if p.is_relative() {
            base_dir.join(p)
        } else {
            p
        }
    });
    let init = InitSpec {
        kind,
        rho_mean: v.or("init.rho_mean", 0.8)?,
        rho_amp: v.or("init.rho_amp", 0.1)?,
        w_amp: v.or("init.w_amp", 0.2)?,
        phase: v.or("init.phase", 0.0)?,
        csv_path,
    };

    let format = match v.or("output.format", "jsonl".to_string())?.as_str() {
        "jsonl" => OutputFormat::Jsonl,
        "csv" => OutputFormat::Csv,
        other => return Err(SimError::Config(format!("output.format = '{other}' (expected jsonl or csv)"))),
    };

    let n_cells = v.or("grid.n_cells", 256usize)?;
    if n_cells < 4 {
        return Err(SimError::Config(format!("grid.n_cells = {n_cells} must be at least 4")));
    }
    let t_end: f64 = v.or("time.t_end", 0.5)?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(SimError::Config(format!("time.t_end = {t_end} is out of range")));
    }
    let parallel_runs = v.or("sweep.parallel_runs", 1usize)?;
    if parallel_runs == 0 {
        return Err(SimError::Config("sweep.parallel_runs must be at least 1".into()));
    }

    Ok(RunConfig {
        scheme,
        n_cells,
        model,
        parallel_runs,
        init,
        t_end,
        output_dir: PathBuf::from(v.or("output.dir", "out".to_string())?),
        format,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| SimError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, path.parent().unwrap_or(Path::new(".")))
}

/// Help text listing every key with its default.
pub fn keys_help() -> String {
    let mut out = String::from("Configuration keys (`section.key = value`, `#` comments):\n");
    for (key, default, meaning) in KEYS {
        out.push_str(&format!("  {key:<22} [default {default}] {meaning}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Formulation;

    fn parse(text: &str) -> Result<RunConfig> {
        parse_config(text, Path::new("/cfg"))
    }

    #[test]
    fn defaults_and_comments() {
        let c = parse("# only the model\nmodel.gamma = 10   # trailing\n\n").unwrap();
        assert_eq!(c.model, ModelChoice::Single(10.0));
        assert_eq!(c.scheme, SchemeConfig::default());
        assert_eq!(c.n_cells, 256);
        assert_eq!(c.format, OutputFormat::Jsonl);
        assert_eq!(c.init.kind, InitKind::Cosine);
    }

    #[test]
    fn full_file() {
        let c = parse(
            "scheme.formulation = u_form\nscheme.cfl = 0.2\nscheme.max_halvings = 5\ngrid.n_cells = 64\n\
             sweep.gammas = 5, 10 ,20\nsweep.parallel_runs = 3\ninit.kind = custom_csv\ninit.csv_path = data/a.csv\n\
             time.t_end = 1.5\noutput.dir = res\noutput.format = csv\ndiagnostics.every = 0.1\n",
        )
        .unwrap();
        assert_eq!(c.scheme.formulation, Formulation::UForm);
        assert_eq!(c.scheme.cfl, 0.2);
        assert_eq!(c.scheme.max_halvings, 5);
        assert_eq!(c.scheme.snapshot_every, 0.1);
        assert_eq!(c.model, ModelChoice::Sweep(vec![5.0, 10.0, 20.0]));
        assert_eq!(c.init.csv_path, Some(PathBuf::from("/cfg/data/a.csv")));
        assert_eq!(c.format, OutputFormat::Csv);
        assert_eq!(c.output_dir, PathBuf::from("res"));
        assert_eq!(c.parallel_runs, 3);
    }

    #[test]
    fn rejections() {
        for text in [
            "model.gamma = 10\nmodel.gama = 3",
            "model.gamma = 10\nsweep.gammas = 5, 10",
            "grid.n_cells = 64",
            "model.gamma = ten",
            "model.gamma = 10\nmodel.gamma = 11",
            "model.gamma = 10\nscheme.cfl = 1.5",
            "model.gamma = 10\ninit.kind = square",
            "model.gamma = 10\noutput.format = xml",
            "model.gamma = 10\ngrid.n_cells = 3",
            "model.gamma = 10\nnot an assignment",
            "model.gamma = -1",
            "sweep.gammas = 5, x",
        ] {
            assert!(matches!(parse(text), Err(SimError::Config(_))), "{text}");
        }
    }

    #[test]
    fn every_key_is_documented() {
        let help = keys_help();
        for (k, _, _) in KEYS {
            assert!(help.contains(k));
        }
    }

    #[test]
    fn init_amplitude_check() {
        let c = parse("model.gamma = 10\ninit.rho_mean = 0.1\ninit.rho_amp = 0.2").unwrap();
        assert!(c.init.recipe().is_err());
    }
}
