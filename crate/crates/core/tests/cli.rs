use congestion_sim::cli::{run_args, EXIT_CONFIG, EXIT_OK};
use std::fs;
use std::path::Path;

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    let text = format!("{body}\noutput.dir = {}\n", dir.join("out").display());
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

const SMALL: &str = "scheme.formulation = w_form
scheme.cfl = 0.1
grid.n_cells = 32
model.gamma = 10
init.kind = cosine
time.t_end = 0.1
diagnostics.every = 0.05";

fn cli(args: &[&str]) -> i32 {
    let mut all = vec!["congestion-sim"];
    all.extend_from_slice(args);
    run_args(all)
}

#[test]
fn simulate_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", SMALL);
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    let out = dir.path().join("out");
    let summary = fs::read(out.join("summary.json")).unwrap();
    let diag = fs::read(out.join("diagnostics.jsonl")).unwrap();
    assert_eq!(String::from_utf8_lossy(&diag).lines().count(), 3);
    let snap = fs::read_to_string(out.join("snapshots/snapshot_00002.csv")).unwrap();
    assert_eq!(snap.lines().next(), Some("x,rho,u,w,pi,W,V"));
    assert_eq!(snap.lines().count(), 33);
    assert!(!out.join("snapshots/snapshot_00003.csv").exists());

    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    assert_eq!(fs::read(out.join("summary.json")).unwrap(), summary);
    assert_eq!(fs::read(out.join("diagnostics.jsonl")).unwrap(), diag);

    let json: serde_json::Value = serde_json::from_slice(&summary).unwrap();
    assert_eq!(json["n_cells"], 32);
    let verdicts = json["verdicts"].as_array().unwrap();
    assert_eq!(verdicts.len(), 6);
    assert_eq!(verdicts[0]["name"], "mass conservation");
    assert_eq!(verdicts[0]["holds"], true);
}

#[test]
fn csv_diagnostics_have_a_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", &format!("{SMALL}\noutput.format = csv"));
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    let text = fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("t,mass,ke_u,ke_w"));
    assert_eq!(header.split(',').count(), 17);
}

#[test]
fn custom_profile_round_trips_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let n = 16;
    let mut csv = String::from("x,rho,w\n");
    let mut rho = Vec::new();
    let mut w = Vec::new();
    for i in 0..n {
        let x = (i as f64 + 0.5) / n as f64;
        let r = 0.7 + 0.123456789 * (x * 7.0).sin().powi(2);
        let v = 0.1 * (x * 3.0).cos() / 3.0;
        csv.push_str(&format!("{x:.16e},{r:.16e},{v:.16e}\n"));
        rho.push(r);
        w.push(v);
    }
    fs::write(dir.path().join("profile.csv"), csv).unwrap();
    let body = format!(
        "grid.n_cells = {n}\nmodel.gamma = 5\ninit.kind = custom_csv\ninit.csv_path = profile.csv\ntime.t_end = 0\ndiagnostics.every = 0.05"
    );
    let cfg = write_config(dir.path(), "custom.conf", &body);
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    let snap = fs::read_to_string(dir.path().join("out/snapshots/snapshot_00000.csv")).unwrap();
    for (i, line) in snap.lines().skip(1).enumerate() {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cols[1].to_bits(), rho[i].to_bits(), "rho in cell {i}");
        assert!((cols[3] - w[i]).abs() <= 1e-16, "w in cell {i}");
    }
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "typo.conf", &format!("{SMALL}\nmodel.gama = 3"));
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_CONFIG);

    let body = "grid.n_cells = 32\nsweep.gammas = 5, 80\ninit.rho_mean = 1.05\ninit.rho_amp = 0\ninit.w_amp = 0";
    let cfg = write_config(dir.path(), "dense.conf", body);
    assert_eq!(cli(&["sweep", "--config", &cfg]), EXIT_CONFIG);
    assert!(!dir.path().join("out/sweep.csv").exists());

    let missing = dir.path().join("absent.conf").display().to_string();
    assert_eq!(cli(&["simulate", "--config", &missing]), EXIT_CONFIG);
    assert_eq!(cli(&["mms", "--case", "nope"]), EXIT_CONFIG);
    assert_eq!(cli(&["frobnicate"]), EXIT_CONFIG);
}

#[test]
fn sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let body = "grid.n_cells = 32\nsweep.gammas = 5, 10, 20\nsweep.parallel_runs = 2\ntime.t_end = 0.1\nscheme.cfl = 0.1";
    let cfg = write_config(dir.path(), "sweep.conf", body);
    assert_eq!(cli(&["sweep", "--config", &cfg]), EXIT_OK);
    let out = dir.path().join("out");
    let table = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().skip(1).all(|l| l.contains(",ok,")));
    assert_eq!(fs::read_to_string(out.join("sweep_cauchy.csv")).unwrap().lines().count(), 3);
    assert!(out.join("sweep.json").exists());
    assert!(fs::read_to_string(out.join("sweep_runtime.log")).unwrap().contains("runtime_seconds"));
}

#[test]
fn verify_and_mms_commands() {
    assert_eq!(cli(&["verify", "--suite", "oracle"]), EXIT_OK);
    assert_eq!(cli(&["mms", "--case", "constant", "--formulation", "u_form", "--resolutions", "8,16,32"]), EXIT_OK);
    // Two resolutions cannot give an order.
    assert_eq!(cli(&["mms", "--case", "constant", "--resolutions", "8,16"]), EXIT_CONFIG);
}

#[test]
fn snapshot_feeds_back_as_custom_profile() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "run.conf", SMALL);
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    let first = fs::read_to_string(dir.path().join("out/snapshots/snapshot_00002.csv")).unwrap();
    fs::write(dir.path().join("profile.csv"), &first).unwrap();

    let body = "scheme.formulation = w_form\ngrid.n_cells = 32\nmodel.gamma = 10\ninit.kind = custom_csv\ninit.csv_path = profile.csv\ntime.t_end = 0";
    let back = dir.path().join("back");
    fs::create_dir(&back).unwrap();
    let cfg = write_config(&back, "back.conf", &body.replace("profile.csv", "../profile.csv"));
    assert_eq!(cli(&["simulate", "--config", &cfg]), EXIT_OK);
    let second = fs::read_to_string(back.join("out/snapshots/snapshot_00000.csv")).unwrap();
    let column = |text: &str, k: usize| -> Vec<String> {
        text.lines().skip(1).map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
    };
    assert_eq!(column(&first, 0), column(&second, 0));
    assert_eq!(column(&first, 1), column(&second, 1));
    assert_eq!(column(&first, 3), column(&second, 3));
}
