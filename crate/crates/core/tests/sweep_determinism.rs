use congestion_sim::sweep::{run_sweep, InitialRecipe, SweepConfig};
use congestion_sim::SchemeConfig;

fn config(parallel_runs: usize) -> SweepConfig {
    SweepConfig {
        gammas: vec![5.0, 10.0, 20.0, 40.0, 80.0],
        recipe: InitialRecipe::Cosine {
            rho_mean: 0.8,
            rho_amp: 0.1,
            w_amp: 0.2,
            phase: 0.0,
        },
        n_cells: 64,
        t_end: 0.2,
        scheme: SchemeConfig {
            cfl: 0.1,
            ..SchemeConfig::default()
        },
        parallel_runs,
    }
}

#[test]
fn report_does_not_depend_on_thread_count() {
    let one = serde_json::to_string(&run_sweep(&config(1)).unwrap()).unwrap();
    for threads in [2, 3, 8] {
        let many = serde_json::to_string(&run_sweep(&config(threads)).unwrap()).unwrap();
        assert_eq!(one, many, "parallel_runs = {threads}");
    }
}

#[test]
fn constant_recipe_matches_closed_form() {
    let mut cfg = config(4);
    cfg.recipe = InitialRecipe::constant(0.8, 0.0);
    let report = run_sweep(&cfg).unwrap();
    for row in &report.rows {
        let g = row.gamma;
        let expect = 0.2 * g / (g + 1.0) * 0.8f64.powf(g + 1.0);
        let got = row.metrics().unwrap().switching_residual_max;
        assert!((got - expect).abs() <= 1e-12 * expect.max(1e-300) + 1e-300, "gamma {g}: {got} vs {expect}");
    }
}
