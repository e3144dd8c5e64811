use vpx_core::harness::{run_all, write_outputs, ExperimentId, HarnessConfig, PValue};
use vpx_core::operators::TargetFn;

fn small(spec: &str) -> HarnessConfig {
    let mut cfg = HarnessConfig::new(spec, vec![2, 4, 8]);
    cfg.p_list = vec![PValue(2.0), PValue(f64::INFINITY)];
    cfg.thresholds.random_polys = 3;
    cfg.thresholds.infinite_finite_polys = 5;
    cfg.grid.uniform_points = 1024;
    cfg
}

#[test]
fn small_erdos_run_passes_and_is_reproducible() {
    let cfg = small("preset:erdos");
    let a = run_all(&cfg).unwrap();
    let b = run_all(&cfg).unwrap();
    assert!(a.pass, "{:#?}", a.experiments.iter().filter(|r| !r.pass).collect::<Vec<_>>());
    assert_eq!(a.experiments.len(), ExperimentId::ALL.len());
    for (x, y) in a.experiments.iter().zip(&b.experiments) {
        assert_eq!(x.to_csv(), y.to_csv());
        assert!(x.series.iter().all(|s| s.c_emp.is_finite()));
        assert!(x.provenance.table_nodes > 0 && x.provenance.table_radius > 0.0);
    }
}

#[test]
fn failing_experiment_is_recorded_and_run_continues() {
    let mut cfg = small("preset:hermite");
    cfg.experiments = vec![ExperimentId::Favard, ExperimentId::KernelBound];
    // sign(x) has no derivative, so the Favard experiment cannot run
    cfg.favard_targets = vec![TargetFn::Sign];
    let summary = run_all(&cfg).unwrap();
    assert!(!summary.pass);
    assert!(summary.experiments[0].error.is_some());
    assert!(summary.experiments[1].pass);

    let dir = tempfile::tempdir().unwrap();
    let files = write_outputs(&summary, dir.path(), false).unwrap();
    assert_eq!(files.len(), 3);
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let json: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(json["experiments"][0]["pass"], false);
    assert_eq!(json["experiments"][1]["gates"][0]["threshold"], 0.05);
}

#[test]
fn spec_path_resolves_relative_to_config() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("w.toml"), "family = \"freud\"\nalpha = 4.0\nscale = 1.0\n").unwrap();
    let cfg_path = dir.path().join("run.toml");
    std::fs::write(&cfg_path, "spec = \"w.toml\"\nn_list = [2, 4]\nexperiments = [\"kernel_bound\"]\n").unwrap();
    let cfg = HarnessConfig::load(&cfg_path).unwrap();
    let summary = run_all(&cfg).unwrap();
    assert!(summary.pass);
    assert!(summary.spec.contains("alpha=4"));
}
