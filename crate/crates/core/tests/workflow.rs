use graphbo_core::io::{read_dataset, write_dataset};
use graphbo_core::mip::{export_model, parse_lp, ExportFormat};
use graphbo_core::{
    encode_acquisition, enumerate_domain, fit, lcb, run, sample_feasible, solve, synthetic_oracle, BoConfig, BoHistory,
    Budget, CountBound, DomainSpec, FitOptions, KernelVariant, SolveOptions, SolveStatus, Strategy,
};

#[test]
fn fit_solve_and_export_on_a_constrained_domain() {
    let domain = DomainSpec::fixed(4, false, 2, 3)
        .with_degree_caps(vec![3, 2])
        .with_label_counts(vec![CountBound { min: 1, max: 3 }, CountBound { min: 1, max: 3 }]);
    let all: Vec<_> = enumerate_domain(&domain).unwrap().collect();
    assert!(all.iter().all(|g| domain.admits(g)));
    let train: Vec<_> = (0..8).map(|s| sample_feasible(&domain, s).unwrap()).collect();
    let y: Vec<f64> = train.iter().map(|g| g.edges().len() as f64 / 6.0 - 0.5).collect();

    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.json");
    write_dataset(&data, &train, &y).unwrap();
    let (train, y) = read_dataset(&data).unwrap();

    let gp = fit(&train, &y, KernelVariant::Essp, &FitOptions { restarts: 3, ..FitOptions::default() }).unwrap();
    assert!(gp.hyper().in_box());
    let brute = all.iter().map(|g| lcb(&gp, g, 1.5).unwrap()).fold(f64::INFINITY, f64::min);
    for strategy in [Strategy::BranchAndPropagate, Strategy::Enumerate] {
        let opts = SolveOptions { strategy, budget: Budget::unlimited(), ..SolveOptions::default() };
        let r = solve(&gp, &domain, 1.5, &opts).unwrap();
        assert_eq!(r.status, SolveStatus::Optimal);
        assert!((r.objective - brute).abs() <= 1e-9, "{strategy:?}: {} vs {brute}", r.objective);
        assert!(domain.admits(r.incumbent.as_ref().unwrap()));
    }

    let model = encode_acquisition(&gp, &domain, 1.5).unwrap();
    let path = dir.path().join("acq.lp");
    export_model(&model, ExportFormat::Lp, 16, &path).unwrap();
    let parsed = parse_lp(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(parsed.quadratic.len(), 1);
}

#[test]
fn optimization_runs_are_reproducible_and_logged() {
    let oracle = synthetic_oracle("feature_count", &serde_json::json!({"coefficients": [1.0, -1.0, 0.5]})).unwrap();
    let domain = DomainSpec::fixed(3, false, 2, 3);
    let config = BoConfig { initial_samples: 3, iterations: 3, solver_seconds: 30.0, seed: 11, ..BoConfig::default() };
    let a = run(&oracle, &domain, &config).unwrap();
    let b = run(&oracle, &domain, &config).unwrap();
    assert_eq!(a.graphs, b.graphs);
    assert_eq!(a.len(), 6);
    assert!(a.records[..3].iter().all(|r| r.iter == 0 && r.mu.is_none()));
    assert!(a.records[3..].iter().all(|r| r.solver_status == Some(SolveStatus::Optimal)));

    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("history.csv");
    a.save_csv(&csv).unwrap();
    let back = BoHistory::read_csv(&csv).unwrap();
    assert_eq!(back.len(), 6);
    for (x, y) in back.iter().zip(&a.records) {
        assert_eq!(x.iter, y.iter);
        assert_eq!(x.best_y, y.best_y);
    }
}

#[test]
fn invalid_configuration_returns_empty_partial_history() {
    let oracle = synthetic_oracle("path_profile", &serde_json::json!({"target": [3.0, 4.0, 2.0]})).unwrap();
    let config = BoConfig { initial_samples: 1, ..BoConfig::default() };
    let err = run(&oracle, &DomainSpec::fixed(3, false, 1, 1), &config).unwrap_err();
    assert!(err.partial.is_empty());
}
