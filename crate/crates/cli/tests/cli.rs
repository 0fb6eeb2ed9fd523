use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn graphbo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_graphbo")).args(args).output().expect("spawn graphbo")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn edge_count(graph_json: &str) -> usize {
    let v: serde_json::Value = serde_json::from_str(graph_json).unwrap();
    v["edges"].as_array().unwrap().len()
}

const K2: &str = r#"{"directed":false,"n":2,"edges":[[0,1]],"features":[[1],[1]],"num_labels":1}"#;

#[test]
fn verify_bijection_exit_codes() {
    for args in [vec!["--n", "2", "--directed"], vec!["--n", "3", "--directed"], vec!["--n", "4"], vec!["--min-n", "1", "--max-n", "3", "--directed"]] {
        let mut full = vec!["verify-bijection"];
        full.extend(args.iter().copied());
        let o = graphbo(&full);
        assert_eq!(o.status.code(), Some(0), "{full:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("bijection verified"));
    }
    let o = graphbo(&["verify-bijection", "--min-n", "1", "--max-n", "3", "--directed"]);
    assert!(stdout(&o).contains("feasible_assignments=20"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(graphbo(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(graphbo(&["enumerate"]).status.code(), Some(1));
    assert_eq!(graphbo(&["enumerate", "--n", "3", "--min-n", "2", "--max-n", "3"]).status.code(), Some(1));
    assert_eq!(graphbo(&["--help"]).status.code(), Some(0));
    assert_eq!(graphbo(&["--version"]).status.code(), Some(0));
}

#[test]
fn unknown_config_keys_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", "[solver]\ntimelimit = 3\n");
    let o = graphbo(&["--config", &cfg, "enumerate", "--n", "2", "--count"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_two() {
    let o = graphbo(&["kernel", "--a", "/nonexistent/a.json", "--b", "/nonexistent/b.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn enumerate_counts() {
    let o = graphbo(&["enumerate", "--n", "4", "--count"]);
    assert_eq!(stdout(&o).trim(), "38");
    let o = graphbo(&["enumerate", "--n", "3", "--labels", "2", "--count"]);
    assert_eq!(stdout(&o).trim(), (4 * 8).to_string());
}

#[test]
fn kernel_values() {
    let dir = tempfile::tempdir().unwrap();
    let k2 = write(dir.path(), "k2.json", K2);
    let o = graphbo(&["kernel", "--variant", "ssp", "--a", &k2, "--b", &k2]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 0.5).abs() <= 1e-12);
    let o = graphbo(&["kernel", "--variant", "ssp", "--alpha", "2", "--beta", "0", "--a", &k2, "--b", &k2]);
    let v: f64 = stdout(&o).trim().parse().unwrap();
    assert!((v - 1.0).abs() <= 1e-12);
}

#[test]
fn sampling_is_seeded() {
    let a = stdout(&graphbo(&["--seed", "5", "sample", "--n", "5", "--count", "3"]));
    let b = stdout(&graphbo(&["--seed", "5", "sample", "--n", "5", "--count", "3"]));
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 3);
}

#[test]
fn fit_predict_solve_encode() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let graphs = stdout(&graphbo(&["enumerate", "--n", "3"]));
    let entries: Vec<String> =
        graphs.lines().map(|g| format!(r#"{{"graph":{g},"y":{}}}"#, edge_count(g) as f64 * 0.5)).collect();
    let data = write(d, "data.json", &format!("[{}]", entries.join(",")));
    let model = d.join("model.json").to_string_lossy().into_owned();
    let o = graphbo(&["fit", "--data", &data, "--variant", "esp", "--restarts", "2", "--out", &model]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let g = write(d, "graphs.jsonl", &graphs);
    let o = graphbo(&["predict", "--model", &model, "--graphs", &g]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    for (line, g) in text.lines().skip(1).zip(graphs.lines()) {
        let mu: f64 = line.split('\t').nth(1).unwrap().parse().unwrap();
        assert!((mu - edge_count(g) as f64 * 0.5).abs() <= 1e-3, "{line}");
    }

    let inc = d.join("best.json").to_string_lossy().into_owned();
    let o = graphbo(&["solve", "--model", &model, "--n", "3", "--time-limit", "30", "--out", &inc]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("status=optimal"));
    assert!(fs::read_to_string(&inc).unwrap().contains("\"n\":3"));

    for fmt in ["mps", "lp"] {
        let out = d.join(format!("m.{fmt}"));
        let o = graphbo(&["encode", "--model", &model, "--n", "3", "--format", fmt, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(fs::metadata(&out).unwrap().len() > 0);
    }
    let o = graphbo(&["encode", "--model", &model, "--n", "3", "--format", "xml", "--out", "x"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn optimization_runs_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let cfg = write(
        d,
        "run.toml",
        r#"
seed = 1
[domain]
size = { fixed = 4 }
directed = false
num_labels = 1
num_features = 1
[bo]
iterations = 2
initial_samples = 3
[solver]
time_limit = 30.0
[oracle]
name = "path_profile"
params = { target = [3.0, 4.0, 0.0] }
"#,
    );
    let hist = d.join("bo.csv").to_string_lossy().into_owned();
    let props = d.join("p.jsonl").to_string_lossy().into_owned();
    let o = graphbo(&["--config", &cfg, "bo", "--history", &hist, "--proposals", &props]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(&hist).unwrap();
    assert!(csv.starts_with("iter,proposal_id,y,best_y,mu,sigma,solver_status,bound,solve_seconds,alpha,beta,sigma_k_sq"));
    assert_eq!(csv.lines().count(), 1 + 3 + 2);
    assert_eq!(fs::read_to_string(&props).unwrap().lines().count(), 5);

    let base = d.join("base.csv").to_string_lossy().into_owned();
    let o = graphbo(&["--config", &cfg, "baseline", "--history", &base, "--iterations", "4"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read_to_string(&base).unwrap().lines().count(), 1 + 3 + 4);

    let o = graphbo(&["--config", &cfg, "bo", "--history", &hist, "--oracle", "nope"]);
    assert_eq!(o.status.code(), Some(2));
}
