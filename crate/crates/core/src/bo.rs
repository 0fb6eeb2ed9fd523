//! The optimization loop: fit, minimize the acquisition, query, repeat.
//! Also the random-sampling baseline and the synthetic objectives.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::domain::DomainSpec;
use crate::enumerate::{sample_feasible_with, DEFAULT_SAMPLING_ATTEMPTS};
use crate::error::{Error, Result};
use crate::gp::{fit, lcb, posterior, FitOptions, GpModel};
use crate::graph::{AttributedGraph, ShortestPathSummary};
use crate::io::{GraphRecord, ProposalRecord};
use crate::kernels::{base_graph_kernel, KernelVariant};
use crate::solve::{solve, Budget, SolveOptions, SolveStatus, Strategy};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoConfig {
    pub variant: KernelVariant,
    pub beta_sqrt: f64,
    pub initial_samples: usize,
    pub iterations: usize,
    pub solver_seconds: f64,
    pub warm_start: usize,
    pub seed: u64,
    pub strategy: Strategy,
    pub workers: usize,
    pub fit_restarts: usize,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            variant: KernelVariant::Ssp,
            beta_sqrt: 1.0,
            initial_samples: 10,
            iterations: 50,
            solver_seconds: 600.0,
            warm_start: 20,
            seed: 0,
            strategy: Strategy::BranchAndPropagate,
            workers: 1,
            fit_restarts: 8,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_samples < 2 {
            return Err(Error::TooFewPoints { needed: 2, got: self.initial_samples });
        }
        if !(self.beta_sqrt >= 0.0) {
            return Err(Error::InvalidDomain(format!("beta_sqrt must be nonnegative, got {}", self.beta_sqrt)));
        }
        if !(self.solver_seconds > 0.0) || self.workers == 0 || self.fit_restarts == 0 {
            return Err(Error::InvalidDomain("solver seconds, workers and fit restarts must be positive".into()));
        }
        Ok(())
    }
}

/// Deterministic test objective, minimized.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveOracle {
    /// `sum_s w_s (D_s(G) - T_s)^2 / n^4`.
    PathProfile { target: Vec<f64>, weights: Vec<f64> },
    /// `sum_m c_m N_m(F) / (n M)`.
    FeatureCount { coefficients: Vec<f64> },
    /// `-k_SSP(G, G*)`.
    KernelDistance { target: Box<ShortestPathSummary> },
}

impl ObjectiveOracle {
    pub fn name(&self) -> &'static str {
        match self {
            ObjectiveOracle::PathProfile { .. } => "path_profile",
            ObjectiveOracle::FeatureCount { .. } => "feature_count",
            ObjectiveOracle::KernelDistance { .. } => "kernel_distance",
        }
    }

    /// Path-length profile objective aimed at the profile of `graph`, unit weights.
    pub fn path_profile_of(graph: &AttributedGraph) -> Self {
        let target: Vec<f64> = graph.summarize().length_counts().iter().map(|&d| d as f64).collect();
        let weights = vec![1.0; target.len()];
        ObjectiveOracle::PathProfile { target, weights }
    }

    pub fn evaluate(&self, graph: &AttributedGraph) -> Result<f64> {
        let s = graph.summarize();
        let n = graph.n() as f64;
        match self {
            ObjectiveOracle::PathProfile { target, weights } => {
                let d = s.length_counts();
                let len = target.len().max(d.len());
                let sum: f64 = (0..len)
                    .map(|k| {
                        let w = weights.get(k).copied().unwrap_or(0.0);
                        let diff = d.get(k).map_or(0.0, |&x| x as f64) - target.get(k).copied().unwrap_or(0.0);
                        w * diff * diff
                    })
                    .sum();
                Ok(sum / n.powi(4))
            }
            ObjectiveOracle::FeatureCount { coefficients } => {
                let m = graph.num_features();
                if coefficients.len() > m {
                    return Err(Error::OracleParams(format!("{} coefficients for {m} feature columns", coefficients.len())));
                }
                let dot: f64 = coefficients.iter().zip(s.feature_sums()).map(|(c, &x)| c * x as f64).sum();
                Ok(dot / (n * m as f64))
            }
            ObjectiveOracle::KernelDistance { target } => Ok(-base_graph_kernel(&s, target, false)?),
        }
    }
}

fn float_list(params: &Value, key: &str) -> Result<Option<Vec<f64>>> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => serde_json::from_value(v.clone())
            .map(Some)
            .map_err(|e| Error::OracleParams(format!("`{key}`: {e}"))),
    }
}

fn graph_param(params: &Value, key: &str) -> Result<Option<AttributedGraph>> {
    match params.get(key) {
        None => Ok(None),
        Some(v) => {
            let rec: GraphRecord =
                serde_json::from_value(v.clone()).map_err(|e| Error::OracleParams(format!("`{key}`: {e}")))?;
            Ok(Some(AttributedGraph::try_from(&rec)?))
        }
    }
}

/// Builds one of the named objectives from JSON parameters:
/// `path_profile` takes `target` (a profile) or `target_graph`, plus optional
/// `weights`; `feature_count` takes `coefficients`; `kernel_distance` takes
/// `target_graph`.
pub fn synthetic_oracle(name: &str, params: &Value) -> Result<ObjectiveOracle> {
    match name {
        "path_profile" => {
            let target = match (float_list(params, "target")?, graph_param(params, "target_graph")?) {
                (Some(t), None) => t,
                (None, Some(g)) => g.summarize().length_counts().iter().map(|&d| d as f64).collect(),
                _ => return Err(Error::OracleParams("path_profile needs exactly one of `target`, `target_graph`".into())),
            };
            let weights = float_list(params, "weights")?.unwrap_or_else(|| vec![1.0; target.len()]);
            if weights.len() != target.len() {
                return Err(Error::OracleParams("`weights` and `target` differ in length".into()));
            }
            Ok(ObjectiveOracle::PathProfile { target, weights })
        }
        "feature_count" => {
            let coefficients =
                float_list(params, "coefficients")?.ok_or_else(|| Error::OracleParams("missing `coefficients`".into()))?;
            Ok(ObjectiveOracle::FeatureCount { coefficients })
        }
        "kernel_distance" => {
            let g = graph_param(params, "target_graph")?
                .ok_or_else(|| Error::OracleParams("missing `target_graph`".into()))?;
            Ok(ObjectiveOracle::KernelDistance { target: Box::new(g.summarize()) })
        }
        other => Err(Error::UnknownOracle(other.to_string())),
    }
}

/// One evaluated point. Initial samples have iteration 0 and no solver data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoRecord {
    pub iter: usize,
    pub proposal_id: usize,
    pub y: f64,
    pub best_y: f64,
    pub mu: Option<f64>,
    pub sigma: Option<f64>,
    pub solver_status: Option<SolveStatus>,
    pub bound: Option<f64>,
    pub solve_seconds: Option<f64>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub sigma_k_sq: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BoHistory {
    pub records: Vec<BoRecord>,
    pub graphs: Vec<AttributedGraph>,
}

impl BoHistory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn best_y(&self) -> Option<f64> {
        self.records.last().map(|r| r.best_y)
    }

    /// Best value after the initial samples and `iter` further evaluations.
    pub fn best_after(&self, iter: usize) -> Option<f64> {
        self.records.iter().filter(|r| r.iter <= iter).map(|r| r.best_y).next_back()
    }

    fn push(&mut self, graph: AttributedGraph, mut record: BoRecord) {
        record.proposal_id = self.records.len();
        record.best_y = self.best_y().map_or(record.y, |b| b.min(record.y));
        self.records.push(record);
        self.graphs.push(graph);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for r in &self.records {
            w.serialize(CsvRow::from(r))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        self.write_csv(fs::File::create(path)?)
    }

    /// One `{"proposal_id", "graph"}` object per line.
    pub fn save_proposals(&self, path: &Path) -> Result<()> {
        let mut out = String::new();
        for (r, g) in self.records.iter().zip(&self.graphs) {
            let rec = ProposalRecord { proposal_id: r.proposal_id, graph: GraphRecord::from(g) };
            out.push_str(&serde_json::to_string(&rec)?);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Reads the CSV written by [`Self::write_csv`]; graphs are left empty.
    pub fn read_csv(path: &Path) -> Result<Vec<BoRecord>> {
        let mut r = csv::Reader::from_path(path)?;
        r.deserialize::<CsvRow>().map(|row| Ok(row?.into())).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    iter: usize,
    proposal_id: usize,
    y: f64,
    best_y: f64,
    mu: Option<f64>,
    sigma: Option<f64>,
    solver_status: Option<SolveStatus>,
    bound: Option<f64>,
    solve_seconds: Option<f64>,
    alpha: Option<f64>,
    beta: Option<f64>,
    sigma_k_sq: Option<f64>,
}

impl From<&BoRecord> for CsvRow {
    fn from(r: &BoRecord) -> Self {
        CsvRow {
            iter: r.iter,
            proposal_id: r.proposal_id,
            y: r.y,
            best_y: r.best_y,
            mu: r.mu,
            sigma: r.sigma,
            solver_status: r.solver_status,
            bound: r.bound,
            solve_seconds: r.solve_seconds,
            alpha: r.alpha,
            beta: r.beta,
            sigma_k_sq: r.sigma_k_sq,
        }
    }
}

impl From<CsvRow> for BoRecord {
    fn from(r: CsvRow) -> Self {
        BoRecord {
            iter: r.iter,
            proposal_id: r.proposal_id,
            y: r.y,
            best_y: r.best_y,
            mu: r.mu,
            sigma: r.sigma,
            solver_status: r.solver_status,
            bound: r.bound,
            solve_seconds: r.solve_seconds,
            alpha: r.alpha,
            beta: r.beta,
            sigma_k_sq: r.sigma_k_sq,
        }
    }
}

fn plain_record(iter: usize, y: f64) -> BoRecord {
    BoRecord {
        iter,
        proposal_id: 0,
        y,
        best_y: y,
        mu: None,
        sigma: None,
        solver_status: None,
        bound: None,
        solve_seconds: None,
        alpha: None,
        beta: None,
        sigma_k_sq: None,
    }
}

/// A failed run together with everything evaluated before the failure.
#[derive(Debug)]
pub struct BoFailure {
    pub error: Error,
    pub partial: BoHistory,
}

impl fmt::Display for BoFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} evaluations)", self.error, self.partial.len())
    }
}

impl std::error::Error for BoFailure {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        Some(&self.error)
    }
}

/// A warm-start candidate and its acquisition value.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmCandidate {
    pub graph: AttributedGraph,
    pub lcb: f64,
}

/// `k` fresh feasible samples plus every admissible prior point, scored by
/// the acquisition and sorted best first.
pub fn warm_start(
    gp: &GpModel,
    domain: &DomainSpec,
    beta_sqrt: f64,
    k: usize,
    seed: u64,
    prior_points: &[AttributedGraph],
) -> Result<Vec<WarmCandidate>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(k + prior_points.len());
    for _ in 0..k {
        graphs.push(sample_feasible_with(domain, &mut rng, DEFAULT_SAMPLING_ATTEMPTS)?);
    }
    graphs.extend(prior_points.iter().filter(|g| domain.admits(g)).cloned());
    let mut out = graphs
        .into_iter()
        .map(|graph| Ok(WarmCandidate { lcb: lcb(gp, &graph, beta_sqrt)?, graph }))
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.lcb.total_cmp(&b.lcb));
    Ok(out)
}

fn initial_samples(oracle: &ObjectiveOracle, domain: &DomainSpec, count: usize, rng: &mut ChaCha8Rng, history: &mut BoHistory) -> Result<()> {
    for _ in 0..count {
        let g = sample_feasible_with(domain, rng, DEFAULT_SAMPLING_ATTEMPTS)?;
        let y = oracle.evaluate(&g)?;
        history.push(g, plain_record(0, y));
    }
    Ok(())
}

fn bo_step(
    oracle: &ObjectiveOracle,
    domain: &DomainSpec,
    config: &BoConfig,
    iter: usize,
    rng: &mut ChaCha8Rng,
    history: &mut BoHistory,
) -> Result<()> {
    let ys: Vec<f64> = history.records.iter().map(|r| r.y).collect();
    let fit_opts = FitOptions { restarts: config.fit_restarts, seed: rng.gen(), ..FitOptions::default() };
    let gp = fit(&history.graphs, &ys, config.variant, &fit_opts)?;
    let warm = warm_start(&gp, domain, config.beta_sqrt, config.warm_start, rng.gen(), &history.graphs)?;
    let options = SolveOptions {
        strategy: config.strategy,
        budget: Budget { seconds: Some(config.solver_seconds), max_nodes: None },
        workers: config.workers,
        warm_start: warm.into_iter().map(|c| c.graph).collect(),
        ..SolveOptions::default()
    };
    let result = solve(&gp, domain, config.beta_sqrt, &options)?;
    let graph = result
        .incumbent
        .clone()
        .ok_or_else(|| Error::InfeasibleDomainDetected(format!("solver returned status {}", result.status)))?;
    let (mu, var) = posterior(&gp, &graph)?;
    let y = oracle.evaluate(&graph)?;
    let hyper = gp.hyper();
    log::info!("iter={iter} y={y} lcb={} status={}", result.objective, result.status);
    history.push(
        graph,
        BoRecord {
            mu: Some(mu),
            sigma: Some(var.sqrt()),
            solver_status: Some(result.status),
            bound: Some(result.bound),
            solve_seconds: Some(result.wall_time),
            alpha: Some(hyper.alpha),
            beta: Some(hyper.beta),
            sigma_k_sq: hyper.sigma_k_sq,
            ..plain_record(iter, y)
        },
    );
    Ok(())
}

/// Runs the loop: `initial_samples` random graphs, then `iterations` rounds
/// of fit, warm start, solve and evaluate. Deterministic for a fixed seed
/// with one worker.
pub fn run(oracle: &ObjectiveOracle, domain: &DomainSpec, config: &BoConfig) -> std::result::Result<BoHistory, Box<BoFailure>> {
    let mut history = BoHistory::default();
    let fail = |error: Error, partial: BoHistory| Box::new(BoFailure { error, partial });
    if let Err(e) = config.validate().and_then(|_| domain.validate()) {
        return Err(fail(e, history));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    if let Err(e) = initial_samples(oracle, domain, config.initial_samples, &mut rng, &mut history) {
        return Err(fail(e, history));
    }
    for iter in 1..=config.iterations {
        if let Err(e) = bo_step(oracle, domain, config, iter, &mut rng, &mut history) {
            return Err(fail(e, history));
        }
    }
    Ok(history)
}

/// Evaluates `initial_samples + iterations` random feasible graphs. The
/// first `initial_samples` coincide with those of [`run`] under the same seed.
pub fn random_baseline(oracle: &ObjectiveOracle, domain: &DomainSpec, config: &BoConfig) -> Result<BoHistory> {
    config.validate()?;
    domain.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut history = BoHistory::default();
    initial_samples(oracle, domain, config.initial_samples, &mut rng, &mut history)?;
    for iter in 1..=config.iterations {
        let g = sample_feasible_with(domain, &mut rng, DEFAULT_SAMPLING_ATTEMPTS)?;
        let y = oracle.evaluate(&g)?;
        history.push(g, plain_record(iter, y));
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::enumerate::enumerate_domain;
    use serde_json::json;

    fn path(n: usize) -> AttributedGraph {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        AttributedGraph::from_edges(n, false, &edges, &vec![vec![1]; n], 1).unwrap()
    }

    fn quick(iterations: usize, seed: u64) -> BoConfig {
        BoConfig { iterations, seed, initial_samples: 4, warm_start: 5, fit_restarts: 2, ..BoConfig::default() }
    }

    #[test]
    fn oracle_examples() {
        let p4 = path(4);
        assert_eq!(ObjectiveOracle::path_profile_of(&p4).evaluate(&p4).unwrap(), 0.0);
        let k2 = AttributedGraph::from_edges(2, false, &[(0, 1)], &[vec![0, 1], vec![0, 1]], 2).unwrap();
        let fc = synthetic_oracle("feature_count", &json!({"coefficients": [1.0, 0.0]})).unwrap();
        assert_eq!(fc.evaluate(&k2).unwrap(), 0.0);
        let kd = synthetic_oracle("kernel_distance", &json!({"target_graph": GraphRecord::from(&k2)})).unwrap();
        assert!((kd.evaluate(&k2).unwrap() + 0.5).abs() < 1e-15);
        assert!(matches!(synthetic_oracle("nope", &json!({})), Err(Error::UnknownOracle(_))));
        assert!(matches!(synthetic_oracle("path_profile", &json!({})), Err(Error::OracleParams(_))));
    }

    #[test]
    fn finds_the_path_on_four_nodes() {
        let domain = DomainSpec::fixed(4, false, 1, 1);
        let oracle = ObjectiveOracle::path_profile_of(&path(4));
        let zeros = enumerate_domain(&domain).unwrap().filter(|g| oracle.evaluate(g).unwrap() == 0.0).count();
        assert_eq!(zeros, 12);
        let h = run(&oracle, &domain, &quick(15, 3)).unwrap();
        assert_eq!(h.best_y(), Some(0.0));
    }

    #[test]
    fn zero_iterations_keeps_initial_samples() {
        let domain = DomainSpec::fixed(4, false, 1, 1);
        let oracle = ObjectiveOracle::path_profile_of(&path(4));
        let h = run(&oracle, &domain, &quick(0, 1)).unwrap();
        assert_eq!(h.len(), 4);
        assert!(h.records.iter().all(|r| r.iter == 0));
    }

    #[test]
    fn runs_are_deterministic_and_monotone() {
        let domain = DomainSpec::fixed(4, false, 2, 2);
        let oracle = ObjectiveOracle::path_profile_of(&path(4));
        let a = run(&oracle, &domain, &quick(3, 9)).unwrap();
        let b = run(&oracle, &domain, &quick(3, 9)).unwrap();
        assert_eq!(a.graphs, b.graphs);
        assert_eq!(a.records.iter().map(|r| r.y).collect::<Vec<_>>(), b.records.iter().map(|r| r.y).collect::<Vec<_>>());
        let r = random_baseline(&oracle, &domain, &quick(6, 9)).unwrap();
        assert_eq!(r, random_baseline(&oracle, &domain, &quick(6, 9)).unwrap());
        assert_eq!(r.graphs[..4], a.graphs[..4]);
        for h in [&a, &r] {
            assert!(h.records.windows(2).all(|w| w[1].best_y <= w[0].best_y));
            assert!(h.graphs.iter().all(|g| domain.admits(g)));
        }
    }

    #[test]
    fn warm_start_candidates() {
        let domain = DomainSpec::fixed(4, false, 1, 2);
        let gp = GpModel::prior(KernelVariant::Ssp, crate::kernels::KernelHyperparams::new(1.0, 1.0)).unwrap();
        assert!(warm_start(&gp, &domain, 1.0, 0, 0, &[]).unwrap().is_empty());
        let w = warm_start(&gp, &domain, 1.0, 6, 0, &[]).unwrap();
        assert_eq!(w.len(), 6);
        assert!(w.iter().all(|c| domain.admits(&c.graph)));
        assert!(w.windows(2).all(|p| p[0].lcb <= p[1].lcb));
    }

    #[test]
    fn csv_round_trip() {
        let domain = DomainSpec::fixed(3, false, 1, 1);
        let oracle = ObjectiveOracle::path_profile_of(&path(3));
        let h = run(&oracle, &domain, &quick(2, 0)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        h.save_csv(&p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("iter,proposal_id,y,best_y,mu,sigma,solver_status,bound,solve_seconds,alpha,beta,sigma_k_sq"));
        assert_eq!(BoHistory::read_csv(&p).unwrap(), h.records);
        let props = dir.path().join("p.jsonl");
        h.save_proposals(&props).unwrap();
        assert_eq!(crate::io::read_graphs(&props).unwrap(), h.graphs);
    }

    #[test]
    fn failures_keep_partial_history() {
        let domain = DomainSpec::fixed(3, false, 1, 1);
        let oracle = ObjectiveOracle::FeatureCount { coefficients: vec![1.0, 2.0] };
        let err = run(&oracle, &domain, &quick(2, 0)).unwrap_err();
        assert!(matches!(err.error, Error::OracleParams(_)));
        assert!(err.partial.is_empty());
    }
}
