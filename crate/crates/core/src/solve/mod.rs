//! Exact minimization of the lower-confidence-bound acquisition over a
//! graph domain.
//!
//! Two strategies are available. `Enumerate` scores every graph of a small
//! domain. `BranchAndPropagate` branches on adjacency then feature bits,
//! prunes with structural propagation and an interval bound on the
//! acquisition, and certifies optimality within `gap_tol`.

mod bound;
mod feasibility;

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Mutex;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::enumerate::{enumerate_domain_with_cap, DEFAULT_ENUMERATION_CAP};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::graph::AttributedGraph;

pub use bound::{dual_bound, propagate_leaf, BoundContext, Leaf, PartialAssignment};
pub use feasibility::{check_feasible, count_feasible, propagate_fixings, Domains, Propagator, DEFAULT_COUNT_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Enumerate,
    #[default]
    BranchAndPropagate,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "enumerate" => Ok(Strategy::Enumerate),
            "branch_and_propagate" | "bnp" => Ok(Strategy::BranchAndPropagate),
            other => Err(Error::Parse(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    FeasibleTimeLimit,
    Infeasible,
    BudgetExhausted,
}

impl fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::FeasibleTimeLimit => "feasible_time_limit",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::BudgetExhausted => "budget_exhausted",
        };
        f.write_str(s)
    }
}

/// Wall-clock and node limits; either may be absent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget {
    pub seconds: Option<f64>,
    pub max_nodes: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { seconds: Some(600.0), max_nodes: None }
    }
}

impl Budget {
    pub fn unlimited() -> Self {
        Self { seconds: None, max_nodes: None }
    }

    pub fn nodes(max_nodes: u64) -> Self {
        Self { seconds: None, max_nodes: Some(max_nodes) }
    }

    fn exceeded(&self, start: Instant, nodes: u64) -> bool {
        self.max_nodes.is_some_and(|cap| nodes >= cap) || self.seconds.is_some_and(|s| start.elapsed().as_secs_f64() >= s)
    }
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub strategy: Strategy,
    pub budget: Budget,
    pub gap_tol: f64,
    pub workers: usize,
    /// Emit a progress line every this many nodes (0 disables).
    pub log_interval: u64,
    pub enumeration_cap: usize,
    /// Candidates evaluated before the search to seed the incumbent.
    pub warm_start: Vec<AttributedGraph>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::BranchAndPropagate,
            budget: Budget::default(),
            gap_tol: 1e-6,
            workers: 1,
            log_interval: 10_000,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            warm_start: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub incumbent: Option<AttributedGraph>,
    /// Acquisition value of the incumbent (`+inf` without one).
    pub objective: f64,
    /// Proven lower bound on the optimum.
    pub bound: f64,
    pub status: SolveStatus,
    pub nodes_explored: u64,
    pub wall_time: f64,
}

impl SolveResult {
    pub fn gap(&self) -> f64 {
        self.objective - self.bound
    }
}

#[derive(Debug, Clone)]
struct Incumbent {
    value: f64,
    key: (usize, Vec<bool>),
    graph: AttributedGraph,
}

impl Incumbent {
    fn beats(&self, other: &Incumbent) -> bool {
        self.value < other.value || (self.value == other.value && self.key < other.key)
    }
}

fn graph_key(graph: &AttributedGraph, domain: &DomainSpec) -> (usize, Vec<bool>) {
    PartialAssignment::from_graph(graph, domain).key()
}

struct Shared {
    incumbent: Mutex<Option<Incumbent>>,
    incumbent_value: AtomicU64,
    nodes: AtomicU64,
    stopped: AtomicBool,
    pruned_min: Mutex<f64>,
    open_min: Mutex<f64>,
    start: Instant,
}

impl Shared {
    fn new() -> Self {
        Self {
            incumbent: Mutex::new(None),
            incumbent_value: AtomicU64::new(f64::INFINITY.to_bits()),
            nodes: AtomicU64::new(0),
            stopped: AtomicBool::new(false),
            pruned_min: Mutex::new(f64::INFINITY),
            open_min: Mutex::new(f64::INFINITY),
            start: Instant::now(),
        }
    }

    fn best(&self) -> f64 {
        f64::from_bits(self.incumbent_value.load(Ordering::Acquire))
    }

    fn offer(&self, candidate: Incumbent) {
        let mut guard = self.incumbent.lock().expect("incumbent lock");
        if guard.as_ref().is_none_or(|cur| candidate.beats(cur)) {
            self.incumbent_value.store(candidate.value.to_bits(), Ordering::Release);
            *guard = Some(candidate);
        }
    }

    fn lower(cell: &Mutex<f64>, value: f64) {
        let mut g = cell.lock().expect("bound lock");
        *g = g.min(value);
    }
}

/// Minimizes `mu - beta_sqrt * sigma` over the domain.
pub fn solve(gp: &GpModel, domain: &DomainSpec, beta_sqrt: f64, options: &SolveOptions) -> Result<SolveResult> {
    domain.validate()?;
    if let Some(p) = gp.points().first() {
        if !domain.is_compatible(p) {
            return Err(Error::IncompatibleDomain(
                "training graphs and domain differ in directedness or feature layout".into(),
            ));
        }
    }
    if gp.variant().is_labeled() && domain.num_labels == 0 {
        return Err(Error::IncompatibleDomain("labeled kernels need at least one label".into()));
    }
    match options.strategy {
        Strategy::Enumerate => solve_enumerate(gp, domain, beta_sqrt, options),
        Strategy::BranchAndPropagate => solve_branch(gp, domain, beta_sqrt, options),
    }
}

fn solve_enumerate(gp: &GpModel, domain: &DomainSpec, beta_sqrt: f64, options: &SolveOptions) -> Result<SolveResult> {
    let start = Instant::now();
    let ctx = BoundContext::new(gp, beta_sqrt)?;
    let mut best: Option<(f64, AttributedGraph)> = None;
    let mut nodes = 0u64;
    let mut complete = true;
    for graph in enumerate_domain_with_cap(domain, options.enumeration_cap)? {
        if options.budget.exceeded(start, nodes) {
            complete = false;
            break;
        }
        nodes += 1;
        let value = ctx.leaf_value(&graph)?;
        if best.as_ref().is_none_or(|(b, _)| value < *b) {
            best = Some((value, graph));
        }
        if options.log_interval > 0 && nodes.is_multiple_of(options.log_interval) {
            let inc = best.as_ref().map_or(f64::INFINITY, |b| b.0);
            log::debug!("node={nodes} depth=0 bound=-inf incumbent={inc}");
        }
    }
    if !complete {
        for g in &options.warm_start {
            if domain.admits(g) {
                let value = ctx.leaf_value(g)?;
                if best.as_ref().is_none_or(|(b, _)| value < *b) {
                    best = Some((value, g.clone()));
                }
            }
        }
    }
    let (objective, incumbent) = match best {
        Some((v, g)) => (v, Some(g)),
        None => (f64::INFINITY, None),
    };
    let (status, bound) = match (complete, incumbent.is_some()) {
        (true, true) => (SolveStatus::Optimal, objective),
        (true, false) => (SolveStatus::Infeasible, f64::INFINITY),
        (false, true) => (SolveStatus::FeasibleTimeLimit, f64::NEG_INFINITY),
        (false, false) => (SolveStatus::BudgetExhausted, f64::NEG_INFINITY),
    };
    let result = SolveResult { incumbent, objective, bound, status, nodes_explored: nodes, wall_time: start.elapsed().as_secs_f64() };
    log_summary(&result);
    Ok(result)
}

fn log_summary(r: &SolveResult) {
    log::info!(
        "status={} objective={} bound={} gap={} nodes={} time={:.3}s",
        r.status,
        r.objective,
        r.bound,
        r.gap(),
        r.nodes_explored,
        r.wall_time
    );
}

/// Splits `root` into at most about `target` subtrees, in depth-first order.
fn split_frontier(root: PartialAssignment, target: usize) -> Vec<PartialAssignment> {
    let mut frontier = vec![root];
    while frontier.len() < target {
        let mut next = Vec::with_capacity(frontier.len() * 2);
        let mut grew = false;
        for p in frontier {
            match p.first_free() {
                Some(i) => {
                    for value in [true, false] {
                        let mut c = p.clone();
                        c.set(i, value);
                        next.push(c);
                    }
                    grew = true;
                }
                None => next.push(p),
            }
        }
        frontier = next;
        if !grew {
            break;
        }
    }
    frontier
}

struct Search<'a> {
    ctx: &'a BoundContext<'a>,
    domain: &'a DomainSpec,
    options: &'a SolveOptions,
    shared: &'a Shared,
}

impl Search<'_> {
    fn run(&self, root: PartialAssignment) -> Result<()> {
        let mut stack = vec![(root, f64::NEG_INFINITY)];
        while let Some((mut node, parent_bound)) = stack.pop() {
            let explored = self.shared.nodes.load(Ordering::Relaxed);
            if self.shared.stopped.load(Ordering::Relaxed) || self.options.budget.exceeded(self.shared.start, explored) {
                self.shared.stopped.store(true, Ordering::Relaxed);
                let open = stack.iter().map(|s| s.1).fold(parent_bound, f64::min);
                Shared::lower(&self.shared.open_min, open);
                return Ok(());
            }
            let count = self.shared.nodes.fetch_add(1, Ordering::Relaxed) + 1;
            if !node.propagate_labels() || !node.may_be_feasible(self.domain) {
                continue;
            }
            if node.is_complete() {
                if let Some(graph) = node.to_graph().filter(|g| self.domain.admits(g)) {
                    let value = self.ctx.leaf_value(&graph)?;
                    self.shared.offer(Incumbent { value, key: node.key(), graph });
                }
                continue;
            }
            let b = self.ctx.bound(&node).max(parent_bound);
            let best = self.shared.best();
            if self.options.log_interval > 0 && count.is_multiple_of(self.options.log_interval) {
                log::debug!("node={count} depth={} bound={b} incumbent={best}", node.depth());
            }
            if b > best - self.options.gap_tol {
                Shared::lower(&self.shared.pruned_min, b);
                continue;
            }
            let i = node.first_free().expect("incomplete node has a free bit");
            let mut zero = node.clone();
            zero.set(i, false);
            node.set(i, true);
            stack.push((zero, b));
            stack.push((node, b));
        }
        Ok(())
    }
}

fn solve_branch(gp: &GpModel, domain: &DomainSpec, beta_sqrt: f64, options: &SolveOptions) -> Result<SolveResult> {
    let ctx = BoundContext::new(gp, beta_sqrt)?;
    let shared = Shared::new();
    for g in &options.warm_start {
        if domain.admits(g) {
            let value = ctx.leaf_value(g)?;
            shared.offer(Incumbent { value, key: graph_key(g, domain), graph: g.clone() });
        }
    }
    let workers = options.workers.max(1);
    let search = Search { ctx: &ctx, domain, options, shared: &shared };
    for n in domain.size.min()..=domain.size.max() {
        let root = PartialAssignment::new(n, domain);
        if workers == 1 {
            search.run(root)?;
        } else {
            let frontier = split_frontier(root, 8 * workers);
            let next = AtomicU64::new(0);
            let errors: Mutex<Option<Error>> = Mutex::new(None);
            std::thread::scope(|scope| {
                for _ in 0..workers {
                    scope.spawn(|| loop {
                        let k = next.fetch_add(1, Ordering::Relaxed) as usize;
                        let Some(sub) = frontier.get(k) else { break };
                        if let Err(e) = search.run(sub.clone()) {
                            errors.lock().expect("error lock").get_or_insert(e);
                            shared.stopped.store(true, Ordering::Relaxed);
                            break;
                        }
                    });
                }
            });
            if let Some(e) = errors.into_inner().expect("error lock") {
                return Err(e);
            }
        }
        if shared.stopped.load(Ordering::Relaxed) {
            // sizes never reached stay open
            if n < domain.size.max() {
                Shared::lower(&shared.open_min, f64::NEG_INFINITY);
            }
            break;
        }
    }
    let incumbent = shared.incumbent.into_inner().expect("incumbent lock");
    let stopped = shared.stopped.load(Ordering::Relaxed);
    let pruned = shared.pruned_min.into_inner().expect("bound lock");
    let open = shared.open_min.into_inner().expect("bound lock");
    let objective = incumbent.as_ref().map_or(f64::INFINITY, |i| i.value);
    let mut bound = objective.min(pruned);
    if stopped {
        bound = bound.min(open);
    }
    let status = match (stopped, incumbent.is_some()) {
        (false, true) => SolveStatus::Optimal,
        (false, false) => SolveStatus::Infeasible,
        (true, true) => SolveStatus::FeasibleTimeLimit,
        (true, false) => SolveStatus::BudgetExhausted,
    };
    let result = SolveResult {
        incumbent: incumbent.map(|i| i.graph),
        objective,
        bound,
        status,
        nodes_explored: shared.nodes.load(Ordering::Relaxed),
        wall_time: shared.start.elapsed().as_secs_f64(),
    };
    log_summary(&result);
    Ok(result)
}
