//! Partial structural assignments, pruning tests and the interval dual bound.

use crate::domain::{DomainSpec, Sense, StructVar};
use crate::enumerate::adjacency_pairs;
use crate::error::Result;
use crate::gp::GpModel;
use crate::graph::{all_pairs_distances, is_connected, AttributedGraph, UNREACHABLE};
use crate::kernels::{KernelHyperparams, KernelVariant};

const NO_PAIR: usize = usize::MAX;

/// Adjacency and feature bits of one candidate size, each either fixed or free.
/// Bits are ordered as adjacency pairs (lexicographic) then features (row-major).
#[derive(Debug, Clone, PartialEq)]
pub struct PartialAssignment {
    n: usize,
    directed: bool,
    num_labels: usize,
    num_features: usize,
    pairs: Vec<(usize, usize)>,
    pair_index: Vec<usize>,
    bits: Vec<Option<bool>>,
}

impl PartialAssignment {
    pub fn new(n: usize, domain: &DomainSpec) -> Self {
        let pairs = adjacency_pairs(n, domain.directed);
        let mut pair_index = vec![NO_PAIR; n * n];
        for (i, &(u, v)) in pairs.iter().enumerate() {
            pair_index[u * n + v] = i;
            if !domain.directed {
                pair_index[v * n + u] = i;
            }
        }
        let bits = vec![None; pairs.len() + n * domain.num_features];
        Self {
            n,
            directed: domain.directed,
            num_labels: domain.num_labels,
            num_features: domain.num_features,
            pairs,
            pair_index,
            bits,
        }
    }

    pub fn from_graph(graph: &AttributedGraph, domain: &DomainSpec) -> Self {
        let mut p = Self::new(graph.n(), domain);
        for i in 0..p.pairs.len() {
            let (u, v) = p.pairs[i];
            p.bits[i] = Some(graph.has_edge(u, v));
        }
        let offset = p.pairs.len();
        for (k, &b) in graph.features_flat().iter().enumerate() {
            p.bits[offset + k] = Some(b);
        }
        p
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_bits(&self) -> usize {
        self.bits.len()
    }

    pub fn num_adjacency_bits(&self) -> usize {
        self.pairs.len()
    }

    pub fn bit(&self, i: usize) -> Option<bool> {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = Some(value);
    }

    pub fn bits(&self) -> &[Option<bool>] {
        &self.bits
    }

    /// Number of fixed bits.
    pub fn depth(&self) -> usize {
        self.bits.iter().filter(|b| b.is_some()).count()
    }

    pub fn first_free(&self) -> Option<usize> {
        self.bits.iter().position(Option::is_none)
    }

    pub fn is_complete(&self) -> bool {
        self.bits.iter().all(Option::is_some)
    }

    pub fn edge(&self, u: usize, v: usize) -> Option<bool> {
        if u == v {
            return Some(false);
        }
        self.bits[self.pair_index[u * self.n + v]]
    }

    pub fn feature(&self, v: usize, m: usize) -> Option<bool> {
        self.bits[self.pairs.len() + v * self.num_features + m]
    }

    fn set_feature(&mut self, v: usize, m: usize, value: bool) {
        let i = self.pairs.len() + v * self.num_features + m;
        self.bits[i] = Some(value);
    }

    fn adjacency_where(&self, keep: impl Fn(Option<bool>) -> bool) -> Vec<bool> {
        let n = self.n;
        let mut adj = vec![false; n * n];
        for u in 0..n {
            for v in 0..n {
                adj[u * n + v] = u != v && keep(self.edge(u, v));
            }
        }
        adj
    }

    /// Adjacency with every free edge present.
    pub fn optimistic_adjacency(&self) -> Vec<bool> {
        self.adjacency_where(|b| b != Some(false))
    }

    /// Adjacency with only the fixed edges.
    pub fn fixed_adjacency(&self) -> Vec<bool> {
        self.adjacency_where(|b| b == Some(true))
    }

    /// Labels that node `v` can still take.
    pub fn allowed_labels(&self, v: usize) -> Vec<usize> {
        (0..self.num_labels).filter(|&l| self.feature(v, l) != Some(false)).collect()
    }

    /// Enforces the one-hot label block; false on a contradiction.
    pub fn propagate_labels(&mut self) -> bool {
        for v in 0..self.n {
            let ones = (0..self.num_labels).filter(|&l| self.feature(v, l) == Some(true)).count();
            let open: Vec<usize> = (0..self.num_labels).filter(|&l| self.feature(v, l).is_none()).collect();
            match ones {
                0 if open.is_empty() => return false,
                0 if open.len() == 1 => self.set_feature(v, open[0], true),
                0 => {}
                1 => {
                    for l in open {
                        self.set_feature(v, l, false);
                    }
                }
                _ => return false,
            }
        }
        true
    }

    /// The graph of a complete assignment, if it is a valid attributed graph.
    pub fn to_graph(&self) -> Option<AttributedGraph> {
        if !self.is_complete() {
            return None;
        }
        let adjacency = self.adjacency_where(|b| b == Some(true));
        let features = self.bits[self.pairs.len()..].iter().map(|b| b == &Some(true)).collect();
        AttributedGraph::from_flat(self.n, self.directed, adjacency, self.num_features, self.num_labels, features).ok()
    }

    /// Tie-break key matching enumeration order.
    pub fn key(&self) -> (usize, Vec<bool>) {
        (self.n, self.bits.iter().map(|b| b == &Some(true)).collect())
    }

    /// Necessary conditions for some completion to lie in the domain.
    pub fn may_be_feasible(&self, domain: &DomainSpec) -> bool {
        let n = self.n;
        if !is_connected(n, &self.optimistic_adjacency()) {
            return false;
        }
        if let Some(caps) = &domain.degree_caps {
            for v in 0..n {
                let Some(cap) = self.allowed_labels(v).iter().map(|&l| caps[l]).max() else {
                    return false;
                };
                let out = (0..n).filter(|&u| self.edge(v, u) == Some(true)).count();
                let inn = (0..n).filter(|&u| self.edge(u, v) == Some(true)).count();
                if out > cap || inn > cap {
                    return false;
                }
            }
        }
        if let Some(counts) = &domain.label_counts {
            for (l, b) in counts.iter().enumerate() {
                let fixed = (0..n).filter(|&v| self.feature(v, l) == Some(true)).count();
                let possible = (0..n).filter(|&v| self.feature(v, l) != Some(false)).count();
                if fixed > b.max || possible < b.min {
                    return false;
                }
            }
        }
        for row in &domain.linear_rows {
            let (mut lo, mut hi) = (0.0, 0.0);
            for &(var, c) in &row.terms {
                let state = match var {
                    StructVar::Edge(u, v) if u < n && v < n => self.edge(u, v),
                    StructVar::Feature(v, m) if v < n && m < self.num_features => self.feature(v, m),
                    _ => Some(false),
                };
                let (a, b) = match state {
                    Some(x) => (f64::from(u8::from(x)), f64::from(u8::from(x))),
                    None => (0.0, 1.0),
                };
                lo += (c * a).min(c * b);
                hi += (c * a).max(c * b);
            }
            let tol = 1e-9;
            let ok = match row.sense {
                Sense::Le => lo <= row.rhs + tol,
                Sense::Ge => hi >= row.rhs - tol,
                Sense::Eq => lo <= row.rhs + tol && hi >= row.rhs - tol,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

/// Outcome of evaluating a complete assignment.
#[derive(Debug, Clone, PartialEq)]
pub enum Leaf {
    Value(f64, AttributedGraph),
    Pruned,
}

/// Acquisition value of a fully specified candidate, or `Pruned` when it is
/// not a graph of the domain.
pub fn propagate_leaf(
    n: usize,
    adjacency_bits: &[bool],
    feature_bits: &[bool],
    domain: &DomainSpec,
    gp: &GpModel,
    beta_sqrt: f64,
) -> Result<Leaf> {
    let mut p = PartialAssignment::new(n, domain);
    if adjacency_bits.len() + feature_bits.len() != p.num_bits() {
        return Ok(Leaf::Pruned);
    }
    for (i, &b) in adjacency_bits.iter().chain(feature_bits).enumerate() {
        p.set(i, b);
    }
    let Some(graph) = p.to_graph().filter(|g| domain.admits(g)) else {
        return Ok(Leaf::Pruned);
    };
    let (mu, var) = gp.posterior_summary(&graph.summarize())?;
    Ok(Leaf::Value(mu - beta_sqrt * var.sqrt(), graph))
}

struct TrainStats {
    n: usize,
    lengths: Vec<f64>,
    labeled: Vec<f64>,
    sums: Vec<f64>,
}

/// Precomputed data for interval bounds of the acquisition under one GP.
pub struct BoundContext<'a> {
    gp: &'a GpModel,
    beta_sqrt: f64,
    variant: KernelVariant,
    hyper: KernelHyperparams,
    num_labels: usize,
    weights: Vec<f64>,
    lambda_min: f64,
    train: Vec<TrainStats>,
}

impl<'a> BoundContext<'a> {
    pub fn new(gp: &'a GpModel, beta_sqrt: f64) -> Result<Self> {
        let lambda_min = if gp.is_empty() {
            0.0
        } else {
            let c = gp.covariance()?;
            let top = c.symmetric_eigenvalues().max();
            (1.0 / top) * (1.0 - 1e-9)
        };
        let train = gp
            .summaries()
            .iter()
            .map(|s| TrainStats {
                n: s.n(),
                lengths: s.length_counts().iter().map(|&x| x as f64).collect(),
                labeled: s.labeled_counts_flat().iter().map(|&x| x as f64).collect(),
                sums: s.feature_sums().iter().map(|&x| x as f64).collect(),
            })
            .collect();
        Ok(Self {
            gp,
            beta_sqrt,
            variant: gp.variant(),
            hyper: *gp.hyper(),
            num_labels: gp.summaries().first().map_or(0, |s| s.num_labels()),
            weights: gp.weights().iter().copied().collect(),
            lambda_min,
            train,
        })
    }

    pub fn beta_sqrt(&self) -> f64 {
        self.beta_sqrt
    }

    /// Exact acquisition value of a graph.
    pub fn leaf_value(&self, graph: &AttributedGraph) -> Result<f64> {
        let (mu, var) = self.gp.posterior_summary(&graph.summarize())?;
        Ok(mu - self.beta_sqrt * var.sqrt())
    }

    fn graph_scale(&self, base: f64) -> f64 {
        if self.variant.is_exponential() {
            self.hyper.alpha * base.exp() / self.hyper.sigma_k_sq.unwrap_or(1.0)
        } else {
            self.hyper.alpha * base
        }
    }

    /// Lower bound on the acquisition over every completion of `p`.
    /// The caller is expected to have checked [`PartialAssignment::may_be_feasible`].
    pub fn bound(&self, p: &PartialAssignment) -> f64 {
        let n = p.n();
        let m = p.num_features;
        let labeled = self.variant.is_labeled();
        let lo_dist = all_pairs_distances(n, &p.optimistic_adjacency());
        let hi_dist: Vec<usize> = all_pairs_distances(n, &p.fixed_adjacency())
            .into_iter()
            .map(|d| if d == UNREACHABLE { n - 1 } else { d })
            .collect();
        let ranges: Vec<(usize, usize)> =
            lo_dist.iter().zip(&hi_dist).map(|(&a, &b)| (a.min(n - 1), b.max(a).min(n - 1))).collect();
        let allowed: Vec<Vec<usize>> = (0..n).map(|v| p.allowed_labels(v)).collect();
        let label_pairs = |u: usize, v: usize| -> Vec<(usize, usize)> {
            if u == v {
                allowed[u].iter().map(|&l| (l, l)).collect()
            } else {
                allowed[u].iter().flat_map(|&a| allowed[v].iter().map(move |&b| (a, b))).collect()
            }
        };
        let n_lo: Vec<f64> =
            (0..m).map(|c| (0..n).filter(|&v| p.feature(v, c) == Some(true)).count() as f64).collect();
        let n_hi: Vec<f64> =
            (0..m).map(|c| (0..n).filter(|&v| p.feature(v, c) != Some(false)).count() as f64).collect();
        let nf = n as f64;

        let mut k_lo = Vec::with_capacity(self.train.len());
        let mut k_hi = Vec::with_capacity(self.train.len());
        let l = self.num_labels.max(1);
        for t in &self.train {
            let (mut g_lo, mut g_hi) = (0.0, 0.0);
            let count = |s: usize, l1: usize, l2: usize| -> f64 {
                if s >= t.n {
                    0.0
                } else if labeled {
                    t.labeled[(s * l + l1) * l + l2]
                } else {
                    t.lengths[s]
                }
            };
            for u in 0..n {
                for v in 0..n {
                    let (a, b) = ranges[u * n + v];
                    let lp = if labeled { label_pairs(u, v) } else { vec![(0, 0)] };
                    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
                    for s in a..=b {
                        for &(l1, l2) in &lp {
                            let x = count(s, l1, l2);
                            lo = f64::min(lo, x);
                            hi = f64::max(hi, x);
                        }
                    }
                    g_lo += lo;
                    g_hi += hi;
                }
            }
            let norm = nf * nf * (t.n * t.n) as f64;
            let fnorm = if m == 0 { 1.0 } else { nf * t.n as f64 * m as f64 };
            let f_lo: f64 = t.sums.iter().zip(&n_lo).map(|(a, b)| a * b).sum::<f64>() / fnorm;
            let f_hi: f64 = t.sums.iter().zip(&n_hi).map(|(a, b)| a * b).sum::<f64>() / fnorm;
            k_lo.push(self.graph_scale(g_lo / norm) + self.hyper.beta * f_lo);
            k_hi.push(self.graph_scale(g_hi / norm) + self.hyper.beta * f_hi);
        }
        let mu_lb: f64 = self
            .weights
            .iter()
            .enumerate()
            .map(|(i, &w)| if w >= 0.0 { w * k_lo[i] } else { w * k_hi[i] })
            .sum();
        if self.beta_sqrt == 0.0 {
            return mu_lb;
        }

        // Self-kernel: sum_s D_s^2 <= sum over pairs of the largest histogram
        // cell the pair can fall into.
        let nl = if labeled { l } else { 1 };
        let mut hist = vec![0.0f64; n * nl * nl];
        for u in 0..n {
            for v in 0..n {
                let (a, b) = ranges[u * n + v];
                let lp = if labeled { label_pairs(u, v) } else { vec![(0, 0)] };
                for s in a..=b {
                    for &(l1, l2) in &lp {
                        hist[(s * nl + l1) * nl + l2] += 1.0;
                    }
                }
            }
        }
        let mut self_raw = 0.0;
        for u in 0..n {
            for v in 0..n {
                let (a, b) = ranges[u * n + v];
                let lp = if labeled { label_pairs(u, v) } else { vec![(0, 0)] };
                let mut best = 0.0f64;
                for s in a..=b {
                    for &(l1, l2) in &lp {
                        best = best.max(hist[(s * nl + l1) * nl + l2]);
                    }
                }
                self_raw += best;
            }
        }
        let g_self = (self_raw / (nf * nf * nf * nf)).min(1.0);
        let f_self = if m == 0 { 0.0 } else { n_hi.iter().map(|x| x * x).sum::<f64>() / (nf * nf * m as f64) };
        let kxx_ub = self.graph_scale(g_self) + self.hyper.beta * f_self;
        let explained = self.lambda_min * k_lo.iter().map(|x| x * x).sum::<f64>();
        let var_ub = (kxx_ub - explained).max(0.0);
        mu_lb - self.beta_sqrt * var_ub.sqrt()
    }
}

/// Lower bound on the acquisition over every completion of `partial`:
/// `+inf` when no completion is a graph of the domain, the exact value when
/// every bit is fixed.
pub fn dual_bound(partial: &PartialAssignment, domain: &DomainSpec, gp: &GpModel, beta_sqrt: f64) -> Result<f64> {
    let mut p = partial.clone();
    if !p.propagate_labels() || !p.may_be_feasible(domain) {
        return Ok(f64::INFINITY);
    }
    let ctx = BoundContext::new(gp, beta_sqrt)?;
    if p.is_complete() {
        return match p.to_graph().filter(|g| domain.admits(g)) {
            Some(g) => ctx.leaf_value(&g),
            None => Ok(f64::INFINITY),
        };
    }
    Ok(ctx.bound(&p))
}
