//! Brute-force oracles shared by the integration tests. Nothing here calls
//! the library's shortest-path or kernel code.

#![allow(dead_code)]

use std::collections::VecDeque;

use graphbo_core::{AttributedGraph, KernelHyperparams, KernelVariant};
use nalgebra::DMatrix;
use rand::Rng;

pub use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn strongly_connected(n: usize, arcs: &[Vec<bool>]) -> bool {
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        seen[0] = true;
        let mut queue = VecDeque::from([0]);
        while let Some(u) = queue.pop_front() {
            for v in 0..n {
                let arc = if forward { arcs[u][v] } else { arcs[v][u] };
                if arc && !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().all(|&s| s)
    };
    reach(true) && reach(false)
}

/// A uniformly labeled random (strongly) connected graph. Each node carries a
/// one-hot label block of width `labels` followed by `extra` random bits.
pub fn random_connected(rng: &mut impl Rng, n: usize, directed: bool, labels: usize, extra: usize) -> AttributedGraph {
    let p: f64 = rng.gen_range(0.25..0.8);
    let arcs = loop {
        let mut arcs = vec![vec![false; n]; n];
        for u in 0..n {
            for v in 0..n {
                if u == v || (!directed && v < u) {
                    continue;
                }
                if rng.gen_bool(p) {
                    arcs[u][v] = true;
                    if !directed {
                        arcs[v][u] = true;
                    }
                }
            }
        }
        if strongly_connected(n, &arcs) {
            break arcs;
        }
    };
    let edges: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).map(move |v| (u, v)))
        .filter(|&(u, v)| arcs[u][v] && (directed || u < v))
        .collect();
    let features: Vec<Vec<u8>> = (0..n)
        .map(|_| {
            let label = rng.gen_range(0..labels);
            let mut row: Vec<u8> = (0..labels).map(|l| u8::from(l == label)).collect();
            row.extend((0..extra).map(|_| u8::from(rng.gen_bool(0.5))));
            row
        })
        .collect();
    AttributedGraph::from_edges(n, directed, &edges, &features, labels).unwrap()
}

/// Hop distances by breadth-first search from every source.
pub fn bfs_distances(g: &AttributedGraph) -> Vec<Vec<Option<usize>>> {
    let n = g.n();
    (0..n)
        .map(|s| {
            let mut dist = vec![None; n];
            dist[s] = Some(0);
            let mut queue = VecDeque::from([s]);
            while let Some(u) = queue.pop_front() {
                for v in 0..n {
                    if g.has_edge(u, v) && dist[v].is_none() {
                        dist[v] = Some(dist[u].unwrap() + 1);
                        queue.push_back(v);
                    }
                }
            }
            dist
        })
        .collect()
}

fn label_of(g: &AttributedGraph, v: usize) -> usize {
    (0..g.num_labels()).position(|l| g.feature(v, l)).unwrap()
}

/// Graph kernel by explicit enumeration of every pair of ordered node pairs:
/// the fraction of pairs with equal shortest-path length (and, if `labeled`,
/// equal endpoint labels).
pub fn pair_kernel(a: &AttributedGraph, b: &AttributedGraph, labeled: bool) -> f64 {
    let (da, db) = (bfs_distances(a), bfs_distances(b));
    let mut matches = 0u64;
    for (u, v) in (0..a.n()).flat_map(|u| (0..a.n()).map(move |v| (u, v))) {
        for (x, y) in (0..b.n()).flat_map(|x| (0..b.n()).map(move |y| (x, y))) {
            let same_len = da[u][v] == db[x][y];
            let same_lab = !labeled || (label_of(a, u) == label_of(b, x) && label_of(a, v) == label_of(b, y));
            if same_len && same_lab {
                matches += 1;
            }
        }
    }
    let (n1, n2) = (a.n() as f64, b.n() as f64);
    matches as f64 / (n1 * n1 * n2 * n2)
}

/// Feature kernel as the mean inner product over all node pairs and columns.
pub fn feature_pair_kernel(f1: &[Vec<u8>], f2: &[Vec<u8>]) -> f64 {
    let m = f1[0].len();
    let mut total = 0u64;
    for r1 in f1 {
        for r2 in f2 {
            total += r1.iter().zip(r2).map(|(&x, &y)| u64::from(x & y)).sum::<u64>();
        }
    }
    total as f64 / (f1.len() * f2.len() * m) as f64
}

pub fn kernel_oracle(a: &AttributedGraph, b: &AttributedGraph, variant: KernelVariant, h: &KernelHyperparams) -> f64 {
    let base = pair_kernel(a, b, variant.is_labeled());
    let graph = if variant.is_exponential() { base.exp() / h.sigma_k_sq.unwrap() } else { base };
    h.alpha * graph + h.beta * feature_pair_kernel(&a.feature_rows(), &b.feature_rows())
}

pub fn gram_oracle(points: &[AttributedGraph], variant: KernelVariant, h: &KernelHyperparams) -> DMatrix<f64> {
    DMatrix::from_fn(points.len(), points.len(), |i, j| kernel_oracle(&points[i], &points[j], variant, h))
}

/// Hyperparameters drawn log-uniformly from `[0.1, 10]`.
pub fn random_hyper(rng: &mut impl Rng, variant: KernelVariant) -> KernelHyperparams {
    let mut draw = || 10f64.powf(rng.gen_range(-1.0..1.0));
    let (alpha, beta) = (draw(), draw());
    if variant.is_exponential() {
        KernelHyperparams::with_variance(alpha, beta, draw())
    } else {
        KernelHyperparams::new(alpha, beta)
    }
}
