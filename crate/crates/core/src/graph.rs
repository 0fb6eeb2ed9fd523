//! Attributed graphs and their shortest-path statistics.
//!
//! An [`AttributedGraph`] is a connected (strongly connected when directed)
//! graph without self-loops whose nodes carry a binary feature row. The first
//! `num_labels` feature columns are a one-hot label block.

use crate::error::{Error, Result};

/// Distance used for unreachable pairs inside the all-pairs routines.
pub const UNREACHABLE: usize = usize::MAX;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AttributedGraph {
    n: usize,
    directed: bool,
    adjacency: Vec<bool>,
    num_features: usize,
    num_labels: usize,
    features: Vec<bool>,
}

fn to_bit(value: u8, row: usize, col: usize) -> Result<bool> {
    match value {
        0 => Ok(false),
        1 => Ok(true),
        _ => Err(Error::NonBinary(row, col)),
    }
}

/// Validates and builds an attributed graph from dense 0/1 matrices.
pub fn build_graph(
    adjacency: &[Vec<u8>],
    features: &[Vec<u8>],
    directed: bool,
    num_labels: usize,
) -> Result<AttributedGraph> {
    let n = adjacency.len();
    if n == 0 {
        return Err(Error::DimensionMismatch("graph must have at least one node".into()));
    }
    let mut adj = Vec::with_capacity(n * n);
    for (u, row) in adjacency.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonSquare { row: u, len: row.len(), n });
        }
        for (v, &x) in row.iter().enumerate() {
            adj.push(to_bit(x, u, v)?);
        }
    }
    if features.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "feature matrix has {} rows for {} nodes",
            features.len(),
            n
        )));
    }
    let m = features[0].len();
    let mut feat = Vec::with_capacity(n * m);
    for (v, row) in features.iter().enumerate() {
        if row.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "feature row {v} has {} columns, expected {m}",
                row.len()
            )));
        }
        for (c, &x) in row.iter().enumerate() {
            feat.push(to_bit(x, v, c)?);
        }
    }
    AttributedGraph::from_flat(n, directed, adj, m, num_labels, feat)
}

impl AttributedGraph {
    /// Builds a graph from flattened row-major adjacency and feature bits,
    /// running every validation check.
    pub fn from_flat(
        n: usize,
        directed: bool,
        adjacency: Vec<bool>,
        num_features: usize,
        num_labels: usize,
        features: Vec<bool>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::DimensionMismatch("graph must have at least one node".into()));
        }
        if adjacency.len() != n * n {
            return Err(Error::DimensionMismatch(format!(
                "adjacency has {} entries for {n} nodes",
                adjacency.len()
            )));
        }
        if features.len() != n * num_features {
            return Err(Error::DimensionMismatch(format!(
                "feature matrix has {} entries, expected {}x{}",
                features.len(),
                n,
                num_features
            )));
        }
        if num_labels == 0 || num_labels > num_features {
            return Err(Error::DimensionMismatch(format!(
                "need 1 <= num_labels <= num_features, got L={num_labels}, M={num_features}"
            )));
        }
        for v in 0..n {
            if adjacency[v * n + v] {
                return Err(Error::SelfLoop(v));
            }
        }
        if !directed {
            for u in 0..n {
                for v in (u + 1)..n {
                    if adjacency[u * n + v] != adjacency[v * n + u] {
                        return Err(Error::AsymmetricUndirected(u, v));
                    }
                }
            }
        }
        for v in 0..n {
            let row = &features[v * num_features..v * num_features + num_labels];
            if row.iter().filter(|&&b| b).count() != 1 {
                return Err(Error::BadOneHot(v));
            }
        }
        if !is_connected(n, &adjacency) {
            return Err(Error::Disconnected);
        }
        Ok(Self { n, directed, adjacency, num_features, num_labels, features })
    }

    /// Caller guarantees every invariant checked by [`Self::from_flat`].
    pub(crate) fn from_trusted(
        n: usize,
        directed: bool,
        adjacency: Vec<bool>,
        num_features: usize,
        num_labels: usize,
        features: Vec<bool>,
    ) -> Self {
        debug_assert!(is_connected(n, &adjacency));
        Self { n, directed, adjacency, num_features, num_labels, features }
    }

    /// Builds a graph from an edge list. Undirected edges are mirrored.
    pub fn from_edges(
        n: usize,
        directed: bool,
        edges: &[(usize, usize)],
        features: &[Vec<u8>],
        num_labels: usize,
    ) -> Result<Self> {
        let mut adj = vec![vec![0u8; n]; n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::DimensionMismatch(format!("edge ({u}, {v}) out of range for n={n}")));
            }
            adj[u][v] = 1;
            if !directed {
                adj[v][u] = 1;
            }
        }
        build_graph(&adj, features, directed, num_labels)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn directed(&self) -> bool {
        self.directed
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v]
    }

    pub fn feature(&self, v: usize, m: usize) -> bool {
        self.features[v * self.num_features + m]
    }

    /// Index of the single active column in the label block of node `v`.
    pub fn label(&self, v: usize) -> usize {
        (0..self.num_labels)
            .find(|&l| self.feature(v, l))
            .expect("validated graphs carry one-hot labels")
    }

    pub fn adjacency_flat(&self) -> &[bool] {
        &self.adjacency
    }

    pub fn features_flat(&self) -> &[bool] {
        &self.features
    }

    /// Edge list: `u < v` pairs for undirected graphs, all arcs otherwise.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for u in 0..self.n {
            for v in 0..self.n {
                if self.has_edge(u, v) && (self.directed || u < v) {
                    out.push((u, v));
                }
            }
        }
        out
    }

    pub fn feature_rows(&self) -> Vec<Vec<u8>> {
        (0..self.n)
            .map(|v| (0..self.num_features).map(|m| self.feature(v, m) as u8).collect())
            .collect()
    }

    /// Returns the same graph with node `perm[v]` taking the role of node `v`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let n = self.n;
        let mut adjacency = vec![false; n * n];
        for u in 0..n {
            for v in 0..n {
                adjacency[u * n + v] = self.has_edge(perm[u], perm[v]);
            }
        }
        let mut features = vec![false; n * self.num_features];
        for v in 0..n {
            for m in 0..self.num_features {
                features[v * self.num_features + m] = self.feature(perm[v], m);
            }
        }
        Self { adjacency, features, ..self.clone() }
    }

    pub fn summarize(&self) -> ShortestPathSummary {
        summarize(self)
    }
}

/// True iff every ordered pair of nodes is joined by a directed path.
///
/// `adjacency` is a flattened `n x n` matrix; for symmetric input this is
/// ordinary connectivity.
pub fn is_connected(n: usize, adjacency: &[bool]) -> bool {
    if n <= 1 {
        return true;
    }
    let reach = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let arc = if forward { adjacency[u * n + v] } else { adjacency[v * n + u] };
                if arc && !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    };
    reach(true) && reach(false)
}

/// All-pairs hop distances on a flattened adjacency matrix; unreachable
/// pairs get [`UNREACHABLE`].
pub fn all_pairs_distances(n: usize, adjacency: &[bool]) -> Vec<usize> {
    let mut dist = vec![UNREACHABLE; n * n];
    for u in 0..n {
        dist[u * n + u] = 0;
        for v in 0..n {
            if u != v && adjacency[u * n + v] {
                dist[u * n + v] = 1;
            }
        }
    }
    for w in 0..n {
        for u in 0..n {
            let duw = dist[u * n + w];
            if duw == UNREACHABLE {
                continue;
            }
            for v in 0..n {
                let dwv = dist[w * n + v];
                if dwv != UNREACHABLE && duw + dwv < dist[u * n + v] {
                    dist[u * n + v] = duw + dwv;
                }
            }
        }
    }
    dist
}

/// Shortest distances plus the "lies on some shortest path" tensor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPaths {
    n: usize,
    dist: Vec<usize>,
    on_path: Vec<bool>,
}

impl ShortestPaths {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dist(&self, u: usize, v: usize) -> usize {
        self.dist[u * self.n + v]
    }

    /// Whether `w` lies on some shortest path from `u` to `v`.
    pub fn on_path(&self, u: usize, v: usize, w: usize) -> bool {
        self.on_path[(u * self.n + v) * self.n + w]
    }

    pub fn dist_flat(&self) -> &[usize] {
        &self.dist
    }
}

pub fn floyd_warshall(graph: &AttributedGraph) -> ShortestPaths {
    let n = graph.n();
    let dist = all_pairs_distances(n, graph.adjacency_flat());
    let mut on_path = vec![false; n * n * n];
    for u in 0..n {
        for v in 0..n {
            let duv = dist[u * n + v];
            for w in 0..n {
                on_path[(u * n + v) * n + w] = dist[u * n + w] + dist[w * n + v] == duv;
            }
        }
    }
    ShortestPaths { n, dist, on_path }
}

/// Path-length and feature statistics consumed by every kernel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShortestPathSummary {
    n: usize,
    num_labels: usize,
    paths: ShortestPaths,
    length_counts: Vec<usize>,
    labeled_counts: Vec<usize>,
    feature_sums: Vec<usize>,
}

impl ShortestPathSummary {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    pub fn num_features(&self) -> usize {
        self.feature_sums.len()
    }

    pub fn paths(&self) -> &ShortestPaths {
        &self.paths
    }

    pub fn dist(&self, u: usize, v: usize) -> usize {
        self.paths.dist(u, v)
    }

    pub fn on_path(&self, u: usize, v: usize, w: usize) -> bool {
        self.paths.on_path(u, v, w)
    }

    /// `D_s` for `s` in `0..n`: number of ordered pairs at distance `s`.
    pub fn length_counts(&self) -> &[usize] {
        &self.length_counts
    }

    /// Number of ordered pairs `(u, v)` at distance `s` with labels `(l1, l2)`.
    pub fn labeled_count(&self, s: usize, l1: usize, l2: usize) -> usize {
        if s >= self.n {
            return 0;
        }
        let l = self.num_labels;
        self.labeled_counts[(s * l + l1) * l + l2]
    }

    pub fn labeled_counts_flat(&self) -> &[usize] {
        &self.labeled_counts
    }

    /// Column sums `N_m` of the feature matrix.
    pub fn feature_sums(&self) -> &[usize] {
        &self.feature_sums
    }
}

pub fn summarize(graph: &AttributedGraph) -> ShortestPathSummary {
    let n = graph.n();
    let l = graph.num_labels();
    let paths = floyd_warshall(graph);
    let labels: Vec<usize> = (0..n).map(|v| graph.label(v)).collect();
    let mut length_counts = vec![0usize; n];
    let mut labeled_counts = vec![0usize; n * l * l];
    for u in 0..n {
        for v in 0..n {
            let s = paths.dist(u, v);
            length_counts[s] += 1;
            labeled_counts[(s * l + labels[u]) * l + labels[v]] += 1;
        }
    }
    let feature_sums = (0..graph.num_features())
        .map(|m| (0..n).filter(|&v| graph.feature(v, m)).count())
        .collect();
    ShortestPathSummary { n, num_labels: l, paths, length_counts, labeled_counts, feature_sums }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_label(n: usize) -> Vec<Vec<u8>> {
        vec![vec![1]; n]
    }

    fn path(n: usize) -> AttributedGraph {
        let edges: Vec<_> = (1..n).map(|v| (v - 1, v)).collect();
        AttributedGraph::from_edges(n, false, &edges, &one_label(n), 1).unwrap()
    }

    #[test]
    fn smallest_graphs() {
        assert!(build_graph(&[vec![0]], &[vec![1]], false, 1).is_ok());
        let k2 = build_graph(&[vec![0, 1], vec![1, 0]], &[vec![1, 0], vec![0, 1]], false, 2).unwrap();
        assert_eq!(k2.label(1), 1);
        let err = build_graph(&[vec![0, 0], vec![0, 0]], &one_label(2), false, 1);
        assert!(matches!(err, Err(Error::Disconnected)));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            build_graph(&[vec![0, 1], vec![1]], &one_label(2), false, 1),
            Err(Error::NonSquare { .. })
        ));
        assert!(matches!(
            build_graph(&[vec![1, 1], vec![1, 0]], &one_label(2), false, 1),
            Err(Error::SelfLoop(0))
        ));
        assert!(matches!(
            build_graph(&[vec![0, 1], vec![0, 0]], &one_label(2), false, 1),
            Err(Error::AsymmetricUndirected(0, 1))
        ));
        assert!(matches!(
            build_graph(&[vec![0, 1], vec![1, 0]], &[vec![1, 1], vec![1, 0]], false, 2),
            Err(Error::BadOneHot(0))
        ));
        assert!(matches!(
            build_graph(&[vec![0, 1], vec![1, 0]], &[vec![0, 0], vec![1, 0]], false, 2),
            Err(Error::BadOneHot(0))
        ));
    }

    #[test]
    fn path_and_triangle_distances() {
        let p3 = path(3);
        let sp = floyd_warshall(&p3);
        assert_eq!(sp.dist(0, 2), 2);
        assert!(sp.on_path(0, 2, 1));
        let k3 = AttributedGraph::from_edges(3, false, &[(0, 1), (1, 2), (0, 2)], &one_label(3), 1).unwrap();
        let sp = floyd_warshall(&k3);
        for u in 0..3 {
            for v in 0..3 {
                assert_eq!(sp.dist(u, v), usize::from(u != v));
            }
        }
        assert!(!sp.on_path(0, 1, 2));
        // diagonal convention: only v lies on the trivial path v -> v
        for v in 0..3 {
            for w in 0..3 {
                assert_eq!(sp.on_path(v, v, w), w == v);
            }
        }
    }

    #[test]
    fn directed_connectivity() {
        assert!(is_connected(2, &[false, true, true, false]));
        assert!(!is_connected(2, &[false, true, false, false]));
    }

    #[test]
    fn summary_counts() {
        let k2 = path(2);
        assert_eq!(k2.summarize().length_counts(), &[2, 2]);
        assert_eq!(path(4).summarize().length_counts(), &[4, 6, 4, 2]);

        let k2ab = build_graph(&[vec![0, 1], vec![1, 0]], &[vec![1, 0], vec![0, 1]], false, 2).unwrap();
        let s = k2ab.summarize();
        let mut expected = vec![0; 2 * 2 * 2];
        expected[(1 * 2 + 0) * 2 + 1] = 1;
        expected[(1 * 2 + 1) * 2 + 0] = 1;
        expected[0] = 1;
        expected[3] = 1;
        assert_eq!(s.labeled_counts_flat(), expected.as_slice());
        assert_eq!(s.feature_sums(), &[1, 1]);
    }
}
