//! Exhaustive enumeration of small graph domains and seeded feasible sampling.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::graph::{is_connected, AttributedGraph};

/// Default cap on adjacency plus feature bits for exhaustive enumeration.
pub const DEFAULT_ENUMERATION_CAP: usize = 24;

/// Default number of rejection-sampling attempts.
pub const DEFAULT_SAMPLING_ATTEMPTS: usize = 100_000;

/// Free adjacency entries of an `n`-node graph in lexicographic order:
/// `u < v` pairs when undirected, every off-diagonal arc otherwise.
pub fn adjacency_pairs(n: usize, directed: bool) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if (directed && u != v) || (!directed && u < v) {
                pairs.push((u, v));
            }
        }
    }
    pairs
}

/// All feature rows whose first `num_labels` bits are one-hot, in
/// lexicographic order of the bit vector.
pub fn feature_rows(num_labels: usize, num_features: usize) -> Vec<Vec<bool>> {
    (0u64..(1u64 << num_features))
        .map(|code| (0..num_features).map(|m| (code >> (num_features - 1 - m)) & 1 == 1).collect::<Vec<_>>())
        .filter(|row| row[..num_labels].iter().filter(|&&b| b).count() == 1)
        .collect()
}

/// Number of free structural bits of the largest graph in the domain.
pub fn domain_bits(domain: &DomainSpec) -> usize {
    let n = domain.max_nodes();
    adjacency_pairs(n, domain.directed).len() + n * domain.num_features
}

/// Streams every connected graph of the domain exactly once, ordered by
/// size, then adjacency bits, then feature bits (lexicographically).
pub struct DomainEnumerator<'a> {
    domain: &'a DomainSpec,
    rows: Vec<Vec<bool>>,
    size: usize,
    pairs: Vec<(usize, usize)>,
    next_code: u64,
    adjacency: Option<Vec<bool>>,
    odometer: Vec<usize>,
}

pub fn enumerate_domain(domain: &DomainSpec) -> Result<DomainEnumerator<'_>> {
    enumerate_domain_with_cap(domain, DEFAULT_ENUMERATION_CAP)
}

pub fn enumerate_domain_with_cap(domain: &DomainSpec, cap: usize) -> Result<DomainEnumerator<'_>> {
    domain.validate()?;
    let bits = domain_bits(domain);
    if bits > cap {
        return Err(Error::DomainTooLarge { bits, cap });
    }
    let size = domain.size.min();
    Ok(DomainEnumerator {
        domain,
        rows: feature_rows(domain.num_labels, domain.num_features),
        size,
        pairs: adjacency_pairs(size, domain.directed),
        next_code: 0,
        adjacency: None,
        odometer: Vec::new(),
    })
}

impl DomainEnumerator<'_> {
    fn advance_adjacency(&mut self) -> bool {
        loop {
            if self.next_code >= 1u64 << self.pairs.len() {
                if self.size >= self.domain.size.max() {
                    return false;
                }
                self.size += 1;
                self.pairs = adjacency_pairs(self.size, self.domain.directed);
                self.next_code = 0;
                continue;
            }
            let code = self.next_code;
            self.next_code += 1;
            let n = self.size;
            let k = self.pairs.len();
            let mut adj = vec![false; n * n];
            for (i, &(u, v)) in self.pairs.iter().enumerate() {
                if (code >> (k - 1 - i)) & 1 == 1 {
                    adj[u * n + v] = true;
                    if !self.domain.directed {
                        adj[v * n + u] = true;
                    }
                }
            }
            if is_connected(n, &adj) {
                self.adjacency = Some(adj);
                self.odometer = vec![0; n];
                return true;
            }
        }
    }

    fn current(&self) -> AttributedGraph {
        let m = self.domain.num_features;
        let features = self.odometer.iter().flat_map(|&r| self.rows[r].iter().copied()).collect();
        let adj = self.adjacency.clone().expect("current adjacency");
        AttributedGraph::from_trusted(self.size, self.domain.directed, adj, m, self.domain.num_labels, features)
    }

    /// Steps the feature odometer; returns false when it wraps around.
    fn step_features(&mut self) -> bool {
        for slot in self.odometer.iter_mut().rev() {
            *slot += 1;
            if *slot < self.rows.len() {
                return true;
            }
            *slot = 0;
        }
        false
    }
}

impl Iterator for DomainEnumerator<'_> {
    type Item = AttributedGraph;

    fn next(&mut self) -> Option<AttributedGraph> {
        loop {
            if self.adjacency.is_none() && !self.advance_adjacency() {
                return None;
            }
            let graph = self.current();
            if !self.step_features() {
                self.adjacency = None;
            }
            if self.domain.admits(&graph) {
                return Some(graph);
            }
        }
    }
}

/// Draws one random connected graph satisfying the domain, rejecting
/// candidates until one passes or the attempt budget runs out.
pub fn sample_feasible_with<R: Rng>(domain: &DomainSpec, rng: &mut R, max_attempts: usize) -> Result<AttributedGraph> {
    domain.validate()?;
    let l = domain.num_labels;
    let m = domain.num_features;
    for _ in 0..max_attempts {
        let n = rng.gen_range(domain.size.min()..=domain.size.max());
        let mut adj = vec![false; n * n];
        if domain.directed {
            let p: f64 = rng.gen_range(0.3..1.0);
            for u in 0..n {
                for v in 0..n {
                    if u != v && rng.gen_bool(p) {
                        adj[u * n + v] = true;
                    }
                }
            }
            if !is_connected(n, &adj) {
                continue;
            }
        } else {
            // random spanning tree by attachment, then extra edges
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(rng);
            for i in 1..n {
                let parent = order[rng.gen_range(0..i)];
                let child = order[i];
                adj[parent * n + child] = true;
                adj[child * n + parent] = true;
            }
            let q: f64 = rng.gen_range(0.0..0.6);
            for u in 0..n {
                for v in (u + 1)..n {
                    if !adj[u * n + v] && rng.gen_bool(q) {
                        adj[u * n + v] = true;
                        adj[v * n + u] = true;
                    }
                }
            }
        }
        let mut features = vec![false; n * m];
        for v in 0..n {
            features[v * m + rng.gen_range(0..l)] = true;
            for c in l..m {
                features[v * m + c] = rng.gen_bool(0.5);
            }
        }
        let graph = AttributedGraph::from_trusted(n, domain.directed, adj, m, l, features);
        if domain.admits(&graph) {
            return Ok(graph);
        }
    }
    Err(Error::SamplingExhausted(max_attempts))
}

/// Deterministic single sample for a given seed.
pub fn sample_feasible(domain: &DomainSpec, seed: u64) -> Result<AttributedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_feasible_with(domain, &mut rng, DEFAULT_SAMPLING_ATTEMPTS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{CountBound, Sense, StructVar, StructuralRow};
    use std::collections::HashSet;

    #[test]
    fn connected_counts() {
        let count = |n, directed| enumerate_domain(&DomainSpec::fixed(n, directed, 1, 1)).unwrap().count();
        assert_eq!(count(3, false), 4);
        assert_eq!(count(4, false), 38);
        assert_eq!(count(2, true), 1);
        assert_eq!(count(1, false), 1);
    }

    #[test]
    fn labels_multiply_and_order_is_lexicographic() {
        let domain = DomainSpec::fixed(2, false, 2, 2);
        let graphs: Vec<_> = enumerate_domain(&domain).unwrap().collect();
        assert_eq!(graphs.len(), 4);
        let keys: Vec<Vec<bool>> = graphs.iter().map(|g| g.features_flat().to_vec()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        assert_eq!(keys.iter().collect::<HashSet<_>>().len(), 4);
    }

    #[test]
    fn guard_and_bounded_sizes() {
        let big = DomainSpec::fixed(8, false, 1, 1);
        assert!(matches!(enumerate_domain(&big), Err(Error::DomainTooLarge { .. })));
        let bounded = DomainSpec::bounded(1, 3, true, 1, 1);
        assert_eq!(enumerate_domain(&bounded).unwrap().count(), 1 + 1 + 18);
    }

    #[test]
    fn constraints_filter_enumeration() {
        let capped = DomainSpec::fixed(3, false, 1, 1).with_degree_caps(vec![1]);
        assert_eq!(enumerate_domain(&capped).unwrap().count(), 0);
        let one_b = DomainSpec::fixed(2, false, 2, 2)
            .with_label_counts(vec![CountBound { min: 0, max: 2 }, CountBound { min: 1, max: 1 }]);
        assert_eq!(enumerate_domain(&one_b).unwrap().count(), 2);
        let no_edge = StructuralRow { terms: vec![(StructVar::Edge(0, 2), 1.0)], sense: Sense::Eq, rhs: 0.0 };
        let d = DomainSpec::fixed(3, false, 1, 1).with_row(no_edge);
        assert_eq!(enumerate_domain(&d).unwrap().count(), 1);
    }

    #[test]
    fn sampling_is_deterministic_and_feasible() {
        let single = DomainSpec::fixed(1, false, 1, 1);
        assert_eq!(sample_feasible(&single, 3).unwrap().n(), 1);
        let domain = DomainSpec::fixed(4, false, 1, 1);
        assert_eq!(sample_feasible(&domain, 7).unwrap(), sample_feasible(&domain, 7).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let g = sample_feasible_with(&domain, &mut rng, 100).unwrap();
            assert!(is_connected(g.n(), g.adjacency_flat()));
            assert!(domain.admits(&g));
        }
        let impossible = DomainSpec::fixed(3, false, 1, 1).with_degree_caps(vec![1]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(sample_feasible_with(&impossible, &mut rng, 50), Err(Error::SamplingExhausted(50))));
    }
}
