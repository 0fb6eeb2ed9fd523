//! Shared fixtures for the criterion benches.

use graphbo_core::{sample_feasible, AttributedGraph, DomainSpec, GpModel, KernelHyperparams, KernelVariant};

/// `count` random graphs from an undirected labeled domain on `n` nodes.
pub fn random_graphs(n: usize, labels: usize, count: usize, seed: u64) -> Vec<AttributedGraph> {
    let domain = DomainSpec::fixed(n, false, labels, labels);
    (0..count as u64).map(|i| sample_feasible(&domain, seed.wrapping_mul(7919).wrapping_add(i)).unwrap()).collect()
}

/// A model conditioned on `points` random graphs with a smooth synthetic target.
pub fn fitted_model(domain: &DomainSpec, variant: KernelVariant, points: usize, seed: u64) -> GpModel {
    let xs: Vec<AttributedGraph> =
        (0..points as u64).map(|i| sample_feasible(domain, seed * 1009 + i).unwrap()).collect();
    let ys = xs.iter().map(|g| g.edges().len() as f64 / g.n() as f64 - 1.0).collect();
    let hyper = if variant.is_exponential() {
        KernelHyperparams::with_variance(1.0, 0.5, 1.0)
    } else {
        KernelHyperparams::new(1.0, 0.5)
    };
    GpModel::condition(xs, ys, variant, hyper).unwrap()
}
