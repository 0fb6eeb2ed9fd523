//! Shortest-path graph kernels, the binary-feature kernel, and their
//! weighted combination.
//!
//! All graph kernels are evaluated from precomputed
//! [`ShortestPathSummary`] values, so a Gram matrix over `t` graphs costs
//! `t` Floyd–Warshall runs plus `t^2` short dot products.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, ShortestPathSummary};

/// Box used for every kernel hyperparameter during training.
pub const HYPER_LOWER: f64 = 0.01;
pub const HYPER_UPPER: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelVariant {
    Ssp,
    Sp,
    Essp,
    Esp,
}

impl KernelVariant {
    pub const ALL: [KernelVariant; 4] = [KernelVariant::Ssp, KernelVariant::Sp, KernelVariant::Essp, KernelVariant::Esp];

    pub fn is_exponential(self) -> bool {
        matches!(self, KernelVariant::Essp | KernelVariant::Esp)
    }

    /// Whether path endpoints must carry matching labels.
    pub fn is_labeled(self) -> bool {
        matches!(self, KernelVariant::Sp | KernelVariant::Esp)
    }
}

impl fmt::Display for KernelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            KernelVariant::Ssp => "ssp",
            KernelVariant::Sp => "sp",
            KernelVariant::Essp => "essp",
            KernelVariant::Esp => "esp",
        };
        f.write_str(s)
    }
}

impl FromStr for KernelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ssp" => Ok(KernelVariant::Ssp),
            "sp" => Ok(KernelVariant::Sp),
            "essp" => Ok(KernelVariant::Essp),
            "esp" => Ok(KernelVariant::Esp),
            other => Err(Error::Parse(format!("unknown kernel variant `{other}`"))),
        }
    }
}

/// Weights of the combined kernel `alpha * k_G + beta * k_F`, plus the
/// variance divisor of the exponential graph kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelHyperparams {
    pub alpha: f64,
    pub beta: f64,
    #[serde(default)]
    pub sigma_k_sq: Option<f64>,
}

impl KernelHyperparams {
    pub fn new(alpha: f64, beta: f64) -> Self {
        Self { alpha, beta, sigma_k_sq: None }
    }

    pub fn with_variance(alpha: f64, beta: f64, sigma_k_sq: f64) -> Self {
        Self { alpha, beta, sigma_k_sq: Some(sigma_k_sq) }
    }

    /// All-ones initialization used as the first training start.
    pub fn ones(variant: KernelVariant) -> Self {
        if variant.is_exponential() {
            Self::with_variance(1.0, 1.0, 1.0)
        } else {
            Self::new(1.0, 1.0)
        }
    }

    pub fn in_box(&self) -> bool {
        let inside = |x: f64| (HYPER_LOWER..=HYPER_UPPER).contains(&x);
        inside(self.alpha) && inside(self.beta) && self.sigma_k_sq.is_none_or(inside)
    }

    fn variance(&self, variant: KernelVariant) -> Result<f64> {
        if variant.is_exponential() {
            self.sigma_k_sq.ok_or(Error::MissingVariance)
        } else {
            Ok(1.0)
        }
    }
}

fn check_labels(a: &ShortestPathSummary, b: &ShortestPathSummary) -> Result<()> {
    if a.num_labels() != b.num_labels() {
        return Err(Error::DimensionMismatch(format!(
            "label counts differ: {} vs {}",
            a.num_labels(),
            b.num_labels()
        )));
    }
    Ok(())
}

/// The linear SSP or SP value (before any exponential transform).
pub fn base_graph_kernel(a: &ShortestPathSummary, b: &ShortestPathSummary, labeled: bool) -> Result<f64> {
    let (n1, n2) = (a.n() as f64, b.n() as f64);
    let norm = n1 * n1 * n2 * n2;
    let smax = a.n().min(b.n());
    let raw: usize = if labeled {
        check_labels(a, b)?;
        let l = a.num_labels();
        let len = smax * l * l;
        a.labeled_counts_flat()[..len].iter().zip(&b.labeled_counts_flat()[..len]).map(|(x, y)| x * y).sum()
    } else {
        a.length_counts()[..smax].iter().zip(&b.length_counts()[..smax]).map(|(x, y)| x * y).sum()
    };
    Ok(raw as f64 / norm)
}

/// Graph-level kernel for any variant; exponential variants return
/// `exp(k) / sigma_k^2`.
pub fn k_graph(
    a: &ShortestPathSummary,
    b: &ShortestPathSummary,
    variant: KernelVariant,
    hyper: &KernelHyperparams,
) -> Result<f64> {
    let variance = hyper.variance(variant)?;
    let base = base_graph_kernel(a, b, variant.is_labeled())?;
    Ok(graph_transform(base, variant, variance))
}

pub(crate) fn graph_transform(base: f64, variant: KernelVariant, variance: f64) -> f64 {
    if variant.is_exponential() {
        base.exp() / variance
    } else {
        base
    }
}

/// Feature kernel from column sums: `sum_m N_m(F1) N_m(F2) / (n1 n2 M)`.
pub fn feature_kernel_from_sums(n1: usize, sums1: &[usize], n2: usize, sums2: &[usize]) -> Result<f64> {
    if sums1.len() != sums2.len() {
        return Err(Error::DimensionMismatch(format!(
            "feature widths differ: {} vs {}",
            sums1.len(),
            sums2.len()
        )));
    }
    let m = sums1.len();
    if m == 0 {
        return Ok(0.0);
    }
    let dot: usize = sums1.iter().zip(sums2).map(|(x, y)| x * y).sum();
    Ok(dot as f64 / (n1 * n2 * m) as f64)
}

/// Permutation-invariant kernel over two binary feature matrices.
pub fn k_feature(f1: &[Vec<u8>], f2: &[Vec<u8>]) -> Result<f64> {
    let sums = |f: &[Vec<u8>]| -> Result<Vec<usize>> {
        let m = f.first().map_or(0, Vec::len);
        let mut out = vec![0usize; m];
        for row in f {
            if row.len() != m {
                return Err(Error::DimensionMismatch("ragged feature matrix".into()));
            }
            for (acc, &x) in out.iter_mut().zip(row) {
                *acc += usize::from(x);
            }
        }
        Ok(out)
    };
    if f1.is_empty() || f2.is_empty() {
        return Err(Error::DimensionMismatch("empty feature matrix".into()));
    }
    feature_kernel_from_sums(f1.len(), &sums(f1)?, f2.len(), &sums(f2)?)
}

/// Combined kernel on summaries.
pub fn k_summaries(
    a: &ShortestPathSummary,
    b: &ShortestPathSummary,
    variant: KernelVariant,
    hyper: &KernelHyperparams,
) -> Result<f64> {
    let kg = k_graph(a, b, variant, hyper)?;
    let kf = feature_kernel_from_sums(a.n(), a.feature_sums(), b.n(), b.feature_sums())?;
    Ok(hyper.alpha * kg + hyper.beta * kf)
}

pub fn k_combined(
    x1: &AttributedGraph,
    x2: &AttributedGraph,
    variant: KernelVariant,
    hyper: &KernelHyperparams,
) -> Result<f64> {
    k_summaries(&x1.summarize(), &x2.summarize(), variant, hyper)
}

pub fn gram_from_summaries(
    points: &[ShortestPathSummary],
    variant: KernelVariant,
    hyper: &KernelHyperparams,
) -> Result<DMatrix<f64>> {
    let t = points.len();
    let mut k = DMatrix::zeros(t, t);
    for i in 0..t {
        for j in i..t {
            let v = k_summaries(&points[i], &points[j], variant, hyper)?;
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    Ok(k)
}

pub fn gram(points: &[AttributedGraph], variant: KernelVariant, hyper: &KernelHyperparams) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::DimensionMismatch("gram matrix needs at least one point".into()));
    }
    let summaries: Vec<_> = points.iter().map(AttributedGraph::summarize).collect();
    gram_from_summaries(&summaries, variant, hyper)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unlabeled(n: usize, edges: &[(usize, usize)]) -> AttributedGraph {
        AttributedGraph::from_edges(n, false, edges, &vec![vec![1]; n], 1).unwrap()
    }

    #[test]
    fn ssp_values() {
        let one = unlabeled(1, &[]);
        let k2 = unlabeled(2, &[(0, 1)]);
        let p3 = unlabeled(3, &[(0, 1), (1, 2)]);
        let k3 = unlabeled(3, &[(0, 1), (1, 2), (0, 2)]);
        let h = KernelHyperparams::new(1.0, 0.0);
        let ssp = |a: &AttributedGraph, b: &AttributedGraph| k_graph(&a.summarize(), &b.summarize(), KernelVariant::Ssp, &h).unwrap();
        assert_eq!(ssp(&one, &one), 1.0);
        assert_eq!(ssp(&k2, &k2), 0.5);
        assert!((ssp(&p3, &k3) - 33.0 / 81.0).abs() < 1e-15);
        let essp = k_graph(&k2.summarize(), &k2.summarize(), KernelVariant::Essp, &KernelHyperparams::with_variance(1.0, 0.0, 1.0))
            .unwrap();
        assert!((essp - 0.5f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn sp_counts_label_matches() {
        let aa = AttributedGraph::from_edges(2, false, &[(0, 1)], &[vec![1, 0], vec![1, 0]], 2).unwrap();
        let ab = AttributedGraph::from_edges(2, false, &[(0, 1)], &[vec![1, 0], vec![0, 1]], 2).unwrap();
        let h = KernelHyperparams::new(1.0, 0.0);
        assert_eq!(k_graph(&aa.summarize(), &ab.summarize(), KernelVariant::Sp, &h).unwrap(), 0.125);
    }

    #[test]
    fn missing_variance_is_an_error() {
        let k2 = unlabeled(2, &[(0, 1)]);
        let s = k2.summarize();
        assert!(matches!(
            k_graph(&s, &s, KernelVariant::Esp, &KernelHyperparams::new(1.0, 1.0)),
            Err(Error::MissingVariance)
        ));
    }

    #[test]
    fn feature_kernel_values() {
        assert_eq!(k_feature(&[vec![0, 0], vec![0, 0]], &[vec![1, 1]]).unwrap(), 0.0);
        assert_eq!(k_feature(&[vec![1, 0], vec![0, 1]], &[vec![1, 0]]).unwrap(), 0.25);
        assert_eq!(k_feature(&[vec![1, 0]], &[vec![1, 0]]).unwrap(), 0.5);
        assert!(matches!(k_feature(&[vec![1, 0]], &[vec![1]]), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn combined_is_linear_in_weights() {
        let f = vec![vec![1, 0], vec![0, 1]];
        let k2 = AttributedGraph::from_edges(2, false, &[(0, 1)], &f, 2).unwrap();
        let v = k_combined(&k2, &k2, KernelVariant::Ssp, &KernelHyperparams::new(2.0, 3.0)).unwrap();
        assert!((v - 1.75).abs() < 1e-15);
        let g = k_combined(&k2, &k2, KernelVariant::Ssp, &KernelHyperparams::new(1.0, 0.0)).unwrap();
        assert_eq!(g, 0.5);
        let low = k_combined(&k2, &k2, KernelVariant::Ssp, &KernelHyperparams::new(0.01, 0.01)).unwrap();
        assert!((low - 0.01 * (0.5 + 0.25)).abs() < 1e-15);
    }

    #[test]
    fn gram_shapes() {
        let k2 = unlabeled(2, &[(0, 1)]);
        let h = KernelHyperparams::new(1.0, 1.0);
        let g1 = gram(&[k2.clone()], KernelVariant::Ssp, &h).unwrap();
        assert_eq!(g1.shape(), (1, 1));
        let g2 = gram(&[k2.clone(), k2], KernelVariant::Ssp, &h).unwrap();
        assert!(g2.iter().all(|&x| x == g2[(0, 0)]));
        assert!(gram(&[], KernelVariant::Ssp, &h).is_err());
    }

    #[test]
    fn variant_parsing() {
        for v in KernelVariant::ALL {
            assert_eq!(v.to_string().parse::<KernelVariant>().unwrap(), v);
        }
        assert!("wl".parse::<KernelVariant>().is_err());
    }
}
