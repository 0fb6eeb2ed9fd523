//! Gaussian-process regression over attributed graphs.
//!
//! The covariance is the combined graph/feature kernel with a fixed noise
//! variance of `1e-6`. Hyperparameters are trained by maximizing the log
//! marginal likelihood inside the box `[0.01, 100]` using multi-start
//! projected gradient ascent on log-parameters.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{AttributedGraph, ShortestPathSummary};
use crate::io::{DatasetEntry, GraphRecord};
use crate::kernels::{
    base_graph_kernel, feature_kernel_from_sums, gram_from_summaries, graph_transform, k_summaries, KernelHyperparams,
    KernelVariant, HYPER_LOWER, HYPER_UPPER,
};

pub const NOISE_VAR: f64 = 1e-6;
pub const RETRY_JITTER: f64 = 1e-8;

const LOG_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone)]
pub struct GpModel {
    points: Vec<AttributedGraph>,
    summaries: Vec<ShortestPathSummary>,
    y: DVector<f64>,
    variant: KernelVariant,
    hyper: KernelHyperparams,
    noise_var: f64,
    jitter: f64,
    chol: Option<Cholesky<f64, Dyn>>,
    weights: DVector<f64>,
}

impl std::fmt::Debug for GpModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GpModel")
            .field("t", &self.points.len())
            .field("variant", &self.variant)
            .field("hyper", &self.hyper)
            .field("noise_var", &self.noise_var)
            .field("jitter", &self.jitter)
            .finish()
    }
}

/// Factors `K + noise * I`, retrying once with extra jitter.
fn factor(mut k: DMatrix<f64>, noise: f64) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let t = k.nrows();
    for i in 0..t {
        k[(i, i)] += noise;
    }
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    for i in 0..t {
        k[(i, i)] += RETRY_JITTER;
    }
    Cholesky::new(k).map(|c| (c, RETRY_JITTER)).ok_or(Error::FactorizationFailure)
}

fn lml_from_factor(chol: &Cholesky<f64, Dyn>, y: &DVector<f64>) -> f64 {
    let w = chol.solve(y);
    let log_det_half: f64 = chol.l_dirty().diagonal().iter().map(|d| d.ln()).sum();
    -0.5 * y.dot(&w) - log_det_half - 0.5 * y.len() as f64 * LOG_2PI
}

fn check_compatible(points: &[AttributedGraph]) -> Result<()> {
    if let Some(first) = points.first() {
        for p in points {
            if p.num_labels() != first.num_labels()
                || p.num_features() != first.num_features()
                || p.directed() != first.directed()
            {
                return Err(Error::DimensionMismatch("training graphs disagree on layout".into()));
            }
        }
    }
    Ok(())
}

impl GpModel {
    /// Conditions a GP on data with fixed hyperparameters. An empty training
    /// set gives the prior.
    pub fn condition(
        points: Vec<AttributedGraph>,
        y: Vec<f64>,
        variant: KernelVariant,
        hyper: KernelHyperparams,
    ) -> Result<Self> {
        if points.len() != y.len() {
            return Err(Error::DimensionMismatch(format!("{} graphs but {} targets", points.len(), y.len())));
        }
        if variant.is_exponential() && hyper.sigma_k_sq.is_none() {
            return Err(Error::MissingVariance);
        }
        check_compatible(&points)?;
        let summaries: Vec<_> = points.iter().map(AttributedGraph::summarize).collect();
        let y = DVector::from_vec(y);
        if points.is_empty() {
            return Ok(Self {
                points,
                summaries,
                y,
                variant,
                hyper,
                noise_var: NOISE_VAR,
                jitter: 0.0,
                chol: None,
                weights: DVector::zeros(0),
            });
        }
        let k = gram_from_summaries(&summaries, variant, &hyper)?;
        let (chol, jitter) = factor(k, NOISE_VAR)?;
        let weights = chol.solve(&y);
        Ok(Self { points, summaries, y, variant, hyper, noise_var: NOISE_VAR, jitter, chol: Some(chol), weights })
    }

    pub fn prior(variant: KernelVariant, hyper: KernelHyperparams) -> Result<Self> {
        Self::condition(Vec::new(), Vec::new(), variant, hyper)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[AttributedGraph] {
        &self.points
    }

    pub fn summaries(&self) -> &[ShortestPathSummary] {
        &self.summaries
    }

    pub fn targets(&self) -> &DVector<f64> {
        &self.y
    }

    pub fn variant(&self) -> KernelVariant {
        self.variant
    }

    pub fn hyper(&self) -> &KernelHyperparams {
        &self.hyper
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    /// Diagonal term actually added to the Gram matrix (noise plus any retry jitter).
    pub fn diagonal_shift(&self) -> f64 {
        self.noise_var + self.jitter
    }

    /// `(K + shift * I)^{-1} y`.
    pub fn weights(&self) -> &DVector<f64> {
        &self.weights
    }

    pub fn cholesky_factor(&self) -> Option<DMatrix<f64>> {
        self.chol.as_ref().map(|c| c.l())
    }

    /// Explicit `(K + shift * I)^{-1}` assembled from the triangular factor.
    pub fn inverse_covariance(&self) -> DMatrix<f64> {
        match &self.chol {
            None => DMatrix::zeros(0, 0),
            Some(c) => {
                let t = self.len();
                let l = c.l();
                let linv = l
                    .solve_lower_triangular(&DMatrix::identity(t, t))
                    .expect("cholesky factor has a positive diagonal");
                let q = linv.transpose() * linv;
                (&q + q.transpose()) * 0.5
            }
        }
    }

    /// `K + shift * I` recomputed from the kernel.
    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let mut k = gram_from_summaries(&self.summaries, self.variant, &self.hyper)?;
        for i in 0..k.nrows() {
            k[(i, i)] += self.diagonal_shift();
        }
        Ok(k)
    }

    pub fn is_compatible(&self, x: &AttributedGraph) -> bool {
        self.points.first().is_none_or(|p| {
            p.num_labels() == x.num_labels() && p.num_features() == x.num_features() && p.directed() == x.directed()
        })
    }

    pub fn kernel(&self, a: &ShortestPathSummary, b: &ShortestPathSummary) -> Result<f64> {
        k_summaries(a, b, self.variant, &self.hyper)
    }

    pub fn cross_kernel(&self, x: &ShortestPathSummary) -> Result<DVector<f64>> {
        let values = self.summaries.iter().map(|s| self.kernel(x, s)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(values))
    }

    /// Posterior mean and variance at a summarized point.
    pub fn posterior_summary(&self, x: &ShortestPathSummary) -> Result<(f64, f64)> {
        let kxx = self.kernel(x, x)?;
        let Some(chol) = &self.chol else {
            return Ok((0.0, kxx));
        };
        let kx = self.cross_kernel(x)?;
        let mu = kx.dot(&self.weights);
        let v = chol.l_dirty().solve_lower_triangular(&kx).expect("positive diagonal");
        let var = (kxx - v.dot(&v)).max(0.0);
        Ok((mu, var))
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        match &self.chol {
            None => 0.0,
            Some(c) => lml_from_factor(c, &self.y),
        }
    }

    pub fn to_file(&self) -> GpModelFile {
        GpModelFile {
            variant: self.variant,
            hyper: self.hyper,
            noise_var: self.noise_var,
            training: self
                .points
                .iter()
                .zip(self.y.iter())
                .map(|(g, &y)| DatasetEntry { graph: GraphRecord::from(g), y })
                .collect(),
            weights: self.weights.iter().copied().collect(),
        }
    }

    /// Rebuilds a dumped model and checks the stored weights against a
    /// fresh factorization.
    pub fn from_file(file: &GpModelFile) -> Result<Self> {
        let points =
            file.training.iter().map(|e| AttributedGraph::try_from(&e.graph)).collect::<Result<Vec<_>>>()?;
        let y = file.training.iter().map(|e| e.y).collect();
        let model = Self::condition(points, y, file.variant, file.hyper)?;
        if file.weights.len() != model.weights.len() {
            return Err(Error::Parse("stored weights do not match the training set".into()));
        }
        for (a, b) in file.weights.iter().zip(model.weights.iter()) {
            if (a - b).abs() > 1e-6 * (1.0 + b.abs()) {
                return Err(Error::Parse("stored weights do not match the training set".into()));
            }
        }
        Ok(model)
    }
}

/// Serialized form of a conditioned GP.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GpModelFile {
    pub variant: KernelVariant,
    pub hyper: KernelHyperparams,
    pub noise_var: f64,
    pub training: Vec<DatasetEntry>,
    pub weights: Vec<f64>,
}

pub fn log_marginal_likelihood(
    points: &[AttributedGraph],
    y: &[f64],
    variant: KernelVariant,
    hyper: &KernelHyperparams,
) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::TooFewPoints { needed: 1, got: 0 });
    }
    Ok(GpModel::condition(points.to_vec(), y.to_vec(), variant, *hyper)?.log_marginal_likelihood())
}

pub fn posterior(model: &GpModel, x: &AttributedGraph) -> Result<(f64, f64)> {
    model.posterior_summary(&x.summarize())
}

pub fn lcb(model: &GpModel, x: &AttributedGraph, beta_sqrt: f64) -> Result<f64> {
    let (mu, var) = posterior(model, x)?;
    Ok(mu - beta_sqrt * var.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { restarts: 8, seed: 0, max_iters: 200 }
    }
}

/// Precomputed pieces of the Gram matrix: `K = alpha * h(B) + beta * F`.
struct GramParts {
    base: DMatrix<f64>,
    feature: DMatrix<f64>,
    y: DVector<f64>,
    variant: KernelVariant,
}

impl GramParts {
    fn new(summaries: &[ShortestPathSummary], y: &[f64], variant: KernelVariant) -> Result<Self> {
        let t = summaries.len();
        let mut base = DMatrix::zeros(t, t);
        let mut feature = DMatrix::zeros(t, t);
        for i in 0..t {
            for j in i..t {
                let (a, b) = (&summaries[i], &summaries[j]);
                let g = base_graph_kernel(a, b, variant.is_labeled())?;
                let f = feature_kernel_from_sums(a.n(), a.feature_sums(), b.n(), b.feature_sums())?;
                base[(i, j)] = g;
                base[(j, i)] = g;
                feature[(i, j)] = f;
                feature[(j, i)] = f;
            }
        }
        Ok(Self { base, feature, y: DVector::from_column_slice(y), variant })
    }

    fn hyper(&self, log_params: &[f64]) -> KernelHyperparams {
        let p: Vec<f64> = log_params.iter().map(|x| x.exp()).collect();
        if self.variant.is_exponential() {
            KernelHyperparams::with_variance(p[0], p[1], p[2])
        } else {
            KernelHyperparams::new(p[0], p[1])
        }
    }

    fn lml(&self, log_params: &[f64]) -> f64 {
        let h = self.hyper(log_params);
        let variance = h.sigma_k_sq.unwrap_or(1.0);
        let graph = self.base.map(|b| graph_transform(b, self.variant, variance));
        let k = graph * h.alpha + &self.feature * h.beta;
        match factor(k, NOISE_VAR) {
            Ok((c, _)) => lml_from_factor(&c, &self.y),
            Err(_) => f64::NEG_INFINITY,
        }
    }
}

const FD_STEP: f64 = 1e-4;

fn project(x: &mut [f64]) {
    let (lo, hi) = (HYPER_LOWER.ln(), HYPER_UPPER.ln());
    for v in x.iter_mut() {
        *v = v.clamp(lo, hi);
    }
}

/// Central-difference gradient in log space, one-sided at the box faces.
fn gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    for i in 0..x.len() {
        let mut plus = x.to_vec();
        let mut minus = x.to_vec();
        plus[i] += FD_STEP;
        minus[i] -= FD_STEP;
        project(&mut plus);
        project(&mut minus);
        let width = plus[i] - minus[i];
        if width > 0.0 {
            g[i] = (f(&plus) - f(&minus)) / width;
        }
    }
    g
}

/// Projected gradient ascent with backtracking; returns `(x, f(x))`.
fn ascend(f: &dyn Fn(&[f64]) -> f64, start: Vec<f64>, max_iters: usize) -> (Vec<f64>, f64) {
    let mut x = start;
    project(&mut x);
    let mut fx = f(&x);
    let mut step = 1.0;
    for _ in 0..max_iters {
        let g = gradient(f, &x);
        let mut improved = false;
        let mut s = step;
        for _ in 0..40 {
            let mut cand: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + s * gi).collect();
            project(&mut cand);
            let moved: f64 = cand.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
            if moved < 1e-12 {
                break;
            }
            let predicted: f64 = cand.iter().zip(&x).zip(&g).map(|((c, xi), gi)| gi * (c - xi)).sum();
            let fc = f(&cand);
            if fc.is_finite() && fc >= fx + 1e-4 * predicted {
                let gain = fc - fx;
                x = cand;
                fx = fc;
                improved = gain > 1e-12 * (1.0 + fx.abs());
                step = s * 2.0;
                break;
            }
            s *= 0.5;
        }
        if !improved {
            break;
        }
    }
    (x, fx)
}

/// Trains kernel hyperparameters by maximizing the log marginal likelihood.
///
/// Restart 0 starts from all-ones; the others start log-uniformly in the
/// box. The best restart wins, ties going to the lowest index.
pub fn fit(
    points: &[AttributedGraph],
    y: &[f64],
    variant: KernelVariant,
    options: &FitOptions,
) -> Result<GpModel> {
    if points.len() < 2 {
        return Err(Error::TooFewPoints { needed: 2, got: points.len() });
    }
    if points.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} graphs but {} targets", points.len(), y.len())));
    }
    check_compatible(points)?;
    let summaries: Vec<_> = points.iter().map(AttributedGraph::summarize).collect();
    let parts = GramParts::new(&summaries, y, variant)?;
    let dim = if variant.is_exponential() { 3 } else { 2 };
    let objective = |x: &[f64]| parts.lml(x);
    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let (lo, hi) = (HYPER_LOWER.ln(), HYPER_UPPER.ln());
    let mut best: Option<(Vec<f64>, f64)> = None;
    for r in 0..options.restarts.max(1) {
        let start = if r == 0 { vec![0.0; dim] } else { (0..dim).map(|_| rng.gen_range(lo..hi)).collect() };
        let (x, fx) = ascend(&objective, start, options.max_iters);
        if best.as_ref().is_none_or(|(_, fb)| fx > *fb) {
            best = Some((x, fx));
        }
    }
    let (x, _) = best.expect("at least one restart");
    if !parts.lml(&x).is_finite() {
        return Err(Error::FactorizationFailure);
    }
    GpModel::condition(points.to_vec(), y.to_vec(), variant, parts.hyper(&x))
}
