//! Bayesian optimization over small attributed graphs.
//!
//! Graphs are compared through shortest-path kernels, modeled with a
//! Gaussian process, and the lower-confidence-bound acquisition is minimized
//! exactly over a constrained graph domain.

pub mod bo;
pub mod domain;
pub mod enumerate;
pub mod error;
pub mod gp;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod mip;
pub mod solve;

pub use bo::{random_baseline, run, synthetic_oracle, BoConfig, BoHistory, ObjectiveOracle};
pub use domain::{CountBound, DomainSpec, Sense, SizeSpec, StructVar, StructuralRow};
pub use enumerate::{enumerate_domain, sample_feasible};
pub use error::{Error, Result};
pub use gp::{fit, lcb, posterior, FitOptions, GpModel};
pub use graph::{build_graph, floyd_warshall, AttributedGraph, ShortestPathSummary};
pub use kernels::{gram, k_combined, k_feature, k_graph, KernelHyperparams, KernelVariant};
pub use mip::{encode_acquisition, MipModel};
pub use solve::{solve, Budget, SolveOptions, SolveResult, SolveStatus, Strategy};
