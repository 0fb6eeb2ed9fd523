//! Search-domain description: graph size, label/feature layout, and
//! problem-specific constraints over the structural variables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SizeSpec {
    Fixed(usize),
    Bounded { min: usize, max: usize },
}

impl SizeSpec {
    pub fn min(&self) -> usize {
        match *self {
            SizeSpec::Fixed(n) => n,
            SizeSpec::Bounded { min, .. } => min,
        }
    }

    pub fn max(&self) -> usize {
        match *self {
            SizeSpec::Fixed(n) => n,
            SizeSpec::Bounded { max, .. } => max,
        }
    }

    pub fn is_fixed(&self) -> bool {
        matches!(self, SizeSpec::Fixed(_))
    }

    pub fn contains(&self, n: usize) -> bool {
        (self.min()..=self.max()).contains(&n)
    }

    pub fn validate(&self) -> Result<()> {
        let (min, max) = (self.min(), self.max());
        if min == 0 || min > max {
            return Err(Error::InvalidSizeBounds { min, max });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Sense::Le => lhs <= rhs + tol,
            Sense::Ge => lhs >= rhs - tol,
            Sense::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

/// A structural decision variable: an adjacency entry or a feature bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructVar {
    Edge(usize, usize),
    Feature(usize, usize),
}

/// A user-supplied linear row over structural variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructuralRow {
    pub terms: Vec<(StructVar, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl StructuralRow {
    pub fn activity(&self, graph: &AttributedGraph) -> f64 {
        self.terms
            .iter()
            .map(|&(var, coef)| coef * f64::from(u8::from(struct_value(graph, var))))
            .sum()
    }
}

fn struct_value(graph: &AttributedGraph, var: StructVar) -> bool {
    let n = graph.n();
    match var {
        StructVar::Edge(u, v) => u < n && v < n && graph.has_edge(u, v),
        StructVar::Feature(v, m) => v < n && graph.feature(v, m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountBound {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub size: SizeSpec,
    pub directed: bool,
    pub num_labels: usize,
    pub num_features: usize,
    /// Maximum degree per label. For directed graphs the cap applies to the
    /// in-degree and the out-degree separately.
    #[serde(default)]
    pub degree_caps: Option<Vec<usize>>,
    /// Number of nodes allowed to carry each label.
    #[serde(default)]
    pub label_counts: Option<Vec<CountBound>>,
    #[serde(default)]
    pub linear_rows: Vec<StructuralRow>,
}

impl DomainSpec {
    /// Unconstrained domain of fixed size.
    pub fn fixed(n: usize, directed: bool, num_labels: usize, num_features: usize) -> Self {
        Self {
            size: SizeSpec::Fixed(n),
            directed,
            num_labels,
            num_features,
            degree_caps: None,
            label_counts: None,
            linear_rows: Vec::new(),
        }
    }

    pub fn bounded(min: usize, max: usize, directed: bool, num_labels: usize, num_features: usize) -> Self {
        Self { size: SizeSpec::Bounded { min, max }, ..Self::fixed(max, directed, num_labels, num_features) }
    }

    pub fn with_degree_caps(mut self, caps: Vec<usize>) -> Self {
        self.degree_caps = Some(caps);
        self
    }

    pub fn with_label_counts(mut self, counts: Vec<CountBound>) -> Self {
        self.label_counts = Some(counts);
        self
    }

    pub fn with_row(mut self, row: StructuralRow) -> Self {
        self.linear_rows.push(row);
        self
    }

    pub fn max_nodes(&self) -> usize {
        self.size.max()
    }

    pub fn validate(&self) -> Result<()> {
        self.size.validate()?;
        if self.num_labels == 0 || self.num_labels > self.num_features {
            return Err(Error::InvalidDomain(format!(
                "need 1 <= num_labels <= num_features, got L={}, M={}",
                self.num_labels, self.num_features
            )));
        }
        if let Some(caps) = &self.degree_caps {
            if caps.len() != self.num_labels {
                return Err(Error::InvalidDomain(format!(
                    "{} degree caps for {} labels",
                    caps.len(),
                    self.num_labels
                )));
            }
        }
        if let Some(counts) = &self.label_counts {
            if counts.len() != self.num_labels {
                return Err(Error::InvalidDomain(format!(
                    "{} label-count bounds for {} labels",
                    counts.len(),
                    self.num_labels
                )));
            }
        }
        let n = self.max_nodes();
        for row in &self.linear_rows {
            for &(var, _) in &row.terms {
                let ok = match var {
                    StructVar::Edge(u, v) => u < n && v < n && u != v,
                    StructVar::Feature(v, m) => v < n && m < self.num_features,
                };
                if !ok {
                    return Err(Error::InvalidDomain(format!("row references {var:?} outside the domain")));
                }
            }
        }
        Ok(())
    }

    /// Shape compatibility: directedness, label and feature layout.
    pub fn is_compatible(&self, graph: &AttributedGraph) -> bool {
        graph.directed() == self.directed
            && graph.num_labels() == self.num_labels
            && graph.num_features() == self.num_features
    }

    /// True iff the graph lies in the domain and satisfies every constraint.
    pub fn admits(&self, graph: &AttributedGraph) -> bool {
        if !self.is_compatible(graph) || !self.size.contains(graph.n()) {
            return false;
        }
        let n = graph.n();
        if let Some(caps) = &self.degree_caps {
            for v in 0..n {
                let cap = caps[graph.label(v)];
                let out = (0..n).filter(|&u| graph.has_edge(v, u)).count();
                let inn = (0..n).filter(|&u| graph.has_edge(u, v)).count();
                if out > cap || inn > cap {
                    return false;
                }
            }
        }
        if let Some(counts) = &self.label_counts {
            let mut per_label = vec![0usize; self.num_labels];
            for v in 0..n {
                per_label[graph.label(v)] += 1;
            }
            if per_label.iter().zip(counts).any(|(&c, b)| c < b.min || c > b.max) {
                return false;
            }
        }
        self.linear_rows
            .iter()
            .all(|row| row.sense.holds(row.activity(graph), row.rhs, 1e-9))
    }
}
