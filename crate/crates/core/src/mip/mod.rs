//! Mixed-integer model of the acquisition problem.
//!
//! A [`MipModel`] holds declared variables, linear rows, at most one convex
//! quadratic row and a linear objective. Every variable that is not a
//! structural decision (adjacency, features, distances, on-path flags) also
//! carries a [`Definition`] that computes it from earlier variables, so a
//! structural assignment can be completed and checked row by row.

mod encode;
mod export;
mod reader;

use std::collections::HashMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};

use crate::domain::{Sense, SizeSpec};
use crate::error::{Error, Result};
use crate::graph::AttributedGraph;
use crate::kernels::KernelVariant;

pub use encode::{
    apply_domain_constraints, canonical_assignment, encode_acquisition, encode_feature_block,
    encode_path_indicators, encode_shortest_paths,
    encode_structure,
};
pub use export::{expand_exponentials, export_model, write_lp, write_mps, ExportFormat};
pub use reader::{parse_lp, parse_mps, ParsedColumn, ParsedModel, ParsedQuadRow, ParsedRow};

pub type VarId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

/// What a variable stands for, with its index tuple.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarTag {
    /// `A[u][v]`; the diagonal marks node existence.
    Adj(usize, usize),
    Feat(usize, usize),
    Dist(usize, usize),
    /// `delta[u][v][w]`: node `w` lies on a shortest `u`-`v` path.
    OnPath(usize, usize, usize),
    /// `d^s[u][v] = [d[u][v] == s]`.
    DistInd(usize, usize, usize),
    /// `D_s`.
    PathCount(usize),
    /// `D_s^c = [D_s == c]`.
    PathCountInd(usize, usize),
    /// `p[u][v][s][l1][l2]`.
    LabeledInd(usize, usize, usize, usize, usize),
    /// `P_{s,l1,l2}`.
    LabeledCount(usize, usize, usize),
    LabeledCountInd(usize, usize, usize, usize),
    /// `N_m`.
    FeatSum(usize),
    /// `N_m^c`.
    FeatSumInd(usize, usize),
    /// Number of existing nodes (bounded size only).
    NodeCount,
    /// Unnormalized graph kernel argument against training point `i`.
    GraphRaw(usize),
    /// Normalized graph kernel argument against training point `i`.
    GraphArg(usize),
    /// `exp` of the graph argument.
    GraphExp(usize),
    FeatRaw(usize),
    FeatArg(usize),
    Kernel(usize),
    SelfGraphRaw,
    SelfGraphArg,
    SelfGraphExp,
    SelfFeatRaw,
    SelfFeatArg,
    SelfKernel,
    Mu,
    Sigma,
    /// Segment selector of a piecewise-linear exponential (export only).
    ExpSegment(usize, usize),
}

impl VarTag {
    /// Identifier safe for MPS and LP files.
    pub fn name(&self) -> String {
        match *self {
            VarTag::Adj(u, v) => format!("A_{u}_{v}"),
            VarTag::Feat(v, m) => format!("F_{v}_{m}"),
            VarTag::Dist(u, v) => format!("d_{u}_{v}"),
            VarTag::OnPath(u, v, w) => format!("delta_{u}_{v}_{w}"),
            VarTag::DistInd(u, v, s) => format!("ds_{u}_{v}_{s}"),
            VarTag::PathCount(s) => format!("D_{s}"),
            VarTag::PathCountInd(s, c) => format!("Dc_{s}_{c}"),
            VarTag::LabeledInd(u, v, s, a, b) => format!("p_{u}_{v}_{s}_{a}_{b}"),
            VarTag::LabeledCount(s, a, b) => format!("P_{s}_{a}_{b}"),
            VarTag::LabeledCountInd(s, a, b, c) => format!("Pc_{s}_{a}_{b}_{c}"),
            VarTag::FeatSum(m) => format!("N_{m}"),
            VarTag::FeatSumInd(m, c) => format!("Nc_{m}_{c}"),
            VarTag::NodeCount => "nsize".into(),
            VarTag::GraphRaw(i) => format!("graw_{i}"),
            VarTag::GraphArg(i) => format!("g_{i}"),
            VarTag::GraphExp(i) => format!("e_{i}"),
            VarTag::FeatRaw(i) => format!("fraw_{i}"),
            VarTag::FeatArg(i) => format!("f_{i}"),
            VarTag::Kernel(i) => format!("k_{i}"),
            VarTag::SelfGraphRaw => "gxx_raw".into(),
            VarTag::SelfGraphArg => "gxx".into(),
            VarTag::SelfGraphExp => "exx".into(),
            VarTag::SelfFeatRaw => "fxx_raw".into(),
            VarTag::SelfFeatArg => "fxx".into(),
            VarTag::SelfKernel => "kxx".into(),
            VarTag::Mu => "mu".into(),
            VarTag::Sigma => "sigma".into(),
            VarTag::ExpSegment(i, j) => format!("z_{i}_{j}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipVariable {
    pub id: VarId,
    pub tag: VarTag,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

impl MipVariable {
    pub fn name(&self) -> String {
        self.tag.name()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl LinearRow {
    /// Builds a row with duplicate variables merged and zero terms dropped.
    pub fn new(name: impl Into<String>, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> Self {
        let mut merged: Vec<(VarId, f64)> = Vec::with_capacity(terms.len());
        for (v, c) in terms {
            match merged.iter_mut().find(|(w, _)| *w == v) {
                Some(slot) => slot.1 += c,
                None => merged.push((v, c)),
            }
        }
        merged.retain(|&(_, c)| c != 0.0);
        Self { name: name.into(), terms: merged, sense, rhs }
    }

    /// Row family: the name up to its first index.
    pub fn family(&self) -> &str {
        self.name.split('.').next().unwrap_or(&self.name)
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|&(v, c)| c * values[v]).sum()
    }
}

/// `linear . x + x' Q x <= rhs` with `Q` given by explicit entries.
///
/// When `factor` is present, the quadratic part over `quad_vars` equals
/// `|L^{-1} k|^2` for the lower-triangular `L`, and evaluation uses the
/// factored form.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticRow {
    pub name: String,
    pub linear: Vec<(VarId, f64)>,
    /// Entries `(i, j, q)` with `i <= j`, contributing `q * x_i * x_j`;
    /// the square of `square_var` is kept separately.
    pub quad: Vec<(VarId, VarId, f64)>,
    pub rhs: f64,
    /// Variable whose square appears with coefficient one (the standard deviation).
    pub square_var: Option<VarId>,
    pub quad_vars: Vec<VarId>,
    pub factor: Option<DMatrix<f64>>,
}

impl QuadraticRow {
    fn quadratic_form(&self, values: &[f64]) -> f64 {
        match &self.factor {
            Some(l) => {
                let k = DVector::from_iterator(self.quad_vars.len(), self.quad_vars.iter().map(|&v| values[v]));
                let z = l.solve_lower_triangular(&k).expect("factor has a positive diagonal");
                z.dot(&z)
            }
            None => self.quad.iter().map(|&(i, j, q)| q * values[i] * values[j]).sum(),
        }
    }

    /// Row activity with the square term included.
    pub fn activity(&self, values: &[f64]) -> f64 {
        let lin: f64 = self.linear.iter().map(|&(v, c)| c * values[v]).sum();
        let sq = self.square_var.map_or(0.0, |s| values[s] * values[s]);
        lin + sq + self.quadratic_form(values)
    }

    /// Matrix of the quadratic form over `quad_vars`.
    pub fn q_matrix(&self) -> DMatrix<f64> {
        let t = self.quad_vars.len();
        let pos: HashMap<VarId, usize> = self.quad_vars.iter().enumerate().map(|(p, &v)| (v, p)).collect();
        let mut q = DMatrix::zeros(t, t);
        for &(i, j, c) in &self.quad {
            if let (Some(&a), Some(&b)) = (pos.get(&i), pos.get(&j)) {
                if a == b {
                    q[(a, a)] += c;
                } else {
                    q[(a, b)] += c / 2.0;
                    q[(b, a)] += c / 2.0;
                }
            }
        }
        q
    }
}

/// How a derived variable is computed from earlier ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    /// Solve equality row `row` for `var`.
    Row { row: usize, var: VarId },
    /// `out = [source == value]`.
    Indicator { source: VarId, value: f64, out: VarId },
    /// `out = prod(factors)` over binaries.
    And { factors: Vec<VarId>, out: VarId },
    /// `out = exp(arg)`.
    Exp { arg: VarId, out: VarId },
    /// `out = raw / (constant * size^power)`.
    InverseSize { raw: VarId, out: VarId, size: VarId, power: i32, constant: f64 },
    /// `out = sqrt(max(0, -(rest of the quadratic row)))`.
    FromQuadratic { out: VarId },
}

impl Definition {
    pub fn output(&self) -> VarId {
        match *self {
            Definition::Row { var, .. } => var,
            Definition::Indicator { out, .. }
            | Definition::And { out, .. }
            | Definition::Exp { out, .. }
            | Definition::InverseSize { out, .. }
            | Definition::FromQuadratic { out } => out,
        }
    }
}

/// Layout of the modeled domain and, for acquisition models, the kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelMeta {
    pub size: SizeSpec,
    pub directed: bool,
    pub num_labels: usize,
    pub num_features: usize,
    pub variant: Option<KernelVariant>,
    pub training_points: usize,
    pub beta_sqrt: f64,
}

#[derive(Debug, Clone)]
pub struct MipModel {
    pub meta: ModelMeta,
    variables: Vec<MipVariable>,
    index: HashMap<VarTag, VarId>,
    rows: Vec<LinearRow>,
    quadratic: Option<QuadraticRow>,
    objective: Vec<(VarId, f64)>,
    definitions: Vec<Definition>,
}

impl MipModel {
    pub fn new(size: SizeSpec, directed: bool) -> Self {
        Self {
            meta: ModelMeta {
                size,
                directed,
                num_labels: 0,
                num_features: 0,
                variant: None,
                training_points: 0,
                beta_sqrt: 0.0,
            },
            variables: Vec::new(),
            index: HashMap::new(),
            rows: Vec::new(),
            quadratic: None,
            objective: Vec::new(),
            definitions: Vec::new(),
        }
    }

    /// Number of node slots (the fixed size, or the upper size bound).
    pub fn slots(&self) -> usize {
        self.meta.size.max()
    }

    pub fn add_var(&mut self, tag: VarTag, kind: VarKind, lower: f64, upper: f64) -> VarId {
        if let Some(&id) = self.index.get(&tag) {
            return id;
        }
        let id = self.variables.len();
        self.variables.push(MipVariable { id, tag, kind, lower, upper });
        self.index.insert(tag, id);
        id
    }

    pub fn add_binary(&mut self, tag: VarTag) -> VarId {
        self.add_var(tag, VarKind::Binary, 0.0, 1.0)
    }

    pub fn add_row(&mut self, row: LinearRow) -> usize {
        self.rows.push(row);
        self.rows.len() - 1
    }

    /// Adds an equality row and records it as the definition of `var`.
    pub fn define_by_row(&mut self, row: LinearRow, var: VarId) -> usize {
        debug_assert!(row.sense == Sense::Eq);
        let idx = self.add_row(row);
        self.definitions.push(Definition::Row { row: idx, var });
        idx
    }

    pub fn add_definition(&mut self, def: Definition) {
        self.definitions.push(def);
    }

    pub fn set_quadratic(&mut self, row: QuadraticRow) {
        self.quadratic = Some(row);
    }

    pub fn set_objective(&mut self, terms: Vec<(VarId, f64)>) {
        self.objective = terms.into_iter().filter(|&(_, c)| c != 0.0).collect();
    }

    pub fn variables(&self) -> &[MipVariable] {
        &self.variables
    }

    pub fn var(&self, tag: VarTag) -> Option<VarId> {
        self.index.get(&tag).copied()
    }

    pub fn rows(&self) -> &[LinearRow] {
        &self.rows
    }

    pub fn quadratic(&self) -> Option<&QuadraticRow> {
        self.quadratic.as_ref()
    }

    pub fn objective(&self) -> &[(VarId, f64)] {
        &self.objective
    }

    pub fn definitions(&self) -> &[Definition] {
        &self.definitions
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    /// Number of constraints, counting the quadratic row.
    pub fn num_constraints(&self) -> usize {
        self.rows.len() + usize::from(self.quadratic.is_some())
    }

    pub fn count_tag(&self, pred: impl Fn(&VarTag) -> bool) -> usize {
        self.variables.iter().filter(|v| pred(&v.tag)).count()
    }

    pub fn rows_in_family(&self, family: &str) -> usize {
        self.rows.iter().filter(|r| r.family() == family).count()
    }

    /// Variables not produced by any definition.
    pub fn free_variables(&self) -> Vec<VarId> {
        let mut defined = vec![false; self.variables.len()];
        for d in &self.definitions {
            defined[d.output()] = true;
        }
        (0..self.variables.len()).filter(|&v| !defined[v]).collect()
    }

    /// Completes an assignment by evaluating every definition in order.
    pub fn resolve(&self, assignment: &mut Assignment) -> Result<()> {
        for def in &self.definitions {
            let value = match def {
                Definition::Row { row, var } => {
                    let r = &self.rows[*row];
                    let mut own = 0.0;
                    let mut rest = 0.0;
                    for &(v, c) in &r.terms {
                        if v == *var {
                            own = c;
                        } else {
                            rest += c * self.get(assignment, v)?;
                        }
                    }
                    (r.rhs - rest) / own
                }
                Definition::Indicator { source, value, out: _ } => {
                    f64::from(u8::from(self.get(assignment, *source)? == *value))
                }
                Definition::And { factors, .. } => {
                    let mut p = 1.0;
                    for &f in factors {
                        p *= self.get(assignment, f)?;
                    }
                    p
                }
                Definition::Exp { arg, .. } => self.get(assignment, *arg)?.exp(),
                Definition::InverseSize { raw, size, power, constant, .. } => {
                    let n = self.get(assignment, *size)?;
                    self.get(assignment, *raw)? / (constant * n.powi(*power))
                }
                Definition::FromQuadratic { out } => {
                    let q = self.quadratic.as_ref().ok_or_else(|| Error::MissingVariable(self.name(*out)))?;
                    let mut probe = assignment.clone();
                    probe.set(*out, 0.0);
                    let values = probe.dense(self)?;
                    (-(q.activity(&values) - q.rhs)).max(0.0).sqrt()
                }
            };
            assignment.set(def.output(), value);
        }
        Ok(())
    }

    fn get(&self, assignment: &Assignment, v: VarId) -> Result<f64> {
        assignment.get(v).ok_or_else(|| Error::MissingVariable(self.name(v)))
    }

    pub fn name(&self, v: VarId) -> String {
        self.variables[v].name()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().map(|&(v, c)| c * values[v]).sum()
    }
}

impl fmt::Display for MipModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} variables ({} integer), {} linear rows{}",
            self.variables.len(),
            self.variables.iter().filter(|v| v.kind != VarKind::Continuous).count(),
            self.rows.len(),
            if self.quadratic.is_some() { ", 1 quadratic row" } else { "" }
        )
    }
}

/// Partial or complete values for a model's variables.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    values: Vec<Option<f64>>,
}

impl Assignment {
    pub fn empty(model: &MipModel) -> Self {
        Self { values: vec![None; model.num_vars()] }
    }

    pub fn get(&self, v: VarId) -> Option<f64> {
        self.values.get(v).copied().flatten()
    }

    pub fn set(&mut self, v: VarId, value: f64) {
        if v >= self.values.len() {
            self.values.resize(v + 1, None);
        }
        self.values[v] = Some(value);
    }

    pub fn unset(&mut self, v: VarId) {
        if let Some(slot) = self.values.get_mut(v) {
            *slot = None;
        }
    }

    pub fn value_of(&self, model: &MipModel, tag: VarTag) -> Option<f64> {
        model.var(tag).and_then(|v| self.get(v))
    }

    /// Dense values, failing on the first unassigned variable.
    pub fn dense(&self, model: &MipModel) -> Result<Vec<f64>> {
        (0..model.num_vars()).map(|v| self.get(v).ok_or_else(|| Error::MissingVariable(model.name(v)))).collect()
    }
}

/// Canonical assignment of `graph` completed through every definition.
pub fn full_assignment(model: &MipModel, graph: &AttributedGraph) -> Result<Assignment> {
    let mut a = canonical_assignment(model, graph)?;
    model.resolve(&mut a)?;
    Ok(a)
}

/// Posterior mean and standard deviation read off a completed assignment.
pub fn posterior_from_assignment(model: &MipModel, assignment: &Assignment) -> Option<(f64, f64)> {
    Some((assignment.value_of(model, VarTag::Mu)?, assignment.value_of(model, VarTag::Sigma)?))
}

#[cfg(test)]
mod tests;
