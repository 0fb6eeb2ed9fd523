//! Constraint blocks: shortest paths, path-count indicators, features,
//! domain rows and the acquisition objective.

use crate::domain::{DomainSpec, Sense, SizeSpec, StructVar};
use crate::error::{Error, Result};
use crate::gp::GpModel;
use crate::graph::AttributedGraph;

use super::{Assignment, Definition, LinearRow, MipModel, QuadraticRow, VarId, VarKind, VarTag};

use Sense::{Eq, Ge, Le};

fn row(name: String, terms: Vec<(VarId, f64)>, sense: Sense, rhs: f64) -> LinearRow {
    LinearRow::new(name, terms, sense, rhs)
}

/// Adjacency, distance and on-path variables with the shortest-path rows.
///
/// Fixed size pins every node to exist; bounded size lets `A[v][v]` switch
/// nodes off in index order and sends distances to absent nodes to `n`.
pub fn encode_shortest_paths(size: &SizeSpec, directed: bool) -> Result<MipModel> {
    size.validate()?;
    let n = size.max();
    let bounded = !size.is_fixed();
    let nf = n as f64;
    let dmax = if bounded { nf } else { nf - 1.0 };
    let mut m = MipModel::new(*size, directed);

    let mut a = vec![0; n * n];
    let mut d = vec![0; n * n];
    let mut delta = vec![0; n * n * n];
    for u in 0..n {
        for v in 0..n {
            a[u * n + v] = m.add_binary(VarTag::Adj(u, v));
        }
    }
    for u in 0..n {
        for v in 0..n {
            d[u * n + v] = m.add_var(VarTag::Dist(u, v), VarKind::Integer, 0.0, dmax);
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                delta[(u * n + v) * n + w] = m.add_binary(VarTag::OnPath(u, v, w));
            }
        }
    }
    let a = |u: usize, v: usize| a[u * n + v];
    let d = |u: usize, v: usize| d[u * n + v];
    let dl = |u: usize, v: usize, w: usize| delta[(u * n + v) * n + w];

    if bounded {
        for v in 0..n.saturating_sub(1) {
            m.add_row(row(format!("node_order.{v}"), vec![(a(v, v), 1.0), (a(v + 1, v + 1), -1.0)], Ge, 0.0));
        }
        let all = (0..n).map(|v| (a(v, v), 1.0)).collect();
        m.add_row(row("node_min".into(), all, Ge, size.min() as f64));
        for u in 0..n {
            for v in 0..n {
                if u != v {
                    let t = vec![(a(u, v), 2.0), (a(u, u), -1.0), (a(v, v), -1.0)];
                    m.add_row(row(format!("edge_node.{u}.{v}"), t, Le, 0.0));
                }
            }
        }
    } else {
        for v in 0..n {
            m.add_row(row(format!("node.{v}"), vec![(a(v, v), 1.0)], Eq, 1.0));
        }
    }
    for v in 0..n {
        m.add_row(row(format!("dist_self.{v}"), vec![(d(v, v), 1.0)], Eq, 0.0));
    }
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            m.add_row(row(format!("edge_ub.{u}.{v}"), vec![(d(u, v), 1.0), (a(u, v), nf)], Le, 1.0 + nf));
            m.add_row(row(format!("edge_lb.{u}.{v}"), vec![(d(u, v), 1.0), (a(u, v), 1.0)], Ge, 2.0));
            if bounded {
                m.add_row(row(format!("absent_u.{u}.{v}"), vec![(d(u, v), 1.0), (a(u, u), nf)], Ge, nf));
                m.add_row(row(format!("absent_v.{u}.{v}"), vec![(d(u, v), 1.0), (a(v, v), nf)], Ge, nf));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            for w in 0..n {
                let base = vec![(d(u, v), 1.0), (d(u, w), -1.0), (d(w, v), -1.0)];
                let mut ub = base.clone();
                ub.push((dl(u, v, w), -1.0));
                m.add_row(row(format!("tri_ub.{u}.{v}.{w}"), ub, Le, -1.0));
                let mut lb = base;
                lb.push((dl(u, v, w), -2.0 * nf));
                m.add_row(row(format!("tri_lb.{u}.{v}.{w}"), lb, Ge, -2.0 * nf));
            }
        }
    }
    for v in 0..n {
        for w in 0..n {
            let rhs = if w == v { 1.0 } else { 0.0 };
            m.add_row(row(format!("path_self.{v}.{w}"), vec![(dl(v, v, w), 1.0)], Eq, rhs));
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u != v {
                m.add_row(row(format!("path_end.{u}.{v}.{u}"), vec![(dl(u, v, u), 1.0)], Eq, 1.0));
                m.add_row(row(format!("path_end.{u}.{v}.{v}"), vec![(dl(u, v, v), 1.0)], Eq, 1.0));
            }
        }
    }
    for u in 0..n {
        for v in 0..n {
            if u == v {
                continue;
            }
            let sum: Vec<(VarId, f64)> = (0..n).map(|w| (dl(u, v, w), 1.0)).collect();
            let with = |extra: Vec<(VarId, f64)>| sum.iter().copied().chain(extra).collect::<Vec<_>>();
            m.add_row(row(format!("path_ub.{u}.{v}"), with(vec![(a(u, v), nf - 2.0)]), Le, nf));
            if bounded {
                m.add_row(row(format!("path_ub_u.{u}.{v}"), with(vec![(a(u, u), 2.0 - nf)]), Le, 2.0));
                m.add_row(row(format!("path_ub_v.{u}.{v}"), with(vec![(a(v, v), 2.0 - nf)]), Le, 2.0));
                let t = with(vec![(a(u, u), -1.0), (a(v, v), -1.0), (a(u, v), 1.0)]);
                m.add_row(row(format!("path_lb.{u}.{v}"), t, Ge, 1.0));
            } else {
                m.add_row(row(format!("path_lb.{u}.{v}"), with(vec![(a(u, v), 1.0)]), Ge, 3.0));
            }
        }
    }
    if !directed {
        for u in 0..n {
            for v in (u + 1)..n {
                m.add_row(row(format!("sym_adj.{u}.{v}"), vec![(a(u, v), 1.0), (a(v, u), -1.0)], Eq, 0.0));
                m.add_row(row(format!("sym_dist.{u}.{v}"), vec![(d(u, v), 1.0), (d(v, u), -1.0)], Eq, 0.0));
                for w in 0..n {
                    let t = vec![(dl(u, v, w), 1.0), (dl(v, u, w), -1.0)];
                    m.add_row(row(format!("sym_path.{u}.{v}.{w}"), t, Eq, 0.0));
                }
            }
        }
    }
    Ok(m)
}

fn require(m: &MipModel, tag: VarTag) -> Result<VarId> {
    m.var(tag).ok_or_else(|| Error::MissingVariable(tag.name()))
}

/// One-hot value indicators `x^c = [x == c]` for `c` in `0..=max`, linked
/// by a sum row and a weighted-sum row.
fn value_indicators(
    m: &mut MipModel,
    x: VarId,
    max: usize,
    family: &str,
    index: &str,
    tag: impl Fn(usize) -> VarTag,
) -> Vec<VarId> {
    let ind: Vec<VarId> = (0..=max).map(|c| m.add_binary(tag(c))).collect();
    for (c, &z) in ind.iter().enumerate() {
        m.add_definition(Definition::Indicator { source: x, value: c as f64, out: z });
    }
    m.add_row(row(format!("{family}_onehot.{index}"), ind.iter().map(|&z| (z, 1.0)).collect(), Eq, 1.0));
    let mut value: Vec<(VarId, f64)> = ind.iter().enumerate().map(|(c, &z)| (z, c as f64)).collect();
    value.push((x, -1.0));
    m.add_row(row(format!("{family}_value.{index}"), value, Eq, 0.0));
    ind
}

/// Distance indicators `d^s`, path counts `D_s` with their value
/// indicators and, when `labeled`, the labeled path indicators and counts.
pub fn encode_path_indicators(m: &mut MipModel, labeled: bool) -> Result<()> {
    let n = m.slots();
    let bounded = !m.meta.size.is_fixed();
    let directed = m.meta.directed;
    for u in 0..n {
        for v in 0..n {
            let d = require(m, VarTag::Dist(u, v))?;
            value_indicators(m, d, n, "dist", &format!("{u}.{v}"), |s| VarTag::DistInd(u, v, s));
        }
    }
    for s in 0..n {
        let count = m.add_var(VarTag::PathCount(s), VarKind::Integer, 0.0, (n * n) as f64);
        let mut terms = vec![(count, 1.0)];
        for u in 0..n {
            for v in 0..n {
                if bounded && s == 0 && u == v {
                    // absent nodes keep d[v][v] = 0 but must not be counted
                    terms.push((require(m, VarTag::Adj(v, v))?, -1.0));
                } else {
                    terms.push((require(m, VarTag::DistInd(u, v, s))?, -1.0));
                }
            }
        }
        m.define_by_row(row(format!("path_count.{s}"), terms, Eq, 0.0), count);
        let ind = value_indicators(m, count, n * n, "count", &s.to_string(), |c| VarTag::PathCountInd(s, c));
        if !directed && s >= 1 {
            for (c, &z) in ind.iter().enumerate().filter(|(c, _)| c % 2 == 1) {
                m.add_row(row(format!("count_parity.{s}.{c}"), vec![(z, 1.0)], Eq, 0.0));
            }
        }
    }
    if !labeled {
        return Ok(());
    }
    let l = m.meta.num_labels;
    if l == 0 {
        return Err(Error::DimensionMismatch("labeled path indicators need the feature block".into()));
    }
    for s in 0..n {
        for l1 in 0..l {
            for l2 in 0..l {
                let count = m.add_var(VarTag::LabeledCount(s, l1, l2), VarKind::Integer, 0.0, (n * n) as f64);
                let mut sum = vec![(count, 1.0)];
                for u in 0..n {
                    for v in 0..n {
                        let fu = require(m, VarTag::Feat(u, l1))?;
                        let fv = require(m, VarTag::Feat(v, l2))?;
                        let ds = require(m, VarTag::DistInd(u, v, s))?;
                        let p = m.add_binary(VarTag::LabeledInd(u, v, s, l1, l2));
                        m.add_definition(Definition::And { factors: vec![fu, ds, fv], out: p });
                        let idx = format!("{u}.{v}.{s}.{l1}.{l2}");
                        m.add_row(row(format!("lab_src.{idx}"), vec![(p, 1.0), (fu, -1.0)], Le, 0.0));
                        m.add_row(row(format!("lab_dist.{idx}"), vec![(p, 1.0), (ds, -1.0)], Le, 0.0));
                        m.add_row(row(format!("lab_dst.{idx}"), vec![(p, 1.0), (fv, -1.0)], Le, 0.0));
                        let all = vec![(p, 1.0), (fu, -1.0), (ds, -1.0), (fv, -1.0)];
                        m.add_row(row(format!("lab_all.{idx}"), all, Ge, -2.0));
                        sum.push((p, -1.0));
                    }
                }
                m.define_by_row(row(format!("lab_count.{s}.{l1}.{l2}"), sum, Eq, 0.0), count);
                value_indicators(m, count, n * n, "lab", &format!("{s}.{l1}.{l2}"), |c| {
                    VarTag::LabeledCountInd(s, l1, l2, c)
                });
            }
        }
        if !directed {
            for l1 in 0..l {
                for l2 in (l1 + 1)..l {
                    let a = require(m, VarTag::LabeledCount(s, l1, l2))?;
                    let b = require(m, VarTag::LabeledCount(s, l2, l1))?;
                    m.add_row(row(format!("lab_sym.{s}.{l1}.{l2}"), vec![(a, 1.0), (b, -1.0)], Eq, 0.0));
                }
            }
        }
    }
    Ok(())
}

/// Feature bits with per-node one-hot labels, column sums `N_m` and their
/// value indicators.
pub fn encode_feature_block(m: &mut MipModel, domain: &DomainSpec) -> Result<()> {
    domain.validate()?;
    let n = m.slots();
    if domain.max_nodes() != n || domain.directed != m.meta.directed {
        return Err(Error::IncompatibleDomain("domain size or direction differs from the model".into()));
    }
    let bounded = !m.meta.size.is_fixed();
    let (l, mf) = (domain.num_labels, domain.num_features);
    m.meta.num_labels = l;
    m.meta.num_features = mf;
    let mut f = vec![0; n * mf];
    for v in 0..n {
        for c in 0..mf {
            f[v * mf + c] = m.add_binary(VarTag::Feat(v, c));
        }
    }
    for v in 0..n {
        let mut terms: Vec<(VarId, f64)> = (0..l).map(|c| (f[v * mf + c], 1.0)).collect();
        if bounded {
            let exists = require(m, VarTag::Adj(v, v))?;
            terms.push((exists, -1.0));
            m.add_row(row(format!("label_onehot.{v}"), terms, Eq, 0.0));
            for c in l..mf {
                let t = vec![(f[v * mf + c], 1.0), (exists, -1.0)];
                m.add_row(row(format!("feat_exists.{v}.{c}"), t, Le, 0.0));
            }
        } else {
            m.add_row(row(format!("label_onehot.{v}"), terms, Eq, 1.0));
        }
    }
    for c in 0..mf {
        let sum = m.add_var(VarTag::FeatSum(c), VarKind::Integer, 0.0, n as f64);
        let mut terms = vec![(sum, 1.0)];
        terms.extend((0..n).map(|v| (f[v * mf + c], -1.0)));
        m.define_by_row(row(format!("feat_sum.{c}"), terms, Eq, 0.0), sum);
        value_indicators(m, sum, n, "feat", &c.to_string(), |k| VarTag::FeatSumInd(c, k));
    }
    Ok(())
}

/// Degree caps, label-count bounds and user rows.
pub fn apply_domain_constraints(m: &mut MipModel, domain: &DomainSpec) -> Result<()> {
    domain.validate()?;
    let n = m.slots();
    if domain.max_nodes() != n
        || domain.directed != m.meta.directed
        || domain.num_labels != m.meta.num_labels
        || domain.num_features != m.meta.num_features
    {
        return Err(Error::IncompatibleDomain("domain layout differs from the model".into()));
    }
    let l = domain.num_labels;
    if let Some(caps) = &domain.degree_caps {
        for v in 0..n {
            let label_terms: Vec<(VarId, f64)> =
                (0..l).map(|c| Ok((require(m, VarTag::Feat(v, c))?, -(caps[c] as f64)))).collect::<Result<_>>()?;
            let mut out = label_terms.clone();
            let mut inn = label_terms;
            for u in (0..n).filter(|&u| u != v) {
                out.push((require(m, VarTag::Adj(v, u))?, 1.0));
                inn.push((require(m, VarTag::Adj(u, v))?, 1.0));
            }
            m.add_row(row(format!("deg_out.{v}"), out, Le, 0.0));
            if domain.directed {
                m.add_row(row(format!("deg_in.{v}"), inn, Le, 0.0));
            }
        }
    }
    if let Some(counts) = &domain.label_counts {
        let (nmin, nmax) = (domain.size.min(), domain.size.max());
        if let Some(c) = counts.iter().position(|b| b.min > b.max) {
            return Err(Error::InfeasibleDomainDetected(format!("label {c} has min > max")));
        }
        let lo: usize = counts.iter().map(|b| b.min).sum();
        let hi: usize = counts.iter().map(|b| b.max.min(nmax)).sum();
        if lo > nmax || hi < nmin {
            return Err(Error::InfeasibleDomainDetected("label counts cannot fit the node count".into()));
        }
        for (c, b) in counts.iter().enumerate() {
            let terms: Vec<(VarId, f64)> =
                (0..n).map(|v| Ok((require(m, VarTag::Feat(v, c))?, 1.0))).collect::<Result<_>>()?;
            if b.min > 0 {
                m.add_row(row(format!("label_min.{c}"), terms.clone(), Ge, b.min as f64));
            }
            if b.max < n {
                m.add_row(row(format!("label_max.{c}"), terms, Le, b.max as f64));
            }
        }
    }
    for (i, r) in domain.linear_rows.iter().enumerate() {
        let terms = r
            .terms
            .iter()
            .map(|&(var, coef)| {
                let tag = match var {
                    StructVar::Edge(u, v) => VarTag::Adj(u, v),
                    StructVar::Feature(v, c) => VarTag::Feat(v, c),
                };
                Ok((require(m, tag)?, coef))
            })
            .collect::<Result<Vec<_>>>()?;
        let r = row(format!("user.{i}"), terms, r.sense, r.rhs);
        if r.terms.is_empty() && !r.sense.holds(0.0, r.rhs, 0.0) {
            return Err(Error::InfeasibleDomainDetected(format!("user row {i} is violated by every graph")));
        }
        m.add_row(r);
    }
    Ok(())
}

/// Declares `out` as a normalized linear expression. With a fixed size the
/// normalization is a constant folded into the row; otherwise an
/// unnormalized variable is defined and divided by `constant * size^power`.
#[allow(clippy::too_many_arguments)]
fn normalized(
    m: &mut MipModel,
    raw_tag: VarTag,
    out_tag: VarTag,
    terms: Vec<(VarId, f64)>,
    size_var: Option<VarId>,
    power: i32,
    constant: f64,
) -> VarId {
    let name = out_tag.name();
    match size_var {
        None => {
            let n = m.slots() as f64;
            let norm = constant * n.powi(power);
            let out = m.add_var(out_tag, VarKind::Continuous, 0.0, 1.0);
            let mut t = vec![(out, 1.0)];
            t.extend(terms.into_iter().map(|(v, c)| (v, -c / norm)));
            m.define_by_row(row(format!("{name}.def"), t, Eq, 0.0), out);
            out
        }
        Some(size) => {
            let ub: f64 = terms.iter().map(|&(v, c)| c.abs() * m.variables()[v].upper).sum();
            let raw = m.add_var(raw_tag, VarKind::Continuous, 0.0, ub);
            let mut t = vec![(raw, 1.0)];
            t.extend(terms.into_iter().map(|(v, c)| (v, -c)));
            m.define_by_row(row(format!("{}.def", raw_tag.name()), t, Eq, 0.0), raw);
            let out = m.add_var(out_tag, VarKind::Continuous, 0.0, 1.0);
            m.add_definition(Definition::InverseSize { raw, out, size, power, constant });
            out
        }
    }
}

/// Every discrete block of the acquisition model: shortest paths, features,
/// path-count indicators and domain rows. Its integer points are the graphs
/// of the domain.
pub fn encode_structure(domain: &DomainSpec, labeled: bool) -> Result<MipModel> {
    let mut m = encode_shortest_paths(&domain.size, domain.directed)?;
    encode_feature_block(&mut m, domain)?;
    encode_path_indicators(&mut m, labeled)?;
    apply_domain_constraints(&mut m, domain)?;
    Ok(m)
}

/// Full acquisition model: structure blocks, domain rows, kernel values
/// against every training point, the self-kernel, the posterior mean row,
/// the variance row and the objective `mu - beta_sqrt * sigma`.
pub fn encode_acquisition(gp: &GpModel, domain: &DomainSpec, beta_sqrt: f64) -> Result<MipModel> {
    if gp.is_empty() {
        return Err(Error::UnfittedModel);
    }
    domain.validate()?;
    if let Some(p) = gp.points().iter().find(|p| !domain.is_compatible(p)) {
        return Err(Error::IncompatibleDomain(format!(
            "training graph (directed={}, L={}, M={}) does not fit the domain",
            p.directed(),
            p.num_labels(),
            p.num_features()
        )));
    }
    let variant = gp.variant();
    let hyper = *gp.hyper();
    let (alpha, beta) = (hyper.alpha, hyper.beta);
    let graph_scale = match hyper.sigma_k_sq {
        Some(var) if variant.is_exponential() => alpha / var,
        None if variant.is_exponential() => return Err(Error::MissingVariance),
        _ => alpha,
    };
    let mut m = encode_structure(domain, variant.is_labeled())?;
    let n = m.slots();
    let (l, mf) = (domain.num_labels, domain.num_features);

    let size_var = if domain.size.is_fixed() {
        None
    } else {
        let size = m.add_var(VarTag::NodeCount, VarKind::Integer, domain.size.min() as f64, n as f64);
        let mut t = vec![(size, 1.0)];
        t.extend((0..n).map(|v| (m.var(VarTag::Adj(v, v)).expect("declared"), -1.0)));
        m.define_by_row(row("node_count".into(), t, Eq, 0.0), size);
        Some(size)
    };

    let wrap_exp = |m: &mut MipModel, arg: VarId, tag: VarTag| -> VarId {
        if variant.is_exponential() {
            let e = m.add_var(tag, VarKind::Continuous, 1.0, std::f64::consts::E);
            m.add_definition(Definition::Exp { arg, out: e });
            e
        } else {
            arg
        }
    };

    let graph_max = if variant.is_exponential() { std::f64::consts::E } else { 1.0 };
    let kmax = graph_scale * graph_max + beta;
    let mut kernels = Vec::with_capacity(gp.len());
    for (i, s) in gp.summaries().iter().enumerate() {
        let ni = s.n();
        let smax = n.min(ni);
        let mut terms = Vec::new();
        for len in 0..smax {
            if variant.is_labeled() {
                for l1 in 0..l {
                    for l2 in 0..l {
                        let c = s.labeled_count(len, l1, l2);
                        if c > 0 {
                            terms.push((require(&m, VarTag::LabeledCount(len, l1, l2))?, c as f64));
                        }
                    }
                }
            } else {
                let c = s.length_counts()[len];
                if c > 0 {
                    terms.push((require(&m, VarTag::PathCount(len))?, c as f64));
                }
            }
        }
        let ni2 = (ni * ni) as f64;
        let g = normalized(&mut m, VarTag::GraphRaw(i), VarTag::GraphArg(i), terms, size_var, 2, ni2);
        let g = wrap_exp(&mut m, g, VarTag::GraphExp(i));
        let fterms = (0..mf)
            .filter(|&c| s.feature_sums()[c] > 0)
            .map(|c| Ok((require(&m, VarTag::FeatSum(c))?, s.feature_sums()[c] as f64)))
            .collect::<Result<Vec<_>>>()?;
        let f = normalized(&mut m, VarTag::FeatRaw(i), VarTag::FeatArg(i), fterms, size_var, 1, (ni * mf) as f64);
        let k = m.add_var(VarTag::Kernel(i), VarKind::Continuous, 0.0, kmax);
        let t = vec![(k, 1.0), (g, -graph_scale), (f, -beta)];
        m.define_by_row(row(format!("kernel.{i}"), t, Eq, 0.0), k);
        kernels.push(k);
    }

    let mut self_terms = Vec::new();
    for len in 0..n {
        for c in 1..=n * n {
            let sq = (c * c) as f64;
            if variant.is_labeled() {
                for l1 in 0..l {
                    for l2 in 0..l {
                        self_terms.push((require(&m, VarTag::LabeledCountInd(len, l1, l2, c))?, sq));
                    }
                }
            } else {
                self_terms.push((require(&m, VarTag::PathCountInd(len, c))?, sq));
            }
        }
    }
    let gxx = normalized(&mut m, VarTag::SelfGraphRaw, VarTag::SelfGraphArg, self_terms, size_var, 4, 1.0);
    let gxx = wrap_exp(&mut m, gxx, VarTag::SelfGraphExp);
    let mut fself = Vec::new();
    for c in 0..mf {
        for k in 1..=n {
            fself.push((require(&m, VarTag::FeatSumInd(c, k))?, (k * k) as f64));
        }
    }
    let fxx = normalized(&mut m, VarTag::SelfFeatRaw, VarTag::SelfFeatArg, fself, size_var, 2, mf as f64);
    let kxx = m.add_var(VarTag::SelfKernel, VarKind::Continuous, 0.0, kmax);
    m.define_by_row(row("kernel_self".into(), vec![(kxx, 1.0), (gxx, -graph_scale), (fxx, -beta)], Eq, 0.0), kxx);

    let mu = m.add_var(VarTag::Mu, VarKind::Continuous, f64::NEG_INFINITY, f64::INFINITY);
    let mut t = vec![(mu, 1.0)];
    t.extend(kernels.iter().zip(gp.weights().iter()).map(|(&k, &w)| (k, -w)));
    m.define_by_row(row("mean".into(), t, Eq, 0.0), mu);

    let sigma = m.add_var(VarTag::Sigma, VarKind::Continuous, 0.0, kmax.sqrt());
    let q = gp.inverse_covariance();
    let mut quad = Vec::new();
    for i in 0..kernels.len() {
        quad.push((kernels[i], kernels[i], q[(i, i)]));
        for j in (i + 1)..kernels.len() {
            quad.push((kernels[i], kernels[j], q[(i, j)] + q[(j, i)]));
        }
    }
    m.set_quadratic(QuadraticRow {
        name: "variance".into(),
        linear: vec![(kxx, -1.0)],
        quad,
        rhs: 0.0,
        square_var: Some(sigma),
        quad_vars: kernels,
        factor: gp.cholesky_factor(),
    });
    m.add_definition(Definition::FromQuadratic { out: sigma });
    m.set_objective(vec![(mu, 1.0), (sigma, -beta_sqrt)]);
    m.meta.variant = Some(variant);
    m.meta.training_points = gp.len();
    m.meta.beta_sqrt = beta_sqrt;
    Ok(m)
}

/// Values of the structural variables (`A`, `F`, `d`, `delta`) for a graph.
/// Absent node slots get no edges and no features, distance `n` to every
/// other slot and on-path flags only at the endpoints.
pub fn canonical_assignment(m: &MipModel, graph: &AttributedGraph) -> Result<Assignment> {
    let n = m.slots();
    let g = graph.n();
    if graph.directed() != m.meta.directed || !m.meta.size.contains(g) {
        return Err(Error::IncompatibleDomain(format!("graph with n={g} does not fit the model")));
    }
    if m.meta.num_features > 0
        && (graph.num_features() != m.meta.num_features || graph.num_labels() != m.meta.num_labels)
    {
        return Err(Error::IncompatibleDomain("feature layout differs from the model".into()));
    }
    let paths = crate::graph::floyd_warshall(graph);
    let mut a = Assignment::empty(m);
    let mut set = |tag: VarTag, value: f64| {
        if let Some(id) = m.var(tag) {
            a.set(id, value);
        }
    };
    for u in 0..n {
        for v in 0..n {
            let both = u < g && v < g;
            let edge = if u == v { u < g } else { both && graph.has_edge(u, v) };
            set(VarTag::Adj(u, v), f64::from(u8::from(edge)));
            let dist = if u == v {
                0
            } else if both {
                paths.dist(u, v)
            } else {
                n
            };
            set(VarTag::Dist(u, v), dist as f64);
            for w in 0..n {
                let on = if both { w < g && paths.on_path(u, v, w) } else { w == u || w == v };
                set(VarTag::OnPath(u, v, w), f64::from(u8::from(on)));
            }
        }
        for c in 0..m.meta.num_features {
            set(VarTag::Feat(u, c), f64::from(u8::from(u < g && graph.feature(u, c))));
        }
    }
    Ok(a)
}
