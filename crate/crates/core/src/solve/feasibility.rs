//! Exact row checking and exhaustive counting of integer assignments.

use crate::domain::Sense;
use crate::error::{Error, Result};
use crate::mip::{Assignment, Definition, LinearRow, MipModel, VarId, VarKind};

/// Default search-node cap for [`count_feasible`].
pub const DEFAULT_COUNT_CAP: u64 = 1 << 24;

const EPS: f64 = 1e-9;

fn integral(x: f64) -> bool {
    x.fract() == 0.0
}

fn row_is_integral(model: &MipModel, row: &LinearRow) -> bool {
    integral(row.rhs)
        && row.terms.iter().all(|&(v, c)| integral(c) && model.variables()[v].kind != VarKind::Continuous)
}

/// True iff every bound, integrality restriction, linear row, nonlinear
/// link and the quadratic row hold. Rows over integers with integer
/// coefficients are checked exactly.
pub fn check_feasible(model: &MipModel, assignment: &Assignment) -> Result<bool> {
    let values = assignment.dense(model)?;
    for var in model.variables() {
        let x = values[var.id];
        if x < var.lower - EPS || x > var.upper + EPS {
            return Ok(false);
        }
        if var.kind != VarKind::Continuous && !integral(x) {
            return Ok(false);
        }
    }
    for row in model.rows() {
        let lhs = row.activity(&values);
        let tol = if row_is_integral(model, row) {
            0.0
        } else {
            EPS * (1.0 + row.rhs.abs() + row.terms.iter().map(|&(v, c)| (c * values[v]).abs()).sum::<f64>())
        };
        if !row.sense.holds(lhs, row.rhs, tol) {
            return Ok(false);
        }
    }
    for def in model.definitions() {
        let ok = match *def {
            Definition::Exp { arg, out } => (values[out] - values[arg].exp()).abs() <= EPS * (1.0 + values[out].abs()),
            Definition::InverseSize { raw, out, size, power, constant } => {
                let expect = values[raw] / (constant * values[size].powi(power));
                (values[out] - expect).abs() <= EPS * (1.0 + expect.abs())
            }
            _ => true,
        };
        if !ok {
            return Ok(false);
        }
    }
    if let Some(q) = model.quadratic() {
        if q.activity(&values) > q.rhs + EPS * (1.0 + q.rhs.abs()) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Interval bound propagation over the linear rows of an all-integer model.
pub struct Propagator<'a> {
    model: &'a MipModel,
    var_rows: Vec<Vec<usize>>,
}

pub type Domains = Vec<(i64, i64)>;

impl<'a> Propagator<'a> {
    pub fn new(model: &'a MipModel) -> Result<Self> {
        if let Some(v) = model.variables().iter().find(|v| v.kind == VarKind::Continuous || !v.upper.is_finite()) {
            return Err(Error::InvalidDomain(format!("variable {} is not a bounded integer", v.name())));
        }
        let mut var_rows = vec![Vec::new(); model.num_vars()];
        for (r, row) in model.rows().iter().enumerate() {
            for &(v, _) in &row.terms {
                var_rows[v].push(r);
            }
        }
        Ok(Self { model, var_rows })
    }

    pub fn initial_domains(&self) -> Domains {
        self.model.variables().iter().map(|v| (v.lower.ceil() as i64, v.upper.floor() as i64)).collect()
    }

    /// Tightens `dom` to a fixpoint; false when some row cannot hold.
    pub fn propagate(&self, dom: &mut Domains, touched: &[VarId]) -> bool {
        let rows = self.model.rows();
        let mut queued = vec![false; rows.len()];
        let mut queue: Vec<usize> = Vec::new();
        let seed: Box<dyn Iterator<Item = usize>> = if touched.is_empty() {
            Box::new(0..rows.len())
        } else {
            Box::new(touched.iter().flat_map(|&v| self.var_rows[v].iter().copied()))
        };
        for r in seed {
            if !queued[r] {
                queued[r] = true;
                queue.push(r);
            }
        }
        while let Some(r) = queue.pop() {
            queued[r] = false;
            let row = &rows[r];
            let (mut min_act, mut max_act) = (0.0, 0.0);
            for &(v, c) in &row.terms {
                let (lo, hi) = (dom[v].0 as f64, dom[v].1 as f64);
                if c > 0.0 {
                    min_act += c * lo;
                    max_act += c * hi;
                } else {
                    min_act += c * hi;
                    max_act += c * lo;
                }
            }
            let upper = matches!(row.sense, Sense::Le | Sense::Eq);
            let lower = matches!(row.sense, Sense::Ge | Sense::Eq);
            if (upper && min_act > row.rhs + EPS) || (lower && max_act < row.rhs - EPS) {
                return false;
            }
            for &(v, c) in &row.terms {
                let (lo, hi) = (dom[v].0 as f64, dom[v].1 as f64);
                let (cmin, cmax) = if c > 0.0 { (c * lo, c * hi) } else { (c * hi, c * lo) };
                let mut new = dom[v];
                if upper {
                    let limit = (row.rhs - (min_act - cmin)) / c;
                    if c > 0.0 {
                        new.1 = new.1.min((limit + EPS).floor() as i64);
                    } else {
                        new.0 = new.0.max((limit - EPS).ceil() as i64);
                    }
                }
                if lower {
                    let limit = (row.rhs - (max_act - cmax)) / c;
                    if c > 0.0 {
                        new.0 = new.0.max((limit - EPS).ceil() as i64);
                    } else {
                        new.1 = new.1.min((limit + EPS).floor() as i64);
                    }
                }
                if new.0 > new.1 {
                    return false;
                }
                if new != dom[v] {
                    dom[v] = new;
                    for &r2 in &self.var_rows[v] {
                        if r2 != r && !queued[r2] {
                            queued[r2] = true;
                            queue.push(r2);
                        }
                    }
                    // activities of this row changed; revisit it
                    if !queued[r] {
                        queued[r] = true;
                        queue.push(r);
                    }
                }
            }
        }
        true
    }
}

/// Domains implied by fixing some variables; `None` when infeasible.
pub fn propagate_fixings(model: &MipModel, fixed: &[(VarId, i64)]) -> Result<Option<Domains>> {
    let prop = Propagator::new(model)?;
    let mut dom = prop.initial_domains();
    for &(v, x) in fixed {
        if x < dom[v].0 || x > dom[v].1 {
            return Ok(None);
        }
        dom[v] = (x, x);
    }
    Ok(prop.propagate(&mut dom, &[]).then_some(dom))
}

/// Counts assignments of an all-integer model that pass [`check_feasible`],
/// branching in declaration order with propagation at every node.
/// `cap` bounds the number of search nodes.
pub fn count_feasible(model: &MipModel, cap: u64) -> Result<u64> {
    let prop = Propagator::new(model)?;
    let mut dom = prop.initial_domains();
    if !prop.propagate(&mut dom, &[]) {
        return Ok(0);
    }
    let mut nodes = 0u64;
    let mut count = 0u64;
    let mut stack: Vec<Domains> = vec![dom];
    while let Some(dom) = stack.pop() {
        nodes += 1;
        if nodes > cap {
            return Err(Error::SpaceTooLarge(cap));
        }
        let Some(v) = dom.iter().position(|&(lo, hi)| lo < hi) else {
            let mut a = Assignment::empty(model);
            for (id, &(lo, _)) in dom.iter().enumerate() {
                a.set(id, lo as f64);
            }
            if check_feasible(model, &a)? {
                count += 1;
            }
            continue;
        };
        let (lo, hi) = dom[v];
        for x in (lo..=hi).rev() {
            let mut child = dom.clone();
            child[v] = (x, x);
            if prop.propagate(&mut child, &[v]) {
                stack.push(child);
            }
        }
    }
    Ok(count)
}
