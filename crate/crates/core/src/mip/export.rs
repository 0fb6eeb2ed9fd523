//! MPS and LP writers, with static piecewise-linear expansion of the
//! exponential links.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::domain::Sense;
use crate::error::{Error, Result};

use super::{Definition, LinearRow, MipModel, VarId, VarKind, VarTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Mps,
    Lp,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mps" => Ok(ExportFormat::Mps),
            "lp" => Ok(ExportFormat::Lp),
            other => Err(Error::Parse(format!("unknown export format `{other}`"))),
        }
    }
}

/// Breakpoints `j / (k - 1)` on `[0, 1]`.
fn breakpoint_grid(k: usize) -> Vec<f64> {
    (0..k).map(|j| j as f64 / (k - 1) as f64).collect()
}

/// Replaces every `e = exp(g)` link by `k - 1` segments with selector
/// binaries and big-M rows `EXP_i_j_{LO,HI,UB,LB}`; `g` must lie in `[0, 1]`.
pub fn expand_exponentials(model: &MipModel, breakpoints: usize) -> Result<MipModel> {
    if breakpoints < 2 {
        return Err(Error::Parse("piecewise expansion needs at least two breakpoints".into()));
    }
    let mut out = model.clone();
    let links: Vec<(VarId, VarId)> = model
        .definitions()
        .iter()
        .filter_map(|d| match *d {
            Definition::Exp { arg, out } => Some((arg, out)),
            _ => None,
        })
        .collect();
    let xs = breakpoint_grid(breakpoints);
    let (emin, emax) = (1.0f64, std::f64::consts::E);
    for (i, &(g, e)) in links.iter().enumerate() {
        let z: Vec<VarId> = (0..breakpoints - 1).map(|j| out.add_binary(VarTag::ExpSegment(i, j))).collect();
        let sel = z.iter().map(|&v| (v, 1.0)).collect();
        out.add_row(LinearRow::new(format!("EXP_{i}_SEL"), sel, Sense::Eq, 1.0));
        for j in 0..breakpoints - 1 {
            let (a, b) = (xs[j], xs[j + 1]);
            let slope = (b.exp() - a.exp()) / (b - a);
            let icpt = a.exp() - slope * a;
            let (l0, l1) = (icpt, icpt + slope);
            let big = (emax - l0.min(l1)).max(l0.max(l1) - emin);
            out.add_row(LinearRow::new(format!("EXP_{i}_{j}_LO"), vec![(g, 1.0), (z[j], -1.0)], Sense::Ge, a - 1.0));
            out.add_row(LinearRow::new(format!("EXP_{i}_{j}_HI"), vec![(g, 1.0), (z[j], 1.0)], Sense::Le, b + 1.0));
            let ub = vec![(e, 1.0), (g, -slope), (z[j], big)];
            out.add_row(LinearRow::new(format!("EXP_{i}_{j}_UB"), ub, Sense::Le, icpt + big));
            let lb = vec![(e, 1.0), (g, -slope), (z[j], -big)];
            out.add_row(LinearRow::new(format!("EXP_{i}_{j}_LB"), lb, Sense::Ge, icpt - big));
        }
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn sense_code(s: Sense) -> &'static str {
    match s {
        Sense::Le => "L",
        Sense::Ge => "G",
        Sense::Eq => "E",
    }
}

/// Free-format MPS with integer markers, explicit bounds and a
/// `QCMATRIX` section for the variance row.
pub fn write_mps(model: &MipModel) -> String {
    let mut s = String::new();
    let names: Vec<String> = model.variables().iter().map(|v| v.name()).collect();
    let mut columns: Vec<Vec<(String, f64)>> = vec![Vec::new(); model.num_vars()];
    for &(v, c) in model.objective() {
        columns[v].push(("obj".into(), c));
    }
    for r in model.rows() {
        for &(v, c) in &r.terms {
            columns[v].push((r.name.clone(), c));
        }
    }
    if let Some(q) = model.quadratic() {
        for &(v, c) in &q.linear {
            columns[v].push((q.name.clone(), c));
        }
    }
    let _ = writeln!(s, "NAME graphbo");
    let _ = writeln!(s, "OBJSENSE\n    MIN");
    let _ = writeln!(s, "ROWS\n N  obj");
    for r in model.rows() {
        let _ = writeln!(s, " {}  {}", sense_code(r.sense), r.name);
    }
    if let Some(q) = model.quadratic() {
        let _ = writeln!(s, " L  {}", q.name);
    }
    let _ = writeln!(s, "COLUMNS");
    let mut in_int = false;
    for var in model.variables() {
        let is_int = var.kind != VarKind::Continuous;
        if is_int != in_int {
            let tag = if is_int { "INTORG" } else { "INTEND" };
            let _ = writeln!(s, "    MARKER  'MARKER'  '{tag}'");
            in_int = is_int;
        }
        let entries = &columns[var.id];
        if entries.is_empty() {
            let _ = writeln!(s, "    {}  obj  0.0", names[var.id]);
        }
        for (row, c) in entries {
            let _ = writeln!(s, "    {}  {}  {}", names[var.id], row, num(*c));
        }
    }
    if in_int {
        let _ = writeln!(s, "    MARKER  'MARKER'  'INTEND'");
    }
    let _ = writeln!(s, "RHS");
    for r in model.rows().iter().filter(|r| r.rhs != 0.0) {
        let _ = writeln!(s, "    RHS  {}  {}", r.name, num(r.rhs));
    }
    if let Some(q) = model.quadratic().filter(|q| q.rhs != 0.0) {
        let _ = writeln!(s, "    RHS  {}  {}", q.name, num(q.rhs));
    }
    let _ = writeln!(s, "BOUNDS");
    for var in model.variables() {
        let n = &names[var.id];
        match var.kind {
            VarKind::Binary => {
                let _ = writeln!(s, " BV BND  {n}");
            }
            kind => {
                let (lo, up) = if kind == VarKind::Integer { ("LI", "UI") } else { ("LO", "UP") };
                if var.lower == f64::NEG_INFINITY && var.upper == f64::INFINITY {
                    let _ = writeln!(s, " FR BND  {n}");
                    continue;
                }
                if var.lower == f64::NEG_INFINITY {
                    let _ = writeln!(s, " MI BND  {n}");
                } else {
                    let _ = writeln!(s, " {lo} BND  {n}  {}", num(var.lower));
                }
                if var.upper.is_finite() {
                    let _ = writeln!(s, " {up} BND  {n}  {}", num(var.upper));
                } else {
                    let _ = writeln!(s, " PL BND  {n}");
                }
            }
        }
    }
    if let Some(q) = model.quadratic() {
        let _ = writeln!(s, "QCMATRIX  {}", q.name);
        if let Some(sq) = q.square_var {
            let _ = writeln!(s, "    {}  {}  1.0", names[sq], names[sq]);
        }
        for &(i, j, c) in &q.quad {
            if i == j {
                let _ = writeln!(s, "    {}  {}  {}", names[i], names[j], num(c));
            } else {
                let _ = writeln!(s, "    {}  {}  {}", names[i], names[j], num(c / 2.0));
                let _ = writeln!(s, "    {}  {}  {}", names[j], names[i], num(c / 2.0));
            }
        }
    }
    let _ = writeln!(s, "ENDATA");
    s
}

fn lp_terms(s: &mut String, terms: &[(VarId, f64)], names: &[String]) {
    for (k, &(v, c)) in terms.iter().enumerate() {
        if k > 0 && k % 8 == 0 {
            s.push_str("\n   ");
        }
        let sign = if c.is_sign_negative() { '-' } else { '+' };
        let _ = write!(s, " {sign} {} {}", num(c.abs()), names[v]);
    }
}

fn lp_sense(s: Sense) -> &'static str {
    match s {
        Sense::Le => "<=",
        Sense::Ge => ">=",
        Sense::Eq => "=",
    }
}

fn lp_bound(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        num(x)
    }
}

/// LP text equivalent of [`write_mps`].
pub fn write_lp(model: &MipModel) -> String {
    let names: Vec<String> = model.variables().iter().map(|v| v.name()).collect();
    let mut s = String::from("\\ graphbo\nMinimize\n obj:");
    lp_terms(&mut s, model.objective(), &names);
    s.push_str("\nSubject To\n");
    for r in model.rows() {
        let _ = write!(s, " {}:", r.name);
        if r.terms.is_empty() {
            let _ = write!(s, " + 0.0 {}", names[0]);
        }
        lp_terms(&mut s, &r.terms, &names);
        let _ = writeln!(s, " {} {}", lp_sense(r.sense), num(r.rhs));
    }
    if let Some(q) = model.quadratic() {
        let _ = write!(s, " {}:", q.name);
        lp_terms(&mut s, &q.linear, &names);
        s.push_str(" + [");
        if let Some(sq) = q.square_var {
            let _ = write!(s, " + 1.0 {} ^ 2", names[sq]);
        }
        for &(i, j, c) in &q.quad {
            let sign = if c.is_sign_negative() { '-' } else { '+' };
            if i == j {
                let _ = write!(s, "\n    {sign} {} {} ^ 2", num(c.abs()), names[i]);
            } else {
                let _ = write!(s, "\n    {sign} {} {} * {}", num(c.abs()), names[i], names[j]);
            }
        }
        let _ = writeln!(s, " ] <= {}", num(q.rhs));
    }
    s.push_str("Bounds\n");
    for var in model.variables().iter().filter(|v| v.kind != VarKind::Binary) {
        if var.lower == f64::NEG_INFINITY && var.upper == f64::INFINITY {
            let _ = writeln!(s, " {} free", names[var.id]);
        } else {
            let _ = writeln!(s, " {} <= {} <= {}", lp_bound(var.lower), names[var.id], lp_bound(var.upper));
        }
    }
    for (title, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let list: Vec<&String> = model.variables().iter().filter(|v| v.kind == kind).map(|v| &names[v.id]).collect();
        if list.is_empty() {
            continue;
        }
        let _ = writeln!(s, "{title}");
        for chunk in list.chunks(10) {
            let line: Vec<&str> = chunk.iter().map(|x| x.as_str()).collect();
            let _ = writeln!(s, " {}", line.join(" "));
        }
    }
    s.push_str("End\n");
    s
}

/// Writes a fixed-size model to `path`, expanding exponentials first.
pub fn export_model(model: &MipModel, format: ExportFormat, breakpoints: usize, path: &Path) -> Result<()> {
    if !model.meta.size.is_fixed() {
        return Err(Error::UnsupportedBoundedSizeExport);
    }
    let expanded = expand_exponentials(model, breakpoints)?;
    let text = match format {
        ExportFormat::Mps => write_mps(&expanded),
        ExportFormat::Lp => write_lp(&expanded),
    };
    fs::write(path, text)?;
    Ok(())
}
