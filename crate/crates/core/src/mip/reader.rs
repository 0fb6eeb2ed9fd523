//! Readers for the MPS and LP text produced by the writers in this module.

use std::collections::HashMap;

use crate::domain::Sense;
use crate::error::{Error, Result};

use super::VarKind;

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedColumn {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedRow {
    pub name: String,
    pub sense: Sense,
    pub terms: Vec<(String, f64)>,
    pub rhs: f64,
}

/// Quadratic row with entries merged to `(a, b)` pairs in column order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedQuadRow {
    pub name: String,
    pub linear: Vec<(String, f64)>,
    pub quad: Vec<(String, String, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParsedModel {
    pub columns: Vec<ParsedColumn>,
    pub rows: Vec<ParsedRow>,
    pub quadratic: Vec<ParsedQuadRow>,
    pub objective: Vec<(String, f64)>,
}

impl ParsedModel {
    pub fn num_constraints(&self) -> usize {
        self.rows.len() + self.quadratic.len()
    }

    pub fn objective_map(&self) -> HashMap<String, f64> {
        let mut map = HashMap::new();
        for (n, c) in &self.objective {
            *map.entry(n.clone()).or_insert(0.0) += c;
        }
        map.retain(|_, c| *c != 0.0);
        map
    }

    fn column_order(&self) -> HashMap<&str, usize> {
        self.columns.iter().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect()
    }

    fn canonical_quad(&self, entries: Vec<(String, String, f64)>) -> Vec<(String, String, f64)> {
        let order = self.column_order();
        let mut merged: Vec<(String, String, f64)> = Vec::new();
        for (a, b, c) in entries {
            let (a, b) = if order.get(a.as_str()) <= order.get(b.as_str()) { (a, b) } else { (b, a) };
            match merged.iter_mut().find(|(x, y, _)| *x == a && *y == b) {
                Some(slot) => slot.2 += c,
                None => merged.push((a, b, c)),
            }
        }
        merged
    }
}

fn parse_num(tok: &str) -> Result<f64> {
    match tok {
        "+inf" | "inf" | "+infinity" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{tok}`"))),
    }
}

fn bad(line: &str) -> Error {
    Error::Parse(format!("unexpected line `{line}`"))
}

pub fn parse_mps(text: &str) -> Result<ParsedModel> {
    let mut model = ParsedModel::default();
    let mut section = String::new();
    let mut row_sense: Vec<(String, Option<Sense>)> = Vec::new();
    let mut row_terms: HashMap<String, Vec<(String, f64)>> = HashMap::new();
    let mut rhs: HashMap<String, f64> = HashMap::new();
    let mut quad: HashMap<String, Vec<(String, String, f64)>> = HashMap::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut integer = false;
    let mut qc_row = String::new();
    let mut objective_name = String::new();
    for line in text.lines() {
        if line.trim().is_empty() || line.starts_with('*') {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        if !line.starts_with(' ') {
            section = toks[0].to_string();
            if section == "QCMATRIX" {
                qc_row = toks.get(1).ok_or_else(|| bad(line))?.to_string();
            }
            continue;
        }
        match section.as_str() {
            "OBJSENSE" => {
                if toks[0] != "MIN" {
                    return Err(Error::Parse("only minimization is supported".into()));
                }
            }
            "ROWS" => {
                let sense = match toks[0] {
                    "N" => None,
                    "L" => Some(Sense::Le),
                    "G" => Some(Sense::Ge),
                    "E" => Some(Sense::Eq),
                    _ => return Err(bad(line)),
                };
                if sense.is_none() {
                    objective_name = toks[1].to_string();
                }
                row_sense.push((toks[1].to_string(), sense));
            }
            "COLUMNS" => {
                if toks.get(1) == Some(&"'MARKER'") {
                    integer = toks[2] == "'INTORG'";
                    continue;
                }
                let name = toks[0].to_string();
                if !col_index.contains_key(&name) {
                    col_index.insert(name.clone(), model.columns.len());
                    let kind = if integer { VarKind::Integer } else { VarKind::Continuous };
                    model.columns.push(ParsedColumn { name: name.clone(), kind, lower: 0.0, upper: f64::INFINITY });
                }
                for pair in toks[1..].chunks(2) {
                    let [row, value] = pair else { return Err(bad(line)) };
                    let value = parse_num(value)?;
                    if *row == objective_name {
                        if value != 0.0 {
                            model.objective.push((name.clone(), value));
                        }
                    } else {
                        row_terms.entry(row.to_string()).or_default().push((name.clone(), value));
                    }
                }
            }
            "RHS" => {
                for pair in toks[1..].chunks(2) {
                    let [row, value] = pair else { return Err(bad(line)) };
                    rhs.insert(row.to_string(), parse_num(value)?);
                }
            }
            "BOUNDS" => {
                let col = *col_index.get(toks[2]).ok_or_else(|| bad(line))?;
                let c = &mut model.columns[col];
                let value = toks.get(3).map(|t| parse_num(t)).transpose()?;
                match (toks[0], value) {
                    ("BV", _) => {
                        c.kind = VarKind::Binary;
                        c.lower = 0.0;
                        c.upper = 1.0;
                    }
                    ("LO" | "LI", Some(v)) => c.lower = v,
                    ("UP" | "UI", Some(v)) => c.upper = v,
                    ("FX", Some(v)) => {
                        c.lower = v;
                        c.upper = v;
                    }
                    ("FR", _) => {
                        c.lower = f64::NEG_INFINITY;
                        c.upper = f64::INFINITY;
                    }
                    ("MI", _) => c.lower = f64::NEG_INFINITY,
                    ("PL", _) => c.upper = f64::INFINITY,
                    _ => return Err(bad(line)),
                }
            }
            "QCMATRIX" => {
                let [a, b, v] = toks[..] else { return Err(bad(line)) };
                quad.entry(qc_row.clone()).or_default().push((a.to_string(), b.to_string(), parse_num(v)?));
            }
            _ => return Err(bad(line)),
        }
    }
    for (name, sense) in row_sense {
        let Some(sense) = sense else { continue };
        let terms = row_terms.remove(&name).unwrap_or_default();
        let r = rhs.get(&name).copied().unwrap_or(0.0);
        if let Some(q) = quad.remove(&name) {
            let quad = model.canonical_quad(q);
            model.quadratic.push(ParsedQuadRow { name, linear: terms, quad, rhs: r });
        } else {
            model.rows.push(ParsedRow { name, sense, terms, rhs: r });
        }
    }
    Ok(model)
}

/// Reads `sign coef name` triples (and `[ ... ]` quadratic groups) until a
/// sense token; returns the linear and quadratic parts.
#[allow(clippy::type_complexity)]
fn lp_expression<'a>(
    toks: &mut std::iter::Peekable<impl Iterator<Item = &'a str>>,
) -> Result<(Vec<(String, f64)>, Vec<(String, String, f64)>)> {
    let mut linear = Vec::new();
    let mut quad = Vec::new();
    let mut in_quad = false;
    while let Some(&t) = toks.peek() {
        match t {
            "[" => {
                in_quad = true;
                toks.next();
            }
            "]" => {
                in_quad = false;
                toks.next();
            }
            "+" | "-" => {
                toks.next();
                let sign = if t == "-" { -1.0 } else { 1.0 };
                let next = toks.next().ok_or_else(|| Error::Parse("dangling sign".into()))?;
                if next == "[" {
                    in_quad = true;
                    continue;
                }
                let coef = sign * parse_num(next)?;
                let name = toks.next().ok_or_else(|| Error::Parse("missing variable".into()))?.to_string();
                if in_quad {
                    match toks.next() {
                        Some("^") => {
                            toks.next();
                            quad.push((name.clone(), name, coef));
                        }
                        Some("*") => {
                            let other = toks.next().ok_or_else(|| Error::Parse("missing factor".into()))?;
                            quad.push((name, other.to_string(), coef));
                        }
                        _ => return Err(Error::Parse("malformed quadratic term".into())),
                    }
                } else {
                    linear.push((name, coef));
                }
            }
            _ => break,
        }
    }
    Ok((linear, quad))
}

pub fn parse_lp(text: &str) -> Result<ParsedModel> {
    let mut model = ParsedModel::default();
    let body: String = text.lines().filter(|l| !l.trim_start().starts_with('\\')).collect::<Vec<_>>().join("\n");
    let mut toks = body.split_whitespace().peekable();
    let mut kinds: HashMap<String, VarKind> = HashMap::new();
    let mut bounds: HashMap<String, (f64, f64)> = HashMap::new();
    let mut order: Vec<String> = Vec::new();
    let seen = |name: &str, order: &mut Vec<String>| {
        if !order.iter().any(|n| n == name) {
            order.push(name.to_string());
        }
    };
    let mut raw_quad: Vec<(String, Vec<(String, f64)>, Vec<(String, String, f64)>, f64)> = Vec::new();
    while let Some(t) = toks.next() {
        match t {
            "Minimize" => {
                let label = toks.next().ok_or_else(|| Error::Parse("missing objective label".into()))?;
                if !label.ends_with(':') {
                    return Err(Error::Parse("objective needs a label".into()));
                }
                let (lin, _) = lp_expression(&mut toks)?;
                for (n, _) in &lin {
                    seen(n, &mut order);
                }
                model.objective = lin.into_iter().filter(|(_, c)| *c != 0.0).collect();
            }
            "Subject" => {
                if toks.next() != Some("To") {
                    return Err(Error::Parse("expected `Subject To`".into()));
                }
                while let Some(&label) = toks.peek() {
                    if !label.ends_with(':') {
                        break;
                    }
                    toks.next();
                    let name = label.trim_end_matches(':').to_string();
                    let (linear, quad) = lp_expression(&mut toks)?;
                    for (n, _) in &linear {
                        seen(n, &mut order);
                    }
                    let sense = match toks.next() {
                        Some("<=") => Sense::Le,
                        Some(">=") => Sense::Ge,
                        Some("=") => Sense::Eq,
                        other => return Err(Error::Parse(format!("bad sense {other:?} in row {name}"))),
                    };
                    let rhs = parse_num(toks.next().ok_or_else(|| Error::Parse("missing rhs".into()))?)?;
                    if quad.is_empty() {
                        let terms = linear.into_iter().filter(|(_, c)| *c != 0.0).collect();
                        model.rows.push(ParsedRow { name, sense, terms, rhs });
                    } else {
                        raw_quad.push((name, linear, quad, rhs));
                    }
                }
            }
            "Bounds" => {
                while let Some(&first) = toks.peek() {
                    if matches!(first, "Binaries" | "Generals" | "End") {
                        break;
                    }
                    toks.next();
                    let second = toks.next().ok_or_else(|| Error::Parse("truncated bound".into()))?;
                    if second == "free" {
                        seen(first, &mut order);
                        bounds.insert(first.to_string(), (f64::NEG_INFINITY, f64::INFINITY));
                        continue;
                    }
                    let name = toks.next().ok_or_else(|| Error::Parse("truncated bound".into()))?;
                    toks.next();
                    let hi = parse_num(toks.next().ok_or_else(|| Error::Parse("truncated bound".into()))?)?;
                    seen(name, &mut order);
                    bounds.insert(name.to_string(), (parse_num(first)?, hi));
                }
            }
            "Binaries" | "Generals" => {
                let kind = if t == "Binaries" { VarKind::Binary } else { VarKind::Integer };
                while let Some(&name) = toks.peek() {
                    if matches!(name, "Binaries" | "Generals" | "End") {
                        break;
                    }
                    toks.next();
                    seen(name, &mut order);
                    kinds.insert(name.to_string(), kind);
                }
            }
            "End" => break,
            other => return Err(Error::Parse(format!("unexpected token `{other}`"))),
        }
    }
    for (_, _, quad, _) in &raw_quad {
        for (a, b, _) in quad {
            seen(a, &mut order);
            seen(b, &mut order);
        }
    }
    model.columns = order
        .into_iter()
        .map(|name| {
            let kind = kinds.get(&name).copied().unwrap_or(VarKind::Continuous);
            let (lower, upper) = match kind {
                VarKind::Binary => (0.0, 1.0),
                _ => bounds.get(&name).copied().unwrap_or((0.0, f64::INFINITY)),
            };
            ParsedColumn { name, kind, lower, upper }
        })
        .collect();
    for (name, linear, quad, rhs) in raw_quad {
        let quad = model.canonical_quad(quad);
        model.quadratic.push(ParsedQuadRow { name, linear, quad, rhs });
    }
    Ok(model)
}
