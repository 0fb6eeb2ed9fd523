//! Graph and dataset files.
//!
//! A graph object is `{"directed", "n", "edges", "features", "num_labels"}`.
//! Graph files hold one object per line, a single object, or a JSON array;
//! dataset files are arrays of `{"graph": <graph object>, "y": <real>}`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::AttributedGraph;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphRecord {
    pub directed: bool,
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub features: Vec<Vec<u8>>,
    pub num_labels: usize,
}

impl From<&AttributedGraph> for GraphRecord {
    fn from(g: &AttributedGraph) -> Self {
        GraphRecord {
            directed: g.directed(),
            n: g.n(),
            edges: g.edges().into_iter().map(|(u, v)| [u, v]).collect(),
            features: g.feature_rows(),
            num_labels: g.num_labels(),
        }
    }
}

impl TryFrom<&GraphRecord> for AttributedGraph {
    type Error = Error;

    fn try_from(r: &GraphRecord) -> Result<Self> {
        let edges: Vec<(usize, usize)> = r.edges.iter().map(|e| (e[0], e[1])).collect();
        if r.features.len() != r.n {
            return Err(Error::DimensionMismatch(format!("{} feature rows for n={}", r.features.len(), r.n)));
        }
        AttributedGraph::from_edges(r.n, r.directed, &edges, &r.features, r.num_labels)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetEntry {
    pub graph: GraphRecord,
    pub y: f64,
}

/// A proposed graph tagged with the proposal it belongs to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProposalRecord {
    pub proposal_id: usize,
    pub graph: GraphRecord,
}

pub fn parse_graphs(text: &str) -> Result<Vec<AttributedGraph>> {
    let trimmed = text.trim();
    let records: Vec<GraphRecord> = if trimmed.starts_with('[') {
        serde_json::from_str(trimmed)?
    } else if let Ok(single) = serde_json::from_str::<GraphRecord>(trimmed) {
        vec![single]
    } else {
        trimmed
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                // lines of a proposal file carry an id wrapper
                serde_json::from_str::<GraphRecord>(l)
                    .or_else(|_| serde_json::from_str::<ProposalRecord>(l).map(|p| p.graph))
            })
            .collect::<std::result::Result<_, _>>()?
    };
    records.iter().map(AttributedGraph::try_from).collect()
}

pub fn read_graphs(path: &Path) -> Result<Vec<AttributedGraph>> {
    parse_graphs(&fs::read_to_string(path)?)
}

/// Reads a file that must contain exactly one graph.
pub fn read_graph(path: &Path) -> Result<AttributedGraph> {
    let mut graphs = read_graphs(path)?;
    if graphs.len() != 1 {
        return Err(Error::Parse(format!("{} holds {} graphs, expected one", path.display(), graphs.len())));
    }
    Ok(graphs.remove(0))
}

/// Writes one graph object per line.
pub fn write_graphs(path: &Path, graphs: &[AttributedGraph]) -> Result<()> {
    let mut out = String::new();
    for g in graphs {
        out.push_str(&serde_json::to_string(&GraphRecord::from(g))?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn append_proposal(path: &Path, proposal_id: usize, graph: &AttributedGraph) -> Result<()> {
    let mut file = fs::OpenOptions::new().create(true).append(true).open(path)?;
    let record = ProposalRecord { proposal_id, graph: GraphRecord::from(graph) };
    writeln!(file, "{}", serde_json::to_string(&record)?)?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<(Vec<AttributedGraph>, Vec<f64>)> {
    let entries: Vec<DatasetEntry> = serde_json::from_str(&fs::read_to_string(path)?)?;
    let mut graphs = Vec::with_capacity(entries.len());
    let mut ys = Vec::with_capacity(entries.len());
    for e in &entries {
        graphs.push(AttributedGraph::try_from(&e.graph)?);
        ys.push(e.y);
    }
    Ok((graphs, ys))
}

pub fn write_dataset(path: &Path, graphs: &[AttributedGraph], ys: &[f64]) -> Result<()> {
    let entries: Vec<DatasetEntry> =
        graphs.iter().zip(ys).map(|(g, &y)| DatasetEntry { graph: GraphRecord::from(g), y }).collect();
    fs::write(path, serde_json::to_string_pretty(&entries)?)?;
    Ok(())
}
