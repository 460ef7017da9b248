//! Graph input formats and the map document written for the viewer.
//!
//! Canonical JSON input:
//!
//! ```json
//! {"nodes": [{"id": 1, "label": "a", "weight": 2.0}],
//!  "edges": [{"source": 1, "target": 2, "weight": 0.5}]}
//! ```
//!
//! Ids may be integers or strings. String ids are numbered in order of first
//! appearance and, when a node has no label, the string becomes the label.
//! Missing edge weights default to 1. When any node weight is missing, node
//! importance falls back to degree.
//!
//! TSV input is two files, `id<TAB>label<TAB>weight` and
//! `source<TAB>target<TAB>weight`. Blank lines and lines starting with `#`
//! are skipped.

use std::fs;
use std::path::Path;

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::Rect;
use crate::metrics::MetricsReport;
use crate::mlst::MultiLevelTree;
use crate::model::{
    DesiredLengths, EdgeRecord, LabelBox, LabelGeometry, LabeledTree, Layout, LayoutParams, ModelError, NodeRecord,
    Point,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Parse { source_name: String, line: usize, column: usize, message: String },
    #[error("{source_name}:{line}: edge references unknown node {id}")]
    DanglingEdge { source_name: String, line: usize, id: String },
    #[error("cannot read {path}: {error}")]
    Read { path: String, error: std::io::Error },
    #[error("invalid map document: {0}")]
    InvalidDocument(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExternalId {
    Int(u64),
    Str(String),
}

#[derive(Deserialize)]
struct RawNode {
    id: ExternalId,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Deserialize)]
struct RawEdge {
    source: ExternalId,
    target: ExternalId,
    #[serde(default)]
    weight: Option<f64>,
}

#[derive(Deserialize)]
struct RawGraph {
    nodes: Vec<RawNode>,
    #[serde(default)]
    edges: Vec<RawEdge>,
}

/// Parsed input before any tree or hierarchy checks.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub nodes: Vec<NodeRecord>,
    pub edges: Vec<EdgeRecord>,
    /// False when at least one node came without a weight.
    pub node_weights_given: bool,
}

impl GraphInput {
    /// Replaces every edge weight `w` by `1 / w`, turning similarities into
    /// dissimilarities.
    pub fn reciprocal(mut self) -> Self {
        for e in &mut self.edges {
            e.weight = 1.0 / e.weight;
        }
        self
    }

    pub fn into_tree(self) -> Result<LabeledTree, ModelError> {
        LabeledTree::build(self.nodes, self.edges)
    }
}

/// Assigns dense numeric ids; integer ids are kept as they are.
#[derive(Default)]
struct IdTable {
    ints: FxHashSet<u64>,
    strings: FxHashMap<String, u64>,
    next: u64,
}

impl IdTable {
    fn with_ints(ints: impl Iterator<Item = u64>) -> Self {
        let ints: FxHashSet<u64> = ints.collect();
        let next = ints.iter().max().map_or(0, |m| m + 1);
        IdTable { ints, strings: FxHashMap::default(), next }
    }

    fn intern(&mut self, id: &ExternalId) -> u64 {
        match id {
            ExternalId::Int(i) => *i,
            ExternalId::Str(s) => *self.strings.entry(s.clone()).or_insert_with(|| {
                self.next += 1;
                self.next - 1
            }),
        }
    }

    fn lookup(&self, id: &ExternalId) -> Option<u64> {
        match id {
            ExternalId::Int(i) => self.ints.contains(i).then_some(*i),
            ExternalId::Str(s) => self.strings.get(s).copied(),
        }
    }
}

fn id_text(id: &ExternalId) -> String {
    match id {
        ExternalId::Int(i) => i.to_string(),
        ExternalId::Str(s) => s.clone(),
    }
}

fn json_error(source_name: &str, e: serde_json::Error) -> IoError {
    IoError::Parse { source_name: source_name.into(), line: e.line(), column: e.column(), message: e.to_string() }
}

pub fn parse_json(text: &str, source_name: &str) -> Result<GraphInput, IoError> {
    let raw: RawGraph = serde_json::from_str(text).map_err(|e| json_error(source_name, e))?;
    let mut ids = IdTable::with_ints(raw.nodes.iter().filter_map(|n| match n.id {
        ExternalId::Int(i) => Some(i),
        ExternalId::Str(_) => None,
    }));
    let node_weights_given = raw.nodes.iter().all(|n| n.weight.is_some());
    let nodes = raw
        .nodes
        .iter()
        .map(|n| {
            NodeRecord::new(
                ids.intern(&n.id),
                n.label.clone().unwrap_or_else(|| id_text(&n.id)),
                n.weight.unwrap_or(1.0),
            )
        })
        .collect();
    let mut edges = Vec::with_capacity(raw.edges.len());
    for (i, e) in raw.edges.iter().enumerate() {
        let end = |id: &ExternalId| {
            ids.lookup(id).ok_or_else(|| IoError::DanglingEdge {
                source_name: source_name.into(),
                line: i + 1,
                id: id_text(id),
            })
        };
        edges.push(EdgeRecord::new(end(&e.source)?, end(&e.target)?, e.weight.unwrap_or(1.0)));
    }
    Ok(GraphInput { nodes, edges, node_weights_given })
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, line)| {
        let trimmed = line.trim_end_matches('\r');
        if trimmed.trim().is_empty() || trimmed.starts_with('#') {
            None
        } else {
            Some((i + 1, trimmed.split('\t').collect()))
        }
    })
}

fn parse_weight(field: Option<&&str>, source_name: &str, line: usize, column: usize) -> Result<Option<f64>, IoError> {
    match field.map(|f| f.trim()).filter(|f| !f.is_empty()) {
        None => Ok(None),
        Some(f) => f.parse::<f64>().map(Some).map_err(|_| IoError::Parse {
            source_name: source_name.into(),
            line,
            column,
            message: format!("invalid weight {f:?}"),
        }),
    }
}

fn tsv_id(field: &str) -> ExternalId {
    match field.trim().parse::<u64>() {
        Ok(i) => ExternalId::Int(i),
        Err(_) => ExternalId::Str(field.trim().to_string()),
    }
}

pub fn parse_tsv(
    nodes_text: &str,
    edges_text: &str,
    nodes_name: &str,
    edges_name: &str,
) -> Result<GraphInput, IoError> {
    let node_rows: Vec<(usize, Vec<&str>)> = data_lines(nodes_text).collect();
    let mut ids = IdTable::with_ints(node_rows.iter().filter_map(|(_, f)| f[0].trim().parse::<u64>().ok()));
    let mut nodes = Vec::with_capacity(node_rows.len());
    let mut node_weights_given = true;
    for (line, fields) in &node_rows {
        let id = tsv_id(fields[0]);
        let label = fields.get(1).map(|s| s.to_string()).unwrap_or_else(|| id_text(&id));
        let column = fields[0].len() + fields.get(1).map_or(0, |f| f.len() + 1) + 2;
        let weight = parse_weight(fields.get(2), nodes_name, *line, column)?;
        node_weights_given &= weight.is_some();
        nodes.push(NodeRecord::new(ids.intern(&id), label, weight.unwrap_or(1.0)));
    }
    let mut edges = Vec::new();
    for (line, fields) in data_lines(edges_text) {
        if fields.len() < 2 {
            return Err(IoError::Parse {
                source_name: edges_name.into(),
                line,
                column: 1,
                message: "expected source<TAB>target[<TAB>weight]".into(),
            });
        }
        let end = |f: &str| {
            let id = tsv_id(f);
            ids.lookup(&id).ok_or(IoError::DanglingEdge { source_name: edges_name.into(), line, id: id_text(&id) })
        };
        let (a, b) = (end(fields[0])?, end(fields[1])?);
        let column = fields[0].len() + fields[1].len() + 3;
        let weight = parse_weight(fields.get(2), edges_name, line, column)?.unwrap_or(1.0);
        edges.push(EdgeRecord::new(a, b, weight));
    }
    Ok(GraphInput { nodes, edges, node_weights_given })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Tsv,
}

impl Format {
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("tsv") | Some("txt") => Format::Tsv,
            _ => Format::Json,
        }
    }
}

fn read(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|error| IoError::Read { path: path.display().to_string(), error })
}

/// Reads a graph; TSV input needs the edge file as `edges_path`.
pub fn read_graph(path: &Path, format: Format, edges_path: Option<&Path>) -> Result<GraphInput, IoError> {
    let name = path.display().to_string();
    match format {
        Format::Json => parse_json(&read(path)?, &name),
        Format::Tsv => {
            let edges_path = edges_path.ok_or_else(|| IoError::Parse {
                source_name: name.clone(),
                line: 0,
                column: 0,
                message: "TSV input needs a separate edge file".into(),
            })?;
            parse_tsv(&read(path)?, &read(edges_path)?, &name, &edges_path.display().to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapNode {
    pub id: u64,
    pub label: String,
    pub weight: f64,
    pub x: f64,
    pub y: f64,
    pub level: usize,
    pub label_w: f64,
    pub label_h: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapEdge {
    pub source: u64,
    pub target: u64,
    pub level: usize,
    pub desired_length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapMeta {
    pub level_count: usize,
    pub bounds: Rect,
    pub params: LayoutParams,
    pub metrics: MetricsReport,
    pub tool_version: String,
    pub seed: u64,
    pub init: String,
    pub mode: String,
    pub root: u64,
    /// Zoom factors at which levels 2..=h become visible.
    pub zoom_thresholds: Vec<f64>,
}

/// A finished layout with its hierarchy, as consumed by the viewer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapDocument {
    pub nodes: Vec<MapNode>,
    pub edges: Vec<MapEdge>,
    pub meta: MapMeta,
}

/// Geometric zoom steps: level `i + 1` appears at zoom `2^i`.
pub fn default_zoom_thresholds(level_count: usize) -> Vec<f64> {
    (1..level_count).map(|i| 2f64.powi(i as i32)).collect()
}

impl MapDocument {
    pub fn from_json(text: &str) -> Result<Self, IoError> {
        serde_json::from_str(text).map_err(|e| json_error("map document", e))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("map documents always serialize")
    }

    pub fn tree(&self) -> Result<LabeledTree, ModelError> {
        LabeledTree::build(
            self.nodes.iter().map(|n| NodeRecord::new(n.id, n.label.clone(), n.weight)).collect(),
            self.edges.iter().map(|e| EdgeRecord::new(e.source, e.target, e.desired_length)).collect(),
        )
    }

    /// Node positions in the tree's dense order (ascending id).
    pub fn layout(&self) -> Layout {
        let mut nodes: Vec<&MapNode> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        Layout::new(nodes.iter().map(|n| Point::new(n.x, n.y)).collect())
    }

    pub fn geometry(&self) -> Result<LabelGeometry, ModelError> {
        let mut nodes: Vec<&MapNode> = self.nodes.iter().collect();
        nodes.sort_by_key(|n| n.id);
        LabelGeometry::new(nodes.iter().map(|n| LabelBox { width: n.label_w, height: n.label_h }).collect())
    }

    pub fn lengths(&self) -> DesiredLengths {
        DesiredLengths(self.edges.iter().map(|e| e.desired_length).collect())
    }

    pub fn hierarchy(&self) -> Result<MultiLevelTree, ModelError> {
        let tree = self.tree()?;
        let mut node_level = vec![0; tree.len()];
        for n in &self.nodes {
            node_level[tree.node_of(n.id).expect("tree built from these nodes")] = n.level;
        }
        Ok(MultiLevelTree {
            tree,
            level_count: self.meta.level_count,
            node_level,
            edge_level: self.edges.iter().map(|e| e.level).collect(),
            desired_length: self.lengths(),
        })
    }

    /// Checks levels, nesting and finiteness.
    pub fn validate(&self) -> Result<(), IoError> {
        let bad = |m: String| Err(IoError::InvalidDocument(m));
        let h = self.meta.level_count;
        for n in &self.nodes {
            if n.level == 0 || n.level > h {
                return bad(format!("node {} has level {} outside 1..={h}", n.id, n.level));
            }
            if !(n.x.is_finite() && n.y.is_finite()) {
                return bad(format!("node {} has a non-finite position", n.id));
            }
        }
        for e in &self.edges {
            if e.level == 0 || e.level > h {
                return bad(format!("edge {}-{} has level {} outside 1..={h}", e.source, e.target, e.level));
            }
        }
        self.hierarchy()?.check_nesting().map_err(IoError::InvalidDocument)
    }

    /// Nodes with level `<= level`, plus the edges between them.
    pub fn filter_level(&self, level: usize) -> (Vec<&MapNode>, Vec<&MapEdge>) {
        (
            self.nodes.iter().filter(|n| n.level <= level).collect(),
            self.edges.iter().filter(|e| e.level <= level).collect(),
        )
    }
}
