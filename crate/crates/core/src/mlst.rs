//! Multi-level Steiner tree extraction from a weighted graph.
//!
//! Terminals are ranked by node weight and split into `h` nested levels of
//! equal size. Levels are solved top-down with the shortest-path heuristic:
//! the tree grows by repeatedly attaching the nearest unconnected terminal
//! along a shortest path. The Dijkstra state is kept across attachments and
//! levels (tree nodes re-enter at distance zero), so lower levels reuse the
//! higher-level tree for free and nesting holds by construction.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DesiredLengths, EdgeId, EdgeRecord, LabeledTree, ModelError, NodeId, NodeRecord};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MlstError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("terminal {0} cannot be reached from the rest of the tree")]
    DisconnectedTerminals(u64),
    #[error("terminal sets are not nested")]
    NotNested,
    #[error("edge {edge} references unknown node {id}")]
    DanglingEdge { edge: usize, id: u64 },
    #[error("duplicate node id {0}")]
    DuplicateId(u64),
    #[error("edge {0} has a non-positive or non-finite weight")]
    BadEdgeWeight(usize),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Undirected graph with node importance weights and positive edge costs.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    nodes: Vec<NodeRecord>,
    // (neighbor, cost), parallel edges merged to the cheapest
    adjacency: Vec<Vec<(NodeId, f64)>>,
    edge_count: usize,
}

impl WeightedGraph {
    /// Builds the graph; self-loops are dropped and parallel edges keep the
    /// smallest cost. Node records are sorted by id.
    pub fn build(nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> Result<Self, MlstError> {
        if nodes.is_empty() {
            return Err(MlstError::EmptyGraph);
        }
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let mut index = FxHashMap::default();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(MlstError::DuplicateId(n.id));
            }
        }
        let mut best: FxHashMap<(NodeId, NodeId), f64> = FxHashMap::default();
        for (i, e) in edges.iter().enumerate() {
            let a = *index.get(&e.source).ok_or(MlstError::DanglingEdge { edge: i, id: e.source })?;
            let b = *index.get(&e.target).ok_or(MlstError::DanglingEdge { edge: i, id: e.target })?;
            if !(e.weight > 0.0 && e.weight.is_finite()) {
                return Err(MlstError::BadEdgeWeight(i));
            }
            if a == b {
                continue;
            }
            let w = best.entry((a.min(b), a.max(b))).or_insert(f64::INFINITY);
            *w = w.min(e.weight);
        }
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (&(a, b), &w) in &best {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by_key(|x| x.0);
        }
        Ok(WeightedGraph { nodes, adjacency, edge_count: best.len() })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn node(&self, v: NodeId) -> &NodeRecord {
        &self.nodes[v]
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, f64)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    /// Replaces every node weight with its degree.
    pub fn with_degree_weights(mut self) -> Self {
        for v in 0..self.nodes.len() {
            self.nodes[v].weight = self.adjacency[v].len() as f64;
        }
        self
    }
}

/// Default number of levels: `clamp(ceil(log2 n), 1, 16)`.
pub fn default_level_count(n: usize) -> usize {
    let bits = if n <= 1 { 0 } else { usize::BITS - (n - 1).leading_zeros() } as usize;
    bits.clamp(1, 16)
}

/// Default per-level length increment: `200 / (h - 1)`, or 0 for one level.
pub fn default_l_add(h: usize) -> f64 {
    if h >= 2 {
        200.0 / (h - 1) as f64
    } else {
        0.0
    }
}

/// Level (1 = most important) at which each node becomes a terminal.
///
/// Nodes are ranked by descending weight, ties by ascending id, and cut into
/// chunks of `ceil(n / h)`; level `i`'s terminal set is every node with level
/// `<= i`.
pub fn select_terminals(graph: &WeightedGraph, h: usize) -> Result<Vec<usize>, MlstError> {
    let n = graph.len();
    if n == 0 {
        return Err(MlstError::EmptyGraph);
    }
    let h = h.max(1);
    let chunk = n.div_ceil(h);
    let mut ranked: Vec<NodeId> = (0..n).collect();
    ranked.sort_by(|&a, &b| {
        graph.nodes[b].weight.partial_cmp(&graph.nodes[a].weight).unwrap_or(Ordering::Equal).then(a.cmp(&b))
    });
    let mut level = vec![0; n];
    for (rank, v) in ranked.into_iter().enumerate() {
        level[v] = (rank / chunk + 1).min(h);
    }
    Ok(level)
}

/// Cumulative terminal sets from per-node levels.
pub fn terminal_sets(levels: &[usize], h: usize) -> Vec<Vec<NodeId>> {
    (1..=h).map(|i| (0..levels.len()).filter(|&v| levels[v] >= 1 && levels[v] <= i).collect()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LengthMode {
    Uniform,
    Linear,
    /// Keep the current lengths.
    Given,
}

/// Nested trees `T_1 ⊂ … ⊂ T_h` stored as the largest tree plus levels.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiLevelTree {
    pub tree: LabeledTree,
    pub level_count: usize,
    /// Level at which each tree node first appears.
    pub node_level: Vec<usize>,
    /// Level at which each tree edge first appears.
    pub edge_level: Vec<usize>,
    /// Starts as the graph edge costs; see [`assign_edge_lengths`].
    pub desired_length: DesiredLengths,
}

impl MultiLevelTree {
    /// Checks that every level's edges form a tree spanning exactly that
    /// level's nodes.
    pub fn check_nesting(&self) -> Result<(), String> {
        let n = self.tree.len();
        for (v, &l) in self.node_level.iter().enumerate() {
            if l == 0 || l > self.level_count {
                return Err(format!("node {v} has level {l}"));
            }
        }
        for level in 1..=self.level_count {
            let nodes: Vec<NodeId> = (0..n).filter(|&v| self.node_level[v] <= level).collect();
            let edges: Vec<EdgeId> = (0..self.tree.edge_count()).filter(|&e| self.edge_level[e] <= level).collect();
            if nodes.is_empty() {
                if edges.is_empty() {
                    continue;
                }
                return Err(format!("level {level} has edges but no nodes"));
            }
            if edges.len() + 1 != nodes.len() {
                return Err(format!("level {level}: {} nodes, {} edges", nodes.len(), edges.len()));
            }
            // union-find over the level's edges
            let mut parent: Vec<NodeId> = (0..n).collect();
            fn find(p: &mut [NodeId], mut x: NodeId) -> NodeId {
                while p[x] != x {
                    p[x] = p[p[x]];
                    x = p[x];
                }
                x
            }
            for &e in &edges {
                let edge = self.tree.edge(e);
                if self.node_level[edge.a] > level || self.node_level[edge.b] > level {
                    return Err(format!("level {level}: edge {e} leaves the level's node set"));
                }
                let (ra, rb) = (find(&mut parent, edge.a), find(&mut parent, edge.b));
                if ra == rb {
                    return Err(format!("level {level}: cycle through edge {e}"));
                }
                parent[ra] = rb;
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, PartialEq)]
struct HeapEntry {
    dist: f64,
    node: NodeId,
}

impl Eq for HeapEntry {}

impl Ord for HeapEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on (dist, node)
        other.dist.total_cmp(&self.dist).then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for HeapEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Extracts nested Steiner trees spanning the given terminal levels.
///
/// `terminal_level[v]` is the level at which `v` must be connected, or 0 if
/// `v` is never a terminal. Nodes outside the final tree are dropped.
pub fn extract_mlst(graph: &WeightedGraph, terminal_level: &[usize]) -> Result<MultiLevelTree, MlstError> {
    let n = graph.len();
    if n == 0 {
        return Err(MlstError::EmptyGraph);
    }
    assert_eq!(terminal_level.len(), n, "one terminal level per node");
    let h = terminal_level.iter().copied().max().unwrap_or(0).max(1);

    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(NodeId, f64)>> = vec![None; n];
    let mut in_tree_level = vec![0usize; n];
    let mut heap = BinaryHeap::new();
    let mut tree_edges: Vec<(NodeId, NodeId, f64, usize)> = Vec::new();

    fn add_to_tree(v: NodeId, level: usize, dist: &mut [f64], heap: &mut BinaryHeap<HeapEntry>, in_tree: &mut [usize]) {
        in_tree[v] = level;
        dist[v] = 0.0;
        heap.push(HeapEntry { dist: 0.0, node: v });
    }

    for level in 1..=h {
        let pending: Vec<NodeId> = (0..n).filter(|&v| terminal_level[v] == level).collect();
        let mut remaining = pending.iter().filter(|&&v| in_tree_level[v] == 0).count();
        if remaining == 0 {
            continue;
        }
        if in_tree_level.iter().all(|&l| l == 0) {
            // the tree starts from the lowest-id terminal of the top level
            add_to_tree(pending[0], level, &mut dist, &mut heap, &mut in_tree_level);
            remaining -= 1;
        } else {
            // re-offer this level's terminals that were settled earlier
            for &v in &pending {
                if in_tree_level[v] == 0 && dist[v].is_finite() {
                    heap.push(HeapEntry { dist: dist[v], node: v });
                }
            }
        }
        while remaining > 0 {
            let Some(HeapEntry { dist: d, node: v }) = heap.pop() else {
                let missing = pending.iter().find(|&&v| in_tree_level[v] == 0).unwrap();
                return Err(MlstError::DisconnectedTerminals(graph.nodes[*missing].id));
            };
            if d > dist[v] {
                continue;
            }
            if in_tree_level[v] == 0 && terminal_level[v] == level {
                // attach the path back to the tree
                let mut x = v;
                while in_tree_level[x] == 0 {
                    let (p, w) = pred[x].expect("settled nodes off the tree have a predecessor");
                    tree_edges.push((p, x, w, level));
                    add_to_tree(x, level, &mut dist, &mut heap, &mut in_tree_level);
                    x = p;
                }
                remaining -= 1;
                continue;
            }
            for &(w, cost) in &graph.adjacency[v] {
                let nd = d + cost;
                if nd < dist[w] {
                    dist[w] = nd;
                    pred[w] = Some((v, cost));
                    heap.push(HeapEntry { dist: nd, node: w });
                }
            }
        }
    }

    let members: Vec<NodeId> = (0..n).filter(|&v| in_tree_level[v] > 0).collect();
    let nodes = members.iter().map(|&v| graph.nodes[v].clone()).collect();
    let edges =
        tree_edges.iter().map(|&(a, b, w, _)| EdgeRecord::new(graph.nodes[a].id, graph.nodes[b].id, w)).collect();
    let tree = LabeledTree::build(nodes, edges)?;
    let node_level = (0..tree.len()).map(|v| in_tree_level[graph_index(graph, tree.external_id(v))]).collect();
    let edge_level = tree_edges.iter().map(|&(_, _, _, l)| l).collect();
    let desired_length = DesiredLengths(tree_edges.iter().map(|&(_, _, w, _)| w).collect());
    Ok(MultiLevelTree { tree, level_count: h, node_level, edge_level, desired_length })
}

fn graph_index(graph: &WeightedGraph, id: u64) -> NodeId {
    graph.nodes.binary_search_by_key(&id, |n| n.id).expect("tree nodes come from the graph")
}

/// Assigns desired lengths: `l_min` everywhere (uniform), or
/// `l_min + (h - level) * l_add` (linear), so top-level edges are longest.
pub fn assign_edge_lengths(mut mlt: MultiLevelTree, mode: LengthMode, l_min: f64, l_add: f64) -> MultiLevelTree {
    let h = mlt.level_count;
    match mode {
        LengthMode::Uniform => mlt.desired_length = DesiredLengths(vec![l_min; mlt.edge_level.len()]),
        LengthMode::Linear => {
            mlt.desired_length =
                DesiredLengths(mlt.edge_level.iter().map(|&lv| l_min + (h - lv) as f64 * l_add).collect())
        }
        LengthMode::Given => {}
    }
    mlt
}
