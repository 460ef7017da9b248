//! Tree model, label boxes, layouts and the shared parameter bundle.

use std::collections::VecDeque;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use rustc_hash::{FxHashMap, FxHashSet};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dense node index, `0..tree.len()`.
pub type NodeId = usize;
/// Dense edge index, `0..tree.edge_count()`.
pub type EdgeId = usize;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("tree has no nodes")]
    Empty,
    #[error("not a tree: {0}")]
    NotATree(String),
    #[error("duplicate node id {0}")]
    DuplicateId(u64),
    #[error("edge {edge} references unknown node {id}")]
    DanglingEdge { edge: usize, id: u64 },
    #[error("unknown root {0}")]
    UnknownRoot(NodeId),
    #[error("invalid weight {value} on {what}")]
    InvalidWeight { what: String, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn from_polar(radius: f64, angle: f64) -> Self {
        Point::new(radius * angle.cos(), radius * angle.sin())
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    /// Rescales to at most `max_len`, leaving shorter vectors untouched.
    pub fn clamp_norm(self, max_len: f64) -> Point {
        let n = self.norm();
        if n > max_len && n > 0.0 {
            self * (max_len / n)
        } else {
            self
        }
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl AddAssign for Point {
    fn add_assign(&mut self, o: Point) {
        self.x += o.x;
        self.y += o.y;
    }
}

impl SubAssign for Point {
    fn sub_assign(&mut self, o: Point) {
        self.x -= o.x;
        self.y -= o.y;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: u64,
    pub label: String,
    pub weight: f64,
}

impl NodeRecord {
    pub fn new(id: u64, label: impl Into<String>, weight: f64) -> Self {
        NodeRecord { id, label: label.into(), weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub source: u64,
    pub target: u64,
    pub weight: f64,
}

impl EdgeRecord {
    pub fn new(source: u64, target: u64, weight: f64) -> Self {
        EdgeRecord { source, target, weight }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub a: NodeId,
    pub b: NodeId,
    pub weight: f64,
}

impl Edge {
    pub fn other(&self, v: NodeId) -> NodeId {
        if self.a == v {
            self.b
        } else {
            self.a
        }
    }

    pub fn touches(&self, v: NodeId) -> bool {
        self.a == v || self.b == v
    }
}

/// An unrooted tree with labeled, weighted nodes and weighted edges.
///
/// Node records are sorted by external id on construction, so dense indices
/// follow ascending id and every "ascending id" ordering is a plain index
/// ordering. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledTree {
    ids: Vec<u64>,
    labels: Vec<String>,
    weights: Vec<f64>,
    edges: Vec<Edge>,
    // (neighbor, edge) sorted by neighbor
    adjacency: Vec<Vec<(NodeId, EdgeId)>>,
}

impl LabeledTree {
    /// Validates the records and builds the tree.
    pub fn build(nodes: Vec<NodeRecord>, edges: Vec<EdgeRecord>) -> Result<Self, ModelError> {
        if nodes.is_empty() {
            return Err(ModelError::Empty);
        }
        let mut nodes = nodes;
        nodes.sort_by_key(|n| n.id);
        let mut index = FxHashMap::default();
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.id, i).is_some() {
                return Err(ModelError::DuplicateId(n.id));
            }
            if !(n.weight.is_finite() && n.weight >= 0.0) {
                return Err(ModelError::InvalidWeight { what: format!("node {}", n.id), value: n.weight });
            }
        }
        let n = nodes.len();
        let mut built = Vec::with_capacity(edges.len());
        let mut seen = FxHashSet::default();
        for (i, e) in edges.iter().enumerate() {
            let a = *index.get(&e.source).ok_or(ModelError::DanglingEdge { edge: i, id: e.source })?;
            let b = *index.get(&e.target).ok_or(ModelError::DanglingEdge { edge: i, id: e.target })?;
            if a == b {
                return Err(ModelError::NotATree(format!("self-loop on node {}", e.source)));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(ModelError::NotATree(format!("duplicate edge {}-{}", e.source, e.target)));
            }
            if !(e.weight.is_finite() && e.weight >= 0.0) {
                return Err(ModelError::InvalidWeight {
                    what: format!("edge {}-{}", e.source, e.target),
                    value: e.weight,
                });
            }
            built.push(Edge { a, b, weight: e.weight });
        }
        if built.len() != n - 1 {
            return Err(ModelError::NotATree(format!("{} nodes but {} edges", n, built.len())));
        }
        let mut adjacency = vec![Vec::new(); n];
        for (id, e) in built.iter().enumerate() {
            adjacency[e.a].push((e.b, id));
            adjacency[e.b].push((e.a, id));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let tree = LabeledTree {
            ids: nodes.iter().map(|n| n.id).collect(),
            labels: nodes.iter().map(|n| n.label.clone()).collect(),
            weights: nodes.iter().map(|n| n.weight).collect(),
            edges: built,
            adjacency,
        };
        // n - 1 edges plus connectivity rules out cycles.
        if tree.bfs_order(0)?.len() != n {
            return Err(ModelError::NotATree("edge set is disconnected".into()));
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> &Edge {
        &self.edges[e]
    }

    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, EdgeId)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adjacency[v].len()
    }

    pub fn external_id(&self, v: NodeId) -> u64 {
        self.ids[v]
    }

    pub fn node_of(&self, id: u64) -> Option<NodeId> {
        self.ids.binary_search(&id).ok()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn weight(&self, v: NodeId) -> f64 {
        self.weights[v]
    }

    pub fn node_records(&self) -> Vec<NodeRecord> {
        (0..self.len()).map(|v| NodeRecord::new(self.ids[v], self.labels[v].clone(), self.weights[v])).collect()
    }

    pub fn edge_records(&self) -> Vec<EdgeRecord> {
        self.edges.iter().map(|e| EdgeRecord::new(self.ids[e.a], self.ids[e.b], e.weight)).collect()
    }

    fn check_root(&self, root: NodeId) -> Result<(), ModelError> {
        if root < self.len() {
            Ok(())
        } else {
            Err(ModelError::UnknownRoot(root))
        }
    }

    /// Breadth-first order from `root`; children in ascending id.
    pub fn bfs_order(&self, root: NodeId) -> Result<Vec<NodeId>, ModelError> {
        self.check_root(root)?;
        let mut seen = vec![false; self.len()];
        let mut order = Vec::with_capacity(self.len());
        let mut queue = VecDeque::from([root]);
        seen[root] = true;
        while let Some(v) = queue.pop_front() {
            order.push(v);
            for &(w, _) in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        Ok(order)
    }

    /// Size of every subtree when the tree hangs from `root`.
    pub fn subtree_sizes(&self, root: NodeId) -> Result<Vec<usize>, ModelError> {
        Ok(self.rooted(root)?.size)
    }

    pub fn rooted(&self, root: NodeId) -> Result<RootedTree, ModelError> {
        let order = self.bfs_order(root)?;
        let n = self.len();
        let mut parent = vec![None; n];
        let mut depth = vec![0usize; n];
        let mut children = vec![Vec::new(); n];
        for &v in &order {
            for &(w, e) in &self.adjacency[v] {
                if Some((w, e)) != parent[v] {
                    parent[w] = Some((v, e));
                    depth[w] = depth[v] + 1;
                    children[v].push(w);
                }
            }
        }
        let mut size = vec![1usize; n];
        for &v in order.iter().rev() {
            if let Some((p, _)) = parent[v] {
                size[p] += size[v];
            }
        }
        Ok(RootedTree { root, order, parent, children, depth, size })
    }
}

/// A tree hung from a root: BFS order, parent links, depths, subtree sizes.
#[derive(Debug, Clone)]
pub struct RootedTree {
    pub root: NodeId,
    pub order: Vec<NodeId>,
    /// Parent node and the connecting edge; `None` at the root.
    pub parent: Vec<Option<(NodeId, EdgeId)>>,
    /// Children in ascending id.
    pub children: Vec<Vec<NodeId>>,
    pub depth: Vec<usize>,
    pub size: Vec<usize>,
}

/// Desired Euclidean length for every edge, indexed by [`EdgeId`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DesiredLengths(pub Vec<f64>);

impl DesiredLengths {
    pub fn uniform(tree: &LabeledTree, length: f64) -> Self {
        DesiredLengths(vec![length; tree.edge_count()])
    }

    pub fn get(&self, e: EdgeId) -> f64 {
        self.0[e]
    }

    pub fn min(&self) -> Option<f64> {
        self.0.iter().copied().reduce(f64::min)
    }

    pub fn mean(&self) -> Option<f64> {
        (!self.0.is_empty()).then(|| self.0.iter().sum::<f64>() / self.0.len() as f64)
    }

    /// Longest desired length among the edges at each node.
    pub fn max_adjacent(&self, tree: &LabeledTree) -> Vec<f64> {
        (0..tree.len()).map(|v| tree.neighbors(v).iter().map(|&(_, e)| self.0[e]).fold(0.0, f64::max)).collect()
    }
}

/// Node positions, indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    positions: Vec<Point>,
}

impl Layout {
    pub fn new(positions: Vec<Point>) -> Self {
        Layout { positions }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn get(&self, v: NodeId) -> Point {
        self.positions[v]
    }

    pub fn set(&mut self, v: NodeId, p: Point) {
        self.positions[v] = p;
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn edge_length(&self, tree: &LabeledTree, e: EdgeId) -> f64 {
        let edge = tree.edge(e);
        self.positions[edge.a].distance(self.positions[edge.b])
    }

    pub fn translate(&mut self, by: Point) {
        for p in &mut self.positions {
            *p += by;
        }
    }

    /// Scales every position about `center`, x by `factor.x` and y by
    /// `factor.y`.
    pub fn scale_about(&mut self, center: Point, factor: Point) {
        for p in &mut self.positions {
            *p = Point::new(center.x + (p.x - center.x) * factor.x, center.y + (p.y - center.y) * factor.y);
        }
    }

    /// Smallest rectangle containing every label box.
    pub fn bounds(&self, geometry: &LabelGeometry) -> crate::geometry::Rect {
        let mut r = crate::geometry::Rect::EMPTY;
        for (v, &p) in self.positions.iter().enumerate() {
            r = r.union(&geometry.rect_at(v, p));
        }
        r
    }

    /// Order-sensitive FNV-1a hash of the coordinate bits.
    pub fn checksum(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for p in &self.positions {
            for bits in [p.x.to_bits(), p.y.to_bits()] {
                h ^= bits;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabelBox {
    pub width: f64,
    pub height: f64,
}

/// Label box sizes per node, in layout units.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelGeometry {
    boxes: Vec<LabelBox>,
    max_width: f64,
    max_height: f64,
}

pub const DEFAULT_FONT_SIZE: f64 = 14.0;

impl LabelGeometry {
    pub fn new(boxes: Vec<LabelBox>) -> Result<Self, ModelError> {
        for (v, b) in boxes.iter().enumerate() {
            if !(b.width > 0.0 && b.height > 0.0 && b.width.is_finite() && b.height.is_finite()) {
                return Err(ModelError::InvalidWeight {
                    what: format!("label box of node {v}"),
                    value: b.width.min(b.height),
                });
            }
        }
        let max_width = boxes.iter().map(|b| b.width).fold(0.0, f64::max);
        let max_height = boxes.iter().map(|b| b.height).fold(0.0, f64::max);
        Ok(LabelGeometry { boxes, max_width, max_height })
    }

    /// Boxes estimated from label text: 0.6 em per character, 1.2 em tall.
    pub fn from_labels(tree: &LabeledTree, font_size: f64) -> Self {
        let boxes = (0..tree.len()).map(|v| Self::estimate(tree.label(v), font_size)).collect();
        LabelGeometry::new(boxes).expect("estimated boxes are positive")
    }

    pub fn estimate(label: &str, font_size: f64) -> LabelBox {
        let chars = label.chars().count().max(1) as f64;
        LabelBox { width: 0.6 * font_size * chars, height: 1.2 * font_size }
    }

    pub fn len(&self) -> usize {
        self.boxes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn get(&self, v: NodeId) -> LabelBox {
        self.boxes[v]
    }

    pub fn boxes(&self) -> &[LabelBox] {
        &self.boxes
    }

    pub fn max_width(&self) -> f64 {
        self.max_width
    }

    pub fn max_height(&self) -> f64 {
        self.max_height
    }

    pub fn max_diagonal(&self) -> f64 {
        self.boxes.iter().map(|b| b.width.hypot(b.height)).fold(0.0, f64::max)
    }

    pub fn rect_at(&self, v: NodeId, p: Point) -> crate::geometry::Rect {
        let b = self.boxes[v];
        crate::geometry::Rect::centered(p, b.width, b.height)
    }

    /// Collision radius in y-stretched space: `max(width, b * height) / 2`.
    pub fn collision_radius(&self, v: NodeId, aspect: f64) -> f64 {
        let b = self.boxes[v];
        b.width.max(aspect * b.height) / 2.0
    }

    pub fn total_area(&self) -> f64 {
        self.boxes.iter().map(|b| b.width * b.height).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid parameter {name}: {reason}")]
pub struct ParamError {
    pub name: &'static str,
    pub reason: String,
}

/// Every tunable of the improvement and final-iteration phases.
///
/// Defaults are the tuned values: edge-length strength 1, label-overlap
/// strength 0.16, distribution strength 0.003, node-edge strength 0.1,
/// 50 iterations, 20 final samples over 0.02% of the drawing area, batch 256
/// and ellipse aspect 3. `None` for the length-dependent fields means "half
/// of the shortest desired edge length".
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LayoutParams {
    pub edge_length_strength: f64,
    pub collision_strength: f64,
    pub distribution_strength: f64,
    pub node_edge_strength: f64,
    pub ellipse_aspect: f64,
    pub edge_constant: f64,
    pub node_edge_constant: f64,
    pub node_edge_cutoff: Option<f64>,
    pub iterations: usize,
    pub batch: usize,
    pub repulsion_samples: usize,
    pub final_steps: usize,
    pub final_size_fraction: f64,
    pub final_max_passes: usize,
    /// Draw one scalar per final-iteration sample and use it for both axes.
    pub final_scalar_offset: bool,
    pub max_step: Option<f64>,
    pub seed: u64,
}

impl Default for LayoutParams {
    fn default() -> Self {
        LayoutParams {
            edge_length_strength: 1.0,
            collision_strength: 0.16,
            distribution_strength: 0.003,
            node_edge_strength: 0.1,
            ellipse_aspect: 3.0,
            edge_constant: 0.05,
            node_edge_constant: 1.0,
            node_edge_cutoff: None,
            iterations: 50,
            batch: 256,
            repulsion_samples: 32,
            final_steps: 20,
            final_size_fraction: 0.0002,
            final_max_passes: 20,
            final_scalar_offset: false,
            max_step: None,
            seed: 0x5eed,
        }
    }
}

impl LayoutParams {
    pub fn validate(&self) -> Result<(), ParamError> {
        let err = |name, reason: &str| Err(ParamError { name, reason: reason.to_string() });
        for (name, v) in [
            ("edge_length_strength", self.edge_length_strength),
            ("collision_strength", self.collision_strength),
            ("distribution_strength", self.distribution_strength),
            ("node_edge_strength", self.node_edge_strength),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return err(name, "must lie in [0, 1]");
            }
        }
        if !(self.ellipse_aspect >= 1.0 && self.ellipse_aspect.is_finite()) {
            return err("ellipse_aspect", "must be >= 1");
        }
        if !(self.edge_constant > 0.0 && self.edge_constant.is_finite()) {
            return err("edge_constant", "must be positive");
        }
        if !(self.node_edge_constant > 0.0 && self.node_edge_constant.is_finite()) {
            return err("node_edge_constant", "must be positive");
        }
        if self.batch == 0 || self.repulsion_samples == 0 || self.final_steps == 0 || self.final_max_passes == 0 {
            return err("counts", "batch, repulsion_samples, final_steps and final_max_passes must be >= 1");
        }
        if !(self.final_size_fraction > 0.0 && self.final_size_fraction < 1.0) {
            return err("final_size_fraction", "must lie in (0, 1)");
        }
        for (name, v) in [("node_edge_cutoff", self.node_edge_cutoff), ("max_step", self.max_step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return err(name, "must be positive");
                }
            }
        }
        Ok(())
    }
}
