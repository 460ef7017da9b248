//! Geometric predicates and a uniform grid over nodes and edge segments.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::model::{DesiredLengths, EdgeId, LabelGeometry, LabeledTree, Layout, NodeId, Point};

/// Orientation values with `|sin| <= COLLINEAR_TOLERANCE` are treated as collinear.
pub const COLLINEAR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Rect {
    pub const EMPTY: Rect =
        Rect { x_min: f64::INFINITY, x_max: f64::NEG_INFINITY, y_min: f64::INFINITY, y_max: f64::NEG_INFINITY };

    pub fn centered(c: Point, width: f64, height: f64) -> Rect {
        Rect {
            x_min: c.x - width / 2.0,
            x_max: c.x + width / 2.0,
            y_min: c.y - height / 2.0,
            y_max: c.y + height / 2.0,
        }
    }

    pub fn of_segment(a: Point, b: Point) -> Rect {
        Rect { x_min: a.x.min(b.x), x_max: a.x.max(b.x), y_min: a.y.min(b.y), y_max: a.y.max(b.y) }
    }

    pub fn union(&self, o: &Rect) -> Rect {
        Rect {
            x_min: self.x_min.min(o.x_min),
            x_max: self.x_max.max(o.x_max),
            y_min: self.y_min.min(o.y_min),
            y_max: self.y_max.max(o.y_max),
        }
    }

    pub fn expand(&self, dx: f64, dy: f64) -> Rect {
        Rect { x_min: self.x_min - dx, x_max: self.x_max + dx, y_min: self.y_min - dy, y_max: self.y_max + dy }
    }

    pub fn center(&self) -> Point {
        Point::new((self.x_min + self.x_max) / 2.0, (self.y_min + self.y_max) / 2.0)
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    /// Closed-rectangle test: touching boundaries count.
    pub fn touches(&self, o: &Rect) -> bool {
        self.x_min <= o.x_max && o.x_min <= self.x_max && self.y_min <= o.y_max && o.y_min <= self.y_max
    }

    /// Positive-area intersection: touching boundaries do not count.
    pub fn overlaps(&self, o: &Rect) -> bool {
        self.x_min < o.x_max && o.x_min < self.x_max && self.y_min < o.y_max && o.y_min < self.y_max
    }
}

/// Sign of the turn a→b→c: +1 counter-clockwise, -1 clockwise, 0 collinear.
///
/// The cross product is normalized by both arm lengths, so the tolerance is
/// on the sine of the angle at `a`.
pub fn orientation(a: Point, b: Point, c: Point) -> i8 {
    let u = b - a;
    let v = c - a;
    let scale = u.norm() * v.norm();
    if scale == 0.0 {
        return 0;
    }
    let s = u.cross(v) / scale;
    if s > COLLINEAR_TOLERANCE {
        1
    } else if s < -COLLINEAR_TOLERANCE {
        -1
    } else {
        0
    }
}

// p is collinear with [a, b]; is it within the segment's box?
fn on_segment(a: Point, b: Point, p: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn closed_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let o1 = orientation(a1, a2, b1);
    let o2 = orientation(a1, a2, b2);
    let o3 = orientation(b1, b2, a1);
    let o4 = orientation(b1, b2, a2);
    if o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0 {
        return true;
    }
    (o1 == 0 && on_segment(a1, a2, b1))
        || (o2 == 0 && on_segment(a1, a2, b2))
        || (o3 == 0 && on_segment(b1, b2, a1))
        || (o4 == 0 && on_segment(b1, b2, a2))
}

/// Do the closed segments `a1a2` and `b1b2` meet anywhere other than at a
/// single shared endpoint?
///
/// Proper crossings and touching (an endpoint on the other segment's
/// interior) both count. Two segments that share an endpoint count only
/// when they also overlap collinearly beyond it.
pub fn segments_intersect(a1: Point, a2: Point, b1: Point, b2: Point) -> bool {
    let shared = if a1 == b1 {
        Some((a1, a2, b2))
    } else if a1 == b2 {
        Some((a1, a2, b1))
    } else if a2 == b1 {
        Some((a2, a1, b2))
    } else if a2 == b2 {
        Some((a2, a1, b1))
    } else {
        None
    };
    match shared {
        Some((p, a, b)) => {
            if a == p || b == p {
                return false;
            }
            // Same direction from the shared point means collinear overlap.
            orientation(p, a, b) == 0 && (a - p).dot(b - p) > 0.0
        }
        None => closed_intersect(a1, a2, b1, b2),
    }
}

/// Do the labels of `u` and `v` overlap with positive area?
pub fn labels_overlap(u: NodeId, v: NodeId, layout: &Layout, geometry: &LabelGeometry) -> bool {
    geometry.rect_at(u, layout.get(u)).overlaps(&geometry.rect_at(v, layout.get(v)))
}

type CellKey = (i32, i32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CellSpan {
    x0: i32,
    x1: i32,
    y0: i32,
    y1: i32,
}

impl CellSpan {
    fn cells(self) -> impl Iterator<Item = CellKey> {
        (self.x0..=self.x1).flat_map(move |x| (self.y0..=self.y1).map(move |y| (x, y)))
    }
}

#[derive(Debug, Clone, Default)]
struct Cell {
    nodes: Vec<NodeId>,
    edges: Vec<EdgeId>,
}

/// Uniform bucket grid over node positions and edge bounding boxes.
///
/// Every edge is listed in each cell its bounding box touches. The grid does
/// not own positions; [`SpatialGrid::move_node`] moves a node in the layout
/// and the index together so the two cannot drift apart.
#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cell_size: f64,
    cells: FxHashMap<CellKey, Cell>,
    node_cell: Vec<CellKey>,
    edge_span: Vec<CellSpan>,
    // half extents of the largest label, for overlap queries
    max_half_w: f64,
    max_half_h: f64,
}

impl SpatialGrid {
    /// Cell size = max(mean desired length, largest label diagonal).
    pub fn default_cell_size(lengths: &DesiredLengths, geometry: &LabelGeometry) -> f64 {
        let size = lengths.mean().unwrap_or(0.0).max(geometry.max_diagonal());
        if size > 0.0 && size.is_finite() {
            size
        } else {
            1.0
        }
    }

    pub fn build(tree: &LabeledTree, layout: &Layout, geometry: &LabelGeometry, cell_size: f64) -> Self {
        assert!(cell_size > 0.0 && cell_size.is_finite(), "cell size must be positive");
        let mut grid = SpatialGrid {
            cell_size,
            cells: FxHashMap::default(),
            node_cell: Vec::with_capacity(tree.len()),
            edge_span: Vec::with_capacity(tree.edge_count()),
            max_half_w: geometry.max_width() / 2.0,
            max_half_h: geometry.max_height() / 2.0,
        };
        for v in 0..tree.len() {
            let key = grid.key(layout.get(v));
            grid.node_cell.push(key);
            grid.cells.entry(key).or_default().nodes.push(v);
        }
        for (e, edge) in tree.edges().iter().enumerate() {
            let span = grid.span(&Rect::of_segment(layout.get(edge.a), layout.get(edge.b)));
            grid.edge_span.push(span);
            for key in span.cells() {
                grid.cells.entry(key).or_default().edges.push(e);
            }
        }
        grid
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    fn coord(&self, v: f64) -> i32 {
        (v / self.cell_size).floor().clamp(i32::MIN as f64 / 2.0, i32::MAX as f64 / 2.0) as i32
    }

    fn key(&self, p: Point) -> CellKey {
        (self.coord(p.x), self.coord(p.y))
    }

    fn span(&self, r: &Rect) -> CellSpan {
        CellSpan { x0: self.coord(r.x_min), x1: self.coord(r.x_max), y0: self.coord(r.y_min), y1: self.coord(r.y_max) }
    }

    /// Moves `v` to `to` in both the layout and the index.
    pub fn move_node(&mut self, tree: &LabeledTree, layout: &mut Layout, v: NodeId, to: Point) {
        layout.set(v, to);
        let new_key = self.key(to);
        let old_key = self.node_cell[v];
        if new_key != old_key {
            if let Some(cell) = self.cells.get_mut(&old_key) {
                if let Some(i) = cell.nodes.iter().position(|&w| w == v) {
                    cell.nodes.swap_remove(i);
                }
            }
            self.cells.entry(new_key).or_default().nodes.push(v);
            self.node_cell[v] = new_key;
        }
        for &(w, e) in tree.neighbors(v) {
            let span = self.span(&Rect::of_segment(to, layout.get(w)));
            let old = self.edge_span[e];
            if span == old {
                continue;
            }
            for key in old.cells() {
                if let Some(cell) = self.cells.get_mut(&key) {
                    if let Some(i) = cell.edges.iter().position(|&f| f == e) {
                        cell.edges.swap_remove(i);
                    }
                }
            }
            for key in span.cells() {
                self.cells.entry(key).or_default().edges.push(e);
            }
            self.edge_span[e] = span;
        }
    }

    /// Edges registered in any cell touching `r`, deduplicated, ascending.
    pub fn edges_near(&self, r: &Rect, out: &mut Vec<EdgeId>) {
        out.clear();
        for key in self.span(r).cells() {
            if let Some(cell) = self.cells.get(&key) {
                out.extend_from_slice(&cell.edges);
            }
        }
        out.sort_unstable();
        out.dedup();
    }

    /// Nodes whose cell touches `r` (a superset of the nodes inside `r`).
    pub fn nodes_near(&self, r: &Rect, out: &mut Vec<NodeId>) {
        out.clear();
        for key in self.span(r).cells() {
            if let Some(cell) = self.cells.get(&key) {
                out.extend_from_slice(&cell.nodes);
            }
        }
        out.sort_unstable();
    }

    /// Nodes whose label overlaps `v`'s label if `v` were centered at `at`.
    pub fn overlap_partners(
        &self,
        layout: &Layout,
        geometry: &LabelGeometry,
        v: NodeId,
        at: Point,
        out: &mut Vec<NodeId>,
    ) {
        let rect = geometry.rect_at(v, at);
        let mut near = Vec::new();
        self.nodes_near(&rect.expand(self.max_half_w, self.max_half_h), &mut near);
        out.clear();
        out.extend(near.into_iter().filter(|&w| w != v && rect.overlaps(&geometry.rect_at(w, layout.get(w)))));
    }
}

/// Would moving `v` to `to` make one of its edges meet a non-adjacent edge?
///
/// A move that collapses an incident edge to zero length is also refused.
pub fn move_introduces_crossing(layout: &Layout, tree: &LabeledTree, grid: &SpatialGrid, v: NodeId, to: Point) -> bool {
    let mut scratch = Vec::new();
    move_conflicts(layout, tree, grid, v, to, &mut scratch, true);
    !scratch.is_empty()
}

/// Marker pushed into the conflict list for a degenerate (zero-length) edge.
pub(crate) const DEGENERATE: EdgeId = EdgeId::MAX;

/// Collects the edges that `v`'s incident segments would meet after moving
/// to `to`. With `first_only`, stops at the first conflict.
pub(crate) fn move_conflicts(
    layout: &Layout,
    tree: &LabeledTree,
    grid: &SpatialGrid,
    v: NodeId,
    to: Point,
    out: &mut Vec<EdgeId>,
    first_only: bool,
) {
    out.clear();
    let mut candidates = Vec::new();
    for &(w, _) in tree.neighbors(v) {
        let pw = layout.get(w);
        if pw == to {
            out.push(DEGENERATE);
            return;
        }
        grid.edges_near(&Rect::of_segment(to, pw), &mut candidates);
        for &f in &candidates {
            let edge = tree.edge(f);
            if edge.touches(v) || edge.touches(w) {
                continue;
            }
            if segments_intersect(to, pw, layout.get(edge.a), layout.get(edge.b)) {
                out.push(f);
                if first_only {
                    return;
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
}

/// Does edge `f` (at current positions) meet any of `v`'s segments with `v` at `to`?
pub(crate) fn edge_conflicts_with_move(layout: &Layout, tree: &LabeledTree, v: NodeId, to: Point, f: EdgeId) -> bool {
    let edge = tree.edge(f);
    let (fa, fb) = (layout.get(edge.a), layout.get(edge.b));
    let fbox = Rect::of_segment(fa, fb);
    tree.neighbors(v).iter().any(|&(w, _)| {
        if edge.touches(v) || edge.touches(w) {
            return false;
        }
        let pw = layout.get(w);
        Rect::of_segment(to, pw).touches(&fbox) && segments_intersect(to, pw, fa, fb)
    })
}

/// Number of unordered pairs of non-adjacent edges that intersect.
pub fn count_crossings(layout: &Layout, tree: &LabeledTree, grid: &SpatialGrid) -> usize {
    crossing_pairs(layout, tree, grid).len()
}

/// The crossing edge pairs `(e, f)` with `e < f`, sorted.
pub fn crossing_pairs(layout: &Layout, tree: &LabeledTree, grid: &SpatialGrid) -> Vec<(EdgeId, EdgeId)> {
    let mut pairs = Vec::new();
    for (&key, cell) in &grid.cells {
        for (i, &e) in cell.edges.iter().enumerate() {
            for &f in &cell.edges[i + 1..] {
                let (e, f) = (e.min(f), e.max(f));
                let (se, sf) = (grid.edge_span[e], grid.edge_span[f]);
                // Visit each pair once: in the lowest cell both spans share.
                if key != (se.x0.max(sf.x0), se.y0.max(sf.y0)) {
                    continue;
                }
                let (ee, ef) = (tree.edge(e), tree.edge(f));
                if ee.touches(ef.a) || ee.touches(ef.b) {
                    continue;
                }
                if segments_intersect(layout.get(ee.a), layout.get(ee.b), layout.get(ef.a), layout.get(ef.b)) {
                    pairs.push((e, f));
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Unordered node pairs `(u, v)`, `u < v`, whose labels overlap; sorted.
pub fn overlapping_pairs(layout: &Layout, geometry: &LabelGeometry, grid: &SpatialGrid) -> Vec<(NodeId, NodeId)> {
    let mut pairs = Vec::new();
    let mut partners = Vec::new();
    for u in 0..layout.len() {
        grid.overlap_partners(layout, geometry, u, layout.get(u), &mut partners);
        pairs.extend(partners.iter().filter(|&&v| v > u).map(|&v| (u, v)));
    }
    pairs
}

pub fn count_overlaps(layout: &Layout, geometry: &LabelGeometry, grid: &SpatialGrid) -> usize {
    overlapping_pairs(layout, geometry, grid).len()
}
