//! Crossing-free radial initial layouts and root selection.
//!
//! Both initializations walk the tree breadth-first and split each node's
//! angular wedge among its children in proportion to their subtree sizes.
//! The edge-length variant hangs every child wedge off its parent and places
//! the child at exactly the desired distance along the wedge bisector. The
//! compact variant keeps every wedge anchored at the root and puts nodes on
//! concentric rings, one ring per hop.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI, TAU};

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{DesiredLengths, LabeledTree, Layout, ModelError, NodeId, Point};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InitError {
    #[error("desired length of edge {edge} is not positive ({value})")]
    NonPositiveLength { edge: usize, value: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Angular sector `[start, end)` measured counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub center: Point,
    pub radius: f64,
    pub start: f64,
    pub end: f64,
}

impl Wedge {
    pub fn angle(&self) -> f64 {
        self.end - self.start
    }

    pub fn bisector(&self) -> f64 {
        (self.start + self.end) / 2.0
    }

    /// Midpoint of the wedge's arc.
    pub fn arc_midpoint(&self) -> Point {
        self.center + Point::from_polar(self.radius, self.bisector())
    }
}

/// Splits `[start, end)` into consecutive ranges proportional to `weights`.
///
/// The last range ends exactly at `end` so the pieces tile the input.
pub fn partition_range(start: f64, end: f64, weights: &[usize]) -> Vec<(f64, f64)> {
    let total: usize = weights.iter().sum();
    let span = end - start;
    let mut out = Vec::with_capacity(weights.len());
    let mut acc = 0usize;
    for (i, &w) in weights.iter().enumerate() {
        let a = start + span * (acc as f64 / total as f64);
        acc += w;
        let b = if i + 1 == weights.len() { end } else { start + span * (acc as f64 / total as f64) };
        out.push((a, b));
    }
    out
}

/// Orders children so the heaviest subtree sits in the middle of the wedge,
/// the next two flank it, and so on alternating outward.
pub fn centralize_heavy(children: &[NodeId], sizes: &[usize]) -> Vec<NodeId> {
    let mut sorted = children.to_vec();
    // stable: equal sizes keep ascending id
    sorted.sort_by_key(|&c| std::cmp::Reverse(sizes[c]));
    let mut out = VecDeque::with_capacity(sorted.len());
    for (i, c) in sorted.into_iter().enumerate() {
        if i % 2 == 1 || i == 0 {
            out.push_back(c);
        } else {
            out.push_front(c);
        }
    }
    out.into()
}

fn hop_distance_sum(tree: &LabeledTree, source: NodeId) -> u64 {
    let n = tree.len();
    let mut dist = vec![u32::MAX; n];
    let mut queue = VecDeque::from([source]);
    dist[source] = 0;
    let mut total = 0u64;
    while let Some(v) = queue.pop_front() {
        total += dist[v] as u64;
        for &(w, _) in tree.neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    total
}

/// Node of maximum closeness centrality `|V| / sum of hop distances`,
/// smallest id on ties.
///
/// One BFS per node, run in parallel: O(n^2) work overall.
pub fn center_node(tree: &LabeledTree) -> NodeId {
    assert!(!tree.is_empty(), "tree has no nodes");
    // Maximizing |V| / D is minimizing the integer D; no float ties.
    (0..tree.len()).into_par_iter().map(|u| (hop_distance_sum(tree, u), u)).min().map(|(_, u)| u).unwrap()
}

/// Same answer as [`center_node`] in linear time, by rerooting the distance
/// sum from a BFS tree: moving the root across an edge into a subtree of
/// size `s` changes the sum by `n - 2s`.
pub fn center_node_linear(tree: &LabeledTree) -> NodeId {
    assert!(!tree.is_empty(), "tree has no nodes");
    let rooted = tree.rooted(0).expect("node 0 exists");
    let n = tree.len() as i64;
    let mut sums = vec![0i64; tree.len()];
    sums[0] = rooted.depth.iter().map(|&d| d as i64).sum();
    for &v in rooted.order.iter().skip(1) {
        let (p, _) = rooted.parent[v].unwrap();
        sums[v] = sums[p] + n - 2 * rooted.size[v] as i64;
    }
    (0..tree.len()).min_by_key(|&u| (sums[u], u)).unwrap()
}

/// Radial layout that realizes every desired edge length exactly.
pub fn edge_length_init(tree: &LabeledTree, root: NodeId, lengths: &DesiredLengths) -> Result<Layout, InitError> {
    for (edge, &value) in lengths.0.iter().enumerate() {
        if !(value > 0.0 && value.is_finite()) {
            return Err(InitError::NonPositiveLength { edge, value });
        }
    }
    let rooted = tree.rooted(root)?;
    let mut pos = vec![Point::ORIGIN; tree.len()];
    let mut wedges = vec![(0.0, TAU); tree.len()];
    for &p in &rooted.order {
        let children = &rooted.children[p];
        if children.is_empty() {
            continue;
        }
        let weights: Vec<usize> = children.iter().map(|&c| rooted.size[c]).collect();
        let (start, end) = wedges[p];
        for (&c, range) in children.iter().zip(partition_range(start, end, &weights)) {
            let (_, e) = rooted.parent[c].unwrap();
            let wedge = Wedge { center: pos[p], radius: lengths.get(e), start: range.0, end: range.1 };
            pos[c] = wedge.arc_midpoint();
            wedges[c] = range;
        }
    }
    Ok(Layout::new(pos))
}

/// Concentric layout: node `v` on the ring of radius `depth(v) * ring_step`
/// around the root, at the middle of its root-anchored wedge.
pub fn compact_init(tree: &LabeledTree, root: NodeId, ring_step: f64) -> Result<Layout, InitError> {
    let rooted = tree.rooted(root)?;
    let mut pos = vec![Point::ORIGIN; tree.len()];
    let mut wedges = vec![(0.0, TAU); tree.len()];
    for &p in &rooted.order {
        let children = centralize_heavy(&rooted.children[p], &rooted.size);
        if children.is_empty() {
            continue;
        }
        let weights: Vec<usize> = children.iter().map(|&c| rooted.size[c]).collect();
        let (start, end) = wedges[p];
        for (&c, range) in children.iter().zip(partition_range(start, end, &weights)) {
            let range = clamp_to_half_turn(range);
            let wedge = Wedge {
                center: Point::ORIGIN,
                radius: rooted.depth[c] as f64 * ring_step,
                start: range.0,
                end: range.1,
            };
            pos[c] = wedge.arc_midpoint();
            wedges[c] = range;
        }
    }
    Ok(Layout::new(pos))
}

/// Shrinks an angle range wider than a half turn to the half turn around its
/// middle. Without this a subtree holding most of the tree (any root other
/// than the centre) fans out past the root and its edges cross.
fn clamp_to_half_turn((start, end): (f64, f64)) -> (f64, f64) {
    if end - start <= PI {
        return (start, end);
    }
    let mid = (start + end) / 2.0;
    (mid - FRAC_PI_2, mid + FRAC_PI_2)
}
