//! Random inputs and brute-force reference implementations shared by the
//! integration tests. Nothing here calls into the crate's own geometry or
//! metric code.

#![allow(dead_code)]

use arbor_core::io::GraphInput;
use arbor_core::model::{EdgeRecord, NodeRecord};
use arbor_core::{DesiredLengths, LabelGeometry, LabeledTree, Layout, Point};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_label(rng: &mut ChaCha8Rng) -> String {
    let len = rng.gen_range(3..=16);
    (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect()
}

/// Each new node attaches to a uniformly random earlier node.
pub fn random_parents(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (1..n).map(|i| rng.gen_range(0..i)).collect()
}

/// Preferential attachment: a new node picks an earlier node with
/// probability proportional to its degree plus `offset`, giving a
/// power-law degree tail (steeper as `offset` grows).
pub fn heavy_tailed_parents(n: usize, offset: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    // every edge endpoint is listed once, so sampling the list is degree-proportional
    let mut endpoints = vec![0usize];
    let mut parents = Vec::with_capacity(n.saturating_sub(1));
    for i in 1..n {
        let by_degree = endpoints.len() as f64;
        let p = if rng.gen::<f64>() * (by_degree + offset * i as f64) < by_degree {
            endpoints[rng.gen_range(0..endpoints.len())]
        } else {
            rng.gen_range(0..i)
        };
        parents.push(p);
        endpoints.push(p);
        endpoints.push(i);
    }
    parents
}

/// Graph input for a tree given by parent links; node `i + 1` hangs off
/// `parents[i]`. Node weights are left to the degree fallback.
pub fn tree_input(parents: &[usize], rng: &mut ChaCha8Rng) -> GraphInput {
    let n = parents.len() + 1;
    GraphInput {
        nodes: (0..n).map(|i| NodeRecord::new(i as u64, random_label(rng), 1.0)).collect(),
        edges: parents.iter().enumerate().map(|(i, &p)| EdgeRecord::new(p as u64, i as u64 + 1, 1.0)).collect(),
        node_weights_given: false,
    }
}

pub fn random_tree(n: usize, seed: u64) -> LabeledTree {
    let mut r = rng(seed);
    let parents = random_parents(n, &mut r);
    tree_input(&parents, &mut r).into_tree().unwrap()
}

pub fn random_layout(n: usize, extent: f64, rng: &mut ChaCha8Rng) -> Layout {
    Layout::new((0..n).map(|_| Point::new(rng.gen_range(0.0..extent), rng.gen_range(0.0..extent))).collect())
}

pub fn random_geometry(n: usize, rng: &mut ChaCha8Rng) -> LabelGeometry {
    LabelGeometry::new(
        (0..n)
            .map(|_| arbor_core::LabelBox { width: rng.gen_range(5.0..60.0), height: rng.gen_range(5.0..20.0) })
            .collect(),
    )
    .unwrap()
}

// Reference geometry, written independently of the crate's predicates.

fn orient(a: (f64, f64), b: (f64, f64), c: (f64, f64)) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn on_segment(a: (f64, f64), b: (f64, f64), p: (f64, f64)) -> bool {
    p.0 >= a.0.min(b.0) && p.0 <= a.0.max(b.0) && p.1 >= a.1.min(b.1) && p.1 <= a.1.max(b.1)
}

/// Closed-segment intersection by the textbook orientation test.
pub fn brute_segments_meet(a: (f64, f64), b: (f64, f64), c: (f64, f64), d: (f64, f64)) -> bool {
    let (d1, d2, d3, d4) = (orient(c, d, a), orient(c, d, b), orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

pub fn brute_crossings(tree: &LabeledTree, layout: &Layout) -> usize {
    let p = |v: usize| (layout.get(v).x, layout.get(v).y);
    let edges = tree.edges();
    let mut count = 0;
    for i in 0..edges.len() {
        for j in i + 1..edges.len() {
            let (e, f) = (edges[i], edges[j]);
            if e.a == f.a || e.a == f.b || e.b == f.a || e.b == f.b {
                continue;
            }
            if brute_segments_meet(p(e.a), p(e.b), p(f.a), p(f.b)) {
                count += 1;
            }
        }
    }
    count
}

pub fn brute_overlaps(layout: &Layout, geometry: &LabelGeometry) -> usize {
    let n = layout.len();
    let mut count = 0;
    for u in 0..n {
        for v in u + 1..n {
            let (a, b) = (geometry.get(u), geometry.get(v));
            let (pu, pv) = (layout.get(u), layout.get(v));
            let gap_x = (a.width + b.width) / 2.0 - (pu.x - pv.x).abs();
            let gap_y = (a.height + b.height) / 2.0 - (pu.y - pv.y).abs();
            if gap_x > 0.0 && gap_y > 0.0 {
                count += 1;
            }
        }
    }
    count
}

pub fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        (xs[m - 1] + xs[m]) / 2.0
    }
}

pub fn brute_relative_errors(tree: &LabeledTree, layout: &Layout, lengths: &DesiredLengths) -> Vec<f64> {
    tree.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| {
            let (a, b) = (layout.get(edge.a), layout.get(edge.b));
            let d = ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt();
            (d - lengths.0[e]) / lengths.0[e]
        })
        .collect()
}

/// Root mean square of the relative errors.
pub fn brute_del(errors: &[f64]) -> f64 {
    if errors.is_empty() {
        return 0.0;
    }
    (errors.iter().map(|r| r * r).sum::<f64>() / errors.len() as f64).sqrt()
}

/// Summed label area over the area of the box around all labels.
pub fn brute_cm(layout: &Layout, geometry: &LabelGeometry) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut area = 0.0;
    for v in 0..layout.len() {
        let (p, b) = (layout.get(v), geometry.get(v));
        x0 = x0.min(p.x - b.width / 2.0);
        x1 = x1.max(p.x + b.width / 2.0);
        y0 = y0.min(p.y - b.height / 2.0);
        y1 = y1.max(p.y + b.height / 2.0);
        area += b.width * b.height;
    }
    area / ((x1 - x0) * (y1 - y0))
}
