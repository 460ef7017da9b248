//! The four per-node forces and their weighted sum.
//!
//! Forces are gathered per node against a frozen layout: the displacement of
//! `u` only reads positions, never writes them. That makes whole-layout
//! evaluation embarrassingly parallel and independent of thread count, since
//! each node's sum is always accumulated in the same order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{Rect, SpatialGrid};
use crate::model::{DesiredLengths, LabelGeometry, LabeledTree, Layout, LayoutParams, NodeId, Point};

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ForceError {
    #[error("edge endpoints coincide")]
    ZeroLengthEdge,
}

/// Per-node displacement vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Displacement(pub Vec<Point>);

impl Displacement {
    pub fn zeros(n: usize) -> Self {
        Displacement(vec![Point::ORIGIN; n])
    }

    pub fn get(&self, v: NodeId) -> Point {
        self.0[v]
    }

    pub fn max_norm(&self) -> f64 {
        self.0.iter().map(|p| p.norm()).fold(0.0, f64::max)
    }
}

/// Which nodes the distribution force is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Repulsion {
    /// Every other node, in ascending id.
    AllPairs,
    /// `samples` uniform draws (with replacement, never the node itself);
    /// falls back to all pairs once `samples >= n - 1`.
    Sampled {
        samples: usize,
        seed: u64,
        round: u64,
    },
    None,
}

/// Parameters with the length-dependent defaults filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForceParams {
    pub collision_strength: f64,
    pub edge_length_strength: f64,
    pub distribution_strength: f64,
    pub node_edge_strength: f64,
    pub aspect: f64,
    pub edge_constant: f64,
    pub node_edge_constant: f64,
    pub node_edge_cutoff: f64,
    pub max_step: f64,
    /// Length of the virtual offset used for coincident nodes.
    pub jitter: f64,
    pub seed: u64,
}

impl ForceParams {
    /// Resolves `params` against the shortest desired length `l_min`.
    pub fn resolve(params: &LayoutParams, lengths: &DesiredLengths) -> Self {
        let l_min = lengths.min().filter(|l| *l > 0.0).unwrap_or(1.0);
        ForceParams {
            collision_strength: params.collision_strength,
            edge_length_strength: params.edge_length_strength,
            distribution_strength: params.distribution_strength,
            node_edge_strength: params.node_edge_strength,
            aspect: params.ellipse_aspect,
            edge_constant: params.edge_constant,
            node_edge_constant: params.node_edge_constant,
            node_edge_cutoff: params.node_edge_cutoff.unwrap_or(l_min / 2.0),
            max_step: params.max_step.unwrap_or(l_min / 2.0),
            jitter: 1e-3 * l_min,
            seed: params.seed,
        }
    }
}

/// Read-only view of everything a force evaluation needs.
pub struct ForceContext<'a> {
    pub tree: &'a LabeledTree,
    pub layout: &'a Layout,
    pub geometry: &'a LabelGeometry,
    pub lengths: &'a DesiredLengths,
    pub grid: &'a SpatialGrid,
    pub params: ForceParams,
    max_adjacent: Vec<f64>,
    max_radius: f64,
}

impl<'a> ForceContext<'a> {
    pub fn new(
        tree: &'a LabeledTree,
        layout: &'a Layout,
        geometry: &'a LabelGeometry,
        lengths: &'a DesiredLengths,
        grid: &'a SpatialGrid,
        params: ForceParams,
    ) -> Self {
        let max_radius = (0..tree.len()).map(|v| geometry.collision_radius(v, params.aspect)).fold(0.0, f64::max);
        ForceContext {
            tree,
            layout,
            geometry,
            lengths,
            grid,
            params,
            max_adjacent: lengths.max_adjacent(tree),
            max_radius,
        }
    }

    /// `pu - pv`, or a seeded virtual offset when the two coincide.
    fn separation(&self, u: NodeId, v: NodeId) -> Point {
        let d = self.layout.get(u) - self.layout.get(v);
        if d != Point::ORIGIN {
            return d;
        }
        let j = jitter_direction(self.params.seed, u.min(v), u.max(v)) * self.params.jitter;
        if u < v {
            j
        } else {
            -j
        }
    }

    /// Label-overlap force on `u`: circular collision in y-stretched space.
    pub fn collision_on(&self, u: NodeId) -> Point {
        let b = self.params.aspect;
        let ru = self.geometry.collision_radius(u, b);
        let reach = ru + self.max_radius;
        let query = Rect::centered(self.layout.get(u), 2.0 * reach, 2.0 * reach / b);
        let mut near = Vec::new();
        self.grid.nodes_near(&query, &mut near);
        let mut acc = Point::ORIGIN;
        for v in near {
            if v == u {
                continue;
            }
            let d = self.separation(u, v);
            acc += collision_push(d, ru, self.geometry.collision_radius(v, b), b);
        }
        acc
    }

    /// Edge-length force on `u`, half of each incident edge's force.
    pub fn edge_length_on(&self, u: NodeId) -> Point {
        let mut acc = Point::ORIGIN;
        for &(w, e) in self.tree.neighbors(u) {
            let d = self.separation(u, w);
            acc += edge_push(d, self.lengths.get(e), self.params.edge_constant);
        }
        acc
    }

    pub fn distribution_on(&self, u: NodeId, repulsion: Repulsion) -> Point {
        let n = self.tree.len();
        let mut acc = Point::ORIGIN;
        let mut add = |v: NodeId| {
            let s = self.max_adjacent[u] * self.max_adjacent[v];
            acc += distribution_push(self.separation(u, v), s);
        };
        match repulsion {
            Repulsion::None => {}
            Repulsion::Sampled { samples, seed, round } if samples < n.saturating_sub(1) => {
                let mut rng = node_rng(seed, round, u);
                for _ in 0..samples {
                    let mut v = rng.gen_range(0..n - 1);
                    if v >= u {
                        v += 1;
                    }
                    add(v);
                }
            }
            _ => (0..n).filter(|&v| v != u).for_each(add),
        }
        acc
    }

    /// Push of `u` away from nearby non-incident edges it projects onto.
    pub fn node_edge_on(&self, u: NodeId) -> Point {
        let cutoff = self.params.node_edge_cutoff;
        let pu = self.layout.get(u);
        let mut edges = Vec::new();
        self.grid.edges_near(&Rect::centered(pu, 2.0 * cutoff, 2.0 * cutoff), &mut edges);
        let mut acc = Point::ORIGIN;
        for e in edges {
            let edge = self.tree.edge(e);
            if edge.touches(u) {
                continue;
            }
            acc += node_edge_push(
                pu,
                self.layout.get(edge.a),
                self.layout.get(edge.b),
                self.params.node_edge_constant,
                cutoff,
            );
        }
        acc
    }

    /// `S_c F_c + S_l F_l + S_d F_d + S_ne F_ne`, clamped to `max_step`.
    pub fn total_on(&self, u: NodeId, repulsion: Repulsion) -> Point {
        let p = &self.params;
        let mut t = Point::ORIGIN;
        if p.collision_strength > 0.0 {
            t += self.collision_on(u) * p.collision_strength;
        }
        if p.edge_length_strength > 0.0 {
            t += self.edge_length_on(u) * p.edge_length_strength;
        }
        if p.distribution_strength > 0.0 {
            t += self.distribution_on(u, repulsion) * p.distribution_strength;
        }
        if p.node_edge_strength > 0.0 {
            t += self.node_edge_on(u) * p.node_edge_strength;
        }
        if !t.is_finite() {
            return Point::ORIGIN;
        }
        t.clamp_norm(p.max_step)
    }

    fn map_nodes(&self, parallel: bool, f: impl Fn(NodeId) -> Point + Sync + Send) -> Displacement {
        let n = self.tree.len();
        if parallel {
            Displacement((0..n).into_par_iter().map(f).collect())
        } else {
            Displacement((0..n).map(f).collect())
        }
    }

    pub fn collision_force(&self, parallel: bool) -> Displacement {
        self.map_nodes(parallel, |u| self.collision_on(u))
    }

    pub fn edge_length_force(&self, parallel: bool) -> Displacement {
        self.map_nodes(parallel, |u| self.edge_length_on(u))
    }

    pub fn distribution_force(&self, repulsion: Repulsion, parallel: bool) -> Displacement {
        self.map_nodes(parallel, |u| self.distribution_on(u, repulsion))
    }

    pub fn node_edge_force(&self, parallel: bool) -> Displacement {
        self.map_nodes(parallel, |u| self.node_edge_on(u))
    }

    pub fn total_force(&self, repulsion: Repulsion, parallel: bool) -> Displacement {
        self.map_nodes(parallel, |u| self.total_on(u, repulsion))
    }
}

/// Collision push on a node displaced by `d` from its partner.
///
/// The y axis is stretched by `aspect`, the two circles of radii `ru`, `rv`
/// are pushed apart by half their penetration each, and the push is mapped
/// back by dividing its y component by `aspect`.
pub fn collision_push(d: Point, ru: f64, rv: f64, aspect: f64) -> Point {
    let stretched = Point::new(d.x, d.y * aspect);
    let dist = stretched.norm();
    let penetration = ru + rv - dist;
    if penetration <= 0.0 || dist == 0.0 {
        return Point::ORIGIN;
    }
    let push = stretched * (penetration / 2.0 / dist);
    Point::new(push.x, push.y / aspect)
}

/// Signed edge-force magnitude: `K d` when stretched (attractive, positive),
/// `-K / d` when compressed (repulsive), zero at the desired length.
pub fn edge_force_magnitude(d: f64, desired: f64, k: f64) -> Result<f64, ForceError> {
    if d == 0.0 {
        return Err(ForceError::ZeroLengthEdge);
    }
    // Relative slack so an exactly realized edge stays at rest despite rounding.
    let slack = 1e-9 * desired;
    Ok(if d > desired + slack {
        k * d
    } else if d < desired - slack {
        -k / d
    } else {
        0.0
    })
}

/// This endpoint's half of the edge force, for an endpoint displaced by `d`
/// from the other one.
pub fn edge_push(d: Point, desired: f64, k: f64) -> Point {
    let len = d.norm();
    match edge_force_magnitude(len, desired, k) {
        Ok(m) => d * (-m / 2.0 / len),
        Err(_) => Point::ORIGIN,
    }
}

/// Charge-like repulsion `s / |d|^2` along `d`.
pub fn distribution_push(d: Point, strength: f64) -> Point {
    let d2 = d.dot(d);
    if d2 == 0.0 {
        return Point::ORIGIN;
    }
    d * (strength / d2 / d2.sqrt())
}

/// Orthogonal push `c / dist` of point `p` away from segment `ab`, zero when
/// `p` does not project inside the segment or is farther than `cutoff`.
pub fn node_edge_push(p: Point, a: Point, b: Point, c: f64, cutoff: f64) -> Point {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return Point::ORIGIN;
    }
    let t = (p - a).dot(ab) / len2;
    if !(0.0..=1.0).contains(&t) {
        return Point::ORIGIN;
    }
    let foot = a + ab * t;
    let away = p - foot;
    let dist = away.norm();
    if dist == 0.0 || dist > cutoff {
        return Point::ORIGIN;
    }
    away * (c / dist / dist)
}

pub(crate) fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn jitter_direction(seed: u64, a: NodeId, b: NodeId) -> Point {
    let h = splitmix(seed ^ splitmix(a as u64 ^ splitmix(b as u64)));
    let angle = (h >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
    Point::from_polar(1.0, angle)
}

/// Per-node stream so sampling does not depend on evaluation order.
pub(crate) fn node_rng(seed: u64, round: u64, node: NodeId) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(round ^ splitmix(node as u64))))
}
