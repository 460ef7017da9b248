//! Iteration drivers: sequential and batched-parallel force-directed
//! improvement, and the stochastic final pass that removes label overlaps.
//!
//! Every coordinate write goes through a crossing guard, so a crossing-free
//! input stays crossing-free after any number of iterations.
//!
//! Both improvement drivers compute a batch's proposals against the layout
//! as it stood when the batch started and then apply them one node at a time
//! in ascending id. The sequential driver uses one batch per iteration and a
//! plain grid query per move. The parallel driver splits the nodes into id
//! stripes, evaluates forces and a first crossing check concurrently against
//! the frozen batch snapshot, and then revalidates sequentially against only
//! the edges that moved since the snapshot. Revalidation is exact, so with a
//! single batch and unsampled repulsion both drivers produce the same layout.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forces::{node_rng, splitmix, ForceContext, ForceParams, Repulsion};
use crate::geometry::{
    count_crossings, edge_conflicts_with_move, labels_overlap, move_conflicts, move_introduces_crossing,
    overlapping_pairs, Rect, SpatialGrid, DEGENERATE,
};
use crate::model::{
    DesiredLengths, EdgeId, LabelGeometry, LabeledTree, Layout, LayoutParams, NodeId, ParamError, Point,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("{count} label overlaps remain after the final iteration")]
    OverlapsRemain { count: usize, pairs: Vec<(NodeId, NodeId)> },
    #[error("input layout has {0} edge crossings")]
    CrossingsInInput(usize),
    #[error("layout has {layout} positions but the tree has {tree} nodes")]
    SizeMismatch { layout: usize, tree: usize },
    #[error(transparent)]
    InvalidParams(#[from] ParamError),
}

/// One line of the per-iteration log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationStats {
    pub phase: String,
    pub iteration: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub overlaps: usize,
    pub max_displacement: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTimes {
    pub forces: f64,
    pub crossing_checks: f64,
    pub updates: f64,
    pub final_iteration: f64,
}

/// What happened during a run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub iterations: usize,
    /// Label overlaps after each improvement iteration, or after each final pass.
    pub overlaps: Vec<usize>,
    /// `(iteration, crossings)` at each checkpoint; every count must be 0.
    pub crossing_checkpoints: Vec<(usize, usize)>,
    pub accepted_moves: usize,
    pub rejected_moves: usize,
    pub final_passes: usize,
    /// Scale factors applied by the final iteration to catch up, in order.
    pub final_growth: Vec<f64>,
    pub phase_seconds: PhaseTimes,
}

impl RunReport {
    /// Appends another run's counters to this one.
    pub fn absorb(&mut self, other: RunReport) {
        self.iterations += other.iterations;
        self.overlaps.extend(other.overlaps);
        self.crossing_checkpoints.extend(other.crossing_checkpoints);
        self.accepted_moves += other.accepted_moves;
        self.rejected_moves += other.rejected_moves;
        self.final_passes += other.final_passes;
        self.final_growth.extend(other.final_growth);
        self.phase_seconds.forces += other.phase_seconds.forces;
        self.phase_seconds.crossing_checks += other.phase_seconds.crossing_checks;
        self.phase_seconds.updates += other.phase_seconds.updates;
        self.phase_seconds.final_iteration += other.phase_seconds.final_iteration;
    }
}

/// Optional instrumentation for a run.
#[derive(Default)]
pub struct RunOptions<'a> {
    /// Iterations (1-based) after which crossings are counted. Empty means
    /// the first, the tenth and the last.
    pub checkpoints: Vec<usize>,
    /// Count overlaps after every iteration (costs one grid sweep each).
    pub track_overlaps: bool,
    pub observer: Option<&'a mut (dyn FnMut(&IterationStats) + Send)>,
}

impl RunOptions<'_> {
    fn checkpoint_set(&self, iterations: usize) -> Vec<usize> {
        if self.checkpoints.is_empty() {
            let mut c = vec![1, 10, iterations];
            c.retain(|&i| i >= 1 && i <= iterations);
            c.dedup();
            c
        } else {
            self.checkpoints.clone()
        }
    }

    fn emit(&mut self, stats: IterationStats) {
        if let Some(observer) = self.observer.as_mut() {
            observer(&stats);
        }
    }
}

struct State<'a> {
    tree: &'a LabeledTree,
    geometry: &'a LabelGeometry,
    layout: Layout,
    grid: SpatialGrid,
}

impl<'a> State<'a> {
    fn new(
        layout: &Layout,
        tree: &'a LabeledTree,
        geometry: &'a LabelGeometry,
        lengths: &'a DesiredLengths,
    ) -> Result<Self, EngineError> {
        if layout.len() != tree.len() {
            return Err(EngineError::SizeMismatch { layout: layout.len(), tree: tree.len() });
        }
        let grid = SpatialGrid::build(tree, layout, geometry, SpatialGrid::default_cell_size(lengths, geometry));
        let crossings = count_crossings(layout, tree, &grid);
        if crossings > 0 {
            return Err(EngineError::CrossingsInInput(crossings));
        }
        Ok(State { tree, geometry, layout: layout.clone(), grid })
    }

    fn overlaps(&self) -> usize {
        overlapping_pairs(&self.layout, self.geometry, &self.grid).len()
    }

    fn crossings(&self) -> usize {
        count_crossings(&self.layout, self.tree, &self.grid)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Driver {
    Sequential,
    Parallel,
}

/// Sequential force-directed improvement with all-pairs repulsion.
pub fn rt_improve(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
) -> Result<(Layout, RunReport), EngineError> {
    rt_improve_with(layout, tree, geometry, lengths, params, &mut RunOptions::default())
}

pub fn rt_improve_with(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
    options: &mut RunOptions,
) -> Result<(Layout, RunReport), EngineError> {
    improve(layout, tree, geometry, lengths, params, Driver::Sequential, options)
}

/// Batched improvement with sampled repulsion; runs on the current rayon pool.
pub fn prt_improve(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
) -> Result<(Layout, RunReport), EngineError> {
    prt_improve_with(layout, tree, geometry, lengths, params, &mut RunOptions::default())
}

pub fn prt_improve_with(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
    options: &mut RunOptions,
) -> Result<(Layout, RunReport), EngineError> {
    improve(layout, tree, geometry, lengths, params, Driver::Parallel, options)
}

fn improve(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
    driver: Driver,
    options: &mut RunOptions,
) -> Result<(Layout, RunReport), EngineError> {
    params.validate()?;
    let mut state = State::new(layout, tree, geometry, lengths)?;
    let force_params = ForceParams::resolve(params, lengths);
    let checkpoints = options.checkpoint_set(params.iterations);
    let n = tree.len();
    let batch = match driver {
        Driver::Sequential => n.max(1),
        Driver::Parallel => params.batch,
    };
    let mut report = RunReport::default();

    for iteration in 1..=params.iterations {
        let started = Instant::now();
        let repulsion = match driver {
            Driver::Sequential => Repulsion::AllPairs,
            Driver::Parallel => {
                Repulsion::Sampled { samples: params.repulsion_samples, seed: params.seed, round: iteration as u64 }
            }
        };
        let (mut accepted, mut rejected, mut max_displacement) = (0, 0, 0.0f64);
        for start in (0..n).step_by(batch) {
            let nodes = start..(start + batch).min(n);
            let t = Instant::now();
            let proposals: Vec<Point> = {
                let ctx = ForceContext::new(tree, &state.layout, geometry, lengths, &state.grid, force_params);
                match driver {
                    Driver::Sequential => nodes.clone().map(|u| ctx.total_on(u, repulsion)).collect(),
                    Driver::Parallel => nodes.clone().into_par_iter().map(|u| ctx.total_on(u, repulsion)).collect(),
                }
            };
            report.phase_seconds.forces += t.elapsed().as_secs_f64();

            let outcome = match driver {
                Driver::Sequential => apply_sequential(&mut state, start, &proposals, &mut report),
                Driver::Parallel => apply_revalidated(&mut state, start, &proposals, &mut report),
            };
            accepted += outcome.0;
            rejected += outcome.1;
            max_displacement = max_displacement.max(outcome.2);
        }
        report.iterations = iteration;
        report.accepted_moves += accepted;
        report.rejected_moves += rejected;
        let overlaps = if options.track_overlaps || options.observer.is_some() { state.overlaps() } else { 0 };
        if options.track_overlaps {
            report.overlaps.push(overlaps);
        }
        if checkpoints.contains(&iteration) {
            report.crossing_checkpoints.push((iteration, state.crossings()));
        }
        options.emit(IterationStats {
            phase: "improve".into(),
            iteration,
            accepted,
            rejected,
            overlaps,
            max_displacement,
            seconds: started.elapsed().as_secs_f64(),
        });
    }
    Ok((state.layout, report))
}

/// Applies proposals in order, each checked against the live grid.
fn apply_sequential(
    state: &mut State,
    first: NodeId,
    proposals: &[Point],
    report: &mut RunReport,
) -> (usize, usize, f64) {
    let t = Instant::now();
    let (mut accepted, mut rejected, mut max_d) = (0, 0, 0.0f64);
    for (i, &step) in proposals.iter().enumerate() {
        if step == Point::ORIGIN {
            continue;
        }
        let v = first + i;
        let to = state.layout.get(v) + step;
        let step = if move_introduces_crossing(&state.layout, state.tree, &state.grid, v, to) {
            backoff(state, v, step)
        } else {
            Some(step)
        };
        match step {
            Some(step) => {
                let to = state.layout.get(v) + step;
                state.grid.move_node(state.tree, &mut state.layout, v, to);
                accepted += 1;
                max_d = max_d.max(step.norm());
            }
            None => rejected += 1,
        }
    }
    report.phase_seconds.updates += t.elapsed().as_secs_f64();
    (accepted, rejected, max_d)
}

/// Parallel snapshot check followed by exact sequential revalidation.
///
/// A move of `v` is blocked iff one of `v`'s new segments meets an edge at
/// its current position. Edges untouched since the snapshot are still where
/// the parallel check saw them, so only edges incident to a node moved in
/// this batch ("dirty" edges) need a second look. If a neighbor of `v` has
/// moved, `v`'s own segments differ from the snapshot and the full check
/// runs instead.
fn apply_revalidated(
    state: &mut State,
    first: NodeId,
    proposals: &[Point],
    report: &mut RunReport,
) -> (usize, usize, f64) {
    let t = Instant::now();
    let conflicts: Vec<Vec<EdgeId>> = {
        let (layout, tree, grid) = (&state.layout, state.tree, &state.grid);
        proposals
            .par_iter()
            .enumerate()
            .map(|(i, &step)| {
                let mut out = Vec::new();
                if step != Point::ORIGIN {
                    let v = first + i;
                    move_conflicts(layout, tree, grid, v, layout.get(v) + step, &mut out, false);
                }
                out
            })
            .collect()
    };
    report.phase_seconds.crossing_checks += t.elapsed().as_secs_f64();

    let t = Instant::now();
    let tree = state.tree;
    let mut moved: Vec<NodeId> = Vec::new();
    let mut dirty: Vec<(EdgeId, Rect)> = Vec::new();
    let (mut accepted, mut rejected, mut max_d) = (0, 0, 0.0f64);
    for (i, &step) in proposals.iter().enumerate() {
        if step == Point::ORIGIN {
            continue;
        }
        let v = first + i;
        let to = state.layout.get(v) + step;
        let neighbor_moved = tree.neighbors(v).iter().any(|&(w, _)| moved.binary_search(&w).is_ok());
        let blocked = if neighbor_moved {
            move_introduces_crossing(&state.layout, tree, &state.grid, v, to)
        } else {
            conflicts[i].contains(&DEGENERATE)
                || conflicts[i].iter().any(|e| !dirty.iter().any(|(d, _)| d == e))
                || dirty_blocks(state, v, to, &dirty)
        };
        let step = if blocked { backoff(state, v, step) } else { Some(step) };
        let Some(step) = step else {
            rejected += 1;
            continue;
        };
        let to = state.layout.get(v) + step;
        state.grid.move_node(tree, &mut state.layout, v, to);
        accepted += 1;
        max_d = max_d.max(step.norm());
        // ids arrive in ascending order, so `moved` stays sorted
        moved.push(v);
        for &(w, e) in tree.neighbors(v) {
            let rect = Rect::of_segment(to, state.layout.get(w));
            match dirty.iter_mut().find(|(d, _)| *d == e) {
                Some(entry) => entry.1 = rect,
                None => dirty.push((e, rect)),
            }
        }
    }
    report.phase_seconds.updates += t.elapsed().as_secs_f64();
    (accepted, rejected, max_d)
}

/// Halvings tried after a blocked move before the node stays put.
const MOVE_BACKOFFS: usize = 4;

/// The longest of `step / 2, step / 4, ...` (up to [`MOVE_BACKOFFS`]
/// halvings) that keeps the drawing crossing-free, checked against the live
/// layout.
fn backoff(state: &State, v: NodeId, step: Point) -> Option<Point> {
    let here = state.layout.get(v);
    let mut step = step;
    for _ in 0..MOVE_BACKOFFS {
        step = step * 0.5;
        if !move_introduces_crossing(&state.layout, state.tree, &state.grid, v, here + step) {
            return Some(step);
        }
    }
    None
}

fn dirty_blocks(state: &State, v: NodeId, to: Point, dirty: &[(EdgeId, Rect)]) -> bool {
    if dirty.is_empty() {
        return false;
    }
    let reach = state
        .tree
        .neighbors(v)
        .iter()
        .fold(Rect::EMPTY, |r, &(w, _)| r.union(&Rect::of_segment(to, state.layout.get(w))));
    dirty.iter().any(|&(e, rect)| rect.touches(&reach) && edge_conflicts_with_move(&state.layout, state.tree, v, to, e))
}

/// Final overlap removal.
///
/// Each pass walks the overlapping pairs in order. For a pair `(u, v)`,
/// `final_steps` random offsets inside a small square are tried for `u`,
/// then for `v`, followed by the four axis-aligned shifts that just clear the
/// pair. The first candidate is taken that keeps the drawing crossing-free,
/// gives the node no overlap partner it did not already have, and makes the
/// pair's overlap strictly shallower. A pair gets up to
/// [`FINAL_MOVES_PER_PAIR`] moves per pass, and when no candidate works the
/// square doubles, up to [`FINAL_ESCALATIONS`] times. The square's side is
/// `sqrt(final_size_fraction)` times the side of the smallest square holding
/// the drawing.
///
/// Some overlaps sit between labels boxed in by nearly parallel edges,
/// where every overlap-free spot for either node is across an edge. When a
/// pass falls behind the pace needed to finish within `final_max_passes`,
/// the whole drawing is scaled up about its center by just enough to
/// separate the pairs needed to get back on pace (at most
/// [`FINAL_GROWTH_MAX`] per pass). Scaling keeps every orientation, so it
/// never introduces a crossing, and with a factor above 1 it never
/// introduces an overlap. Overlaps left after the last pass are an error.
///
/// With `parallel`, the candidates of one node are checked concurrently; the
/// first acceptable one in draw order wins, so the result equals the
/// sequential one.
pub fn final_iteration(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
    parallel: bool,
) -> Result<(Layout, RunReport), EngineError> {
    final_iteration_with(layout, tree, geometry, lengths, params, parallel, &mut RunOptions::default())
}

const FINAL_STREAM: u64 = 0xf1a1_0000_0000_0000;
/// Times the sample square doubles for a pair where neither node found a spot.
pub const FINAL_ESCALATIONS: u32 = 4;
/// Accepted moves per pair and pass; a move may only make the overlap shallower.
pub const FINAL_MOVES_PER_PAIR: u32 = 4;
/// Relative clearance of the axis-aligned separating shifts and of growth.
const SEPARATION_GAP: f64 = 0.02;
/// Largest scale-up of either axis applied after one pass.
pub const FINAL_GROWTH_MAX: f64 = 1.1;

pub fn final_iteration_with(
    layout: &Layout,
    tree: &LabeledTree,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    params: &LayoutParams,
    parallel: bool,
    options: &mut RunOptions,
) -> Result<(Layout, RunReport), EngineError> {
    params.validate()?;
    let started = Instant::now();
    let mut state = State::new(layout, tree, geometry, lengths)?;
    let mut report = RunReport::default();
    let mut pairs = overlapping_pairs(&state.layout, geometry, &state.grid);
    let mut pass = 0;
    while !pairs.is_empty() && pass < params.final_max_passes {
        pass += 1;
        let t = Instant::now();
        let bounds = state.layout.bounds(geometry);
        let side = bounds.width().max(bounds.height()) * params.final_size_fraction.sqrt();
        let (mut accepted, mut rejected) = (0, 0);
        for (k, &(u, v)) in pairs.iter().enumerate() {
            let (a, r) = separate_pair(&mut state, params, pass, k, u, v, side, parallel);
            accepted += a;
            rejected += r;
        }
        let searched = overlapping_pairs(&state.layout, geometry, &state.grid);
        let growth = growth_needed(&state, pairs.len(), &searched, params.final_max_passes - pass);
        if let Some(factor) = growth {
            state.layout.scale_about(bounds.center(), Point::new(factor, factor));
            state.grid = SpatialGrid::build(tree, &state.layout, geometry, state.grid.cell_size());
            report.final_growth.push(factor);
        }
        pairs = if growth.is_some() { overlapping_pairs(&state.layout, geometry, &state.grid) } else { searched };
        report.final_passes = pass;
        report.accepted_moves += accepted;
        report.rejected_moves += rejected;
        report.overlaps.push(pairs.len());
        options.emit(IterationStats {
            phase: "final".into(),
            iteration: pass,
            accepted,
            rejected,
            overlaps: pairs.len(),
            max_displacement: side * (1u64 << FINAL_ESCALATIONS) as f64 / std::f64::consts::SQRT_2,
            seconds: t.elapsed().as_secs_f64(),
        });
    }
    report.crossing_checkpoints.push((0, state.crossings()));
    report.phase_seconds.final_iteration = started.elapsed().as_secs_f64();
    if !pairs.is_empty() {
        return Err(EngineError::OverlapsRemain { count: pairs.len(), pairs });
    }
    Ok((state.layout, report))
}

/// Works on one overlapping pair; returns the accepted and rejected attempts.
#[allow(clippy::too_many_arguments)]
fn separate_pair(
    state: &mut State,
    params: &LayoutParams,
    pass: usize,
    k: usize,
    u: NodeId,
    v: NodeId,
    side: f64,
    parallel: bool,
) -> (usize, usize) {
    let (mut accepted, mut rejected) = (0, 0);
    let mut moves = 0u32;
    let mut scale = 0u32;
    'pair: while scale <= FINAL_ESCALATIONS && labels_overlap(u, v, &state.layout, state.geometry) {
        for (which, node, other) in [(0u64, u, v), (1, v, u)] {
            let stream = splitmix(FINAL_STREAM ^ pass as u64)
                ^ (2 * k as u64 + which)
                ^ ((scale as u64) << 48)
                ^ ((moves as u64) << 40);
            let mut candidates = draw_offsets(params, stream, node, side * (1u64 << scale) as f64);
            candidates.extend(separating_offsets(state, node, other, scale));
            match first_acceptable(state, node, other, &candidates, parallel) {
                Some(to) => {
                    state.grid.move_node(state.tree, &mut state.layout, node, to);
                    accepted += 1;
                    moves += 1;
                    if moves >= FINAL_MOVES_PER_PAIR {
                        break 'pair;
                    }
                    continue 'pair;
                }
                None => rejected += 1,
            }
        }
        scale += 1;
    }
    (accepted, rejected)
}

/// Uniform scale factor that puts the final iteration back on pace, if it
/// fell behind.
///
/// A pass that took the overlap count from `before` to `pairs.len()` is
/// assumed to repeat its ratio for the `passes_left`; if that would not
/// reach zero, the factor is the smallest that separates enough of the
/// remaining pairs (those cheapest to separate by scaling) for the rest to
/// make it, capped at [`FINAL_GROWTH_MAX`]. After the last pass the only
/// growth allowed is one that separates every remaining pair within the cap.
fn growth_needed(state: &State, before: usize, pairs: &[(NodeId, NodeId)], passes_left: usize) -> Option<f64> {
    if pairs.is_empty() {
        return None;
    }
    let mut needs: Vec<f64> = pairs
        .iter()
        .map(|&(u, v)| {
            let f = separating_factors(state.geometry, u, state.layout.get(u), v, state.layout.get(v));
            f.x.min(f.y)
        })
        .collect();
    needs.sort_by(f64::total_cmp);
    if passes_left == 0 {
        let last = needs[needs.len() - 1];
        return (last <= FINAL_GROWTH_MAX).then(|| last.max(1.0 + SEPARATION_GAP));
    }
    let ratio = pairs.len() as f64 / before.max(1) as f64;
    // pairs the remaining passes can be expected to clear at this ratio
    let clearable = if ratio < 1.0 { ratio.powi(-(passes_left as i32)) } else { 1.0 };
    if (pairs.len() as f64) < clearable {
        return None;
    }
    let keep = (clearable.ceil() as usize).saturating_sub(1);
    let resolve = pairs.len().saturating_sub(keep).max(1);
    Some(needs[resolve - 1].clamp(1.0 + SEPARATION_GAP, FINAL_GROWTH_MAX))
}

fn draw_offsets(params: &LayoutParams, stream: u64, node: NodeId, side: f64) -> Vec<Point> {
    let mut rng = node_rng(params.seed, stream, node);
    (0..params.final_steps)
        .map(|_| {
            let rx: f64 = rng.gen();
            let ry: f64 = if params.final_scalar_offset { rx } else { rng.gen() };
            Point::new(rx * side - side / 2.0, ry * side - side / 2.0)
        })
        .collect()
}

/// The four axis-aligned shifts that just clear `node` off `other`, the one
/// pointing away from `other` first on each axis. The clearance doubles with
/// the escalation `scale`.
fn separating_offsets(state: &State, node: NodeId, other: NodeId, scale: u32) -> [Point; 4] {
    let (a, b) = (state.geometry.get(node), state.geometry.get(other));
    let d = state.layout.get(node) - state.layout.get(other);
    let gap = (1u64 << scale) as f64 * SEPARATION_GAP;
    let reach_x = (a.width + b.width) / 2.0 * (1.0 + gap);
    let reach_y = (a.height + b.height) / 2.0 * (1.0 + gap);
    let sx = if d.x >= 0.0 { 1.0 } else { -1.0 };
    let sy = if d.y >= 0.0 { 1.0 } else { -1.0 };
    [
        Point::new(sx * reach_x - d.x, 0.0),
        Point::new(0.0, sy * reach_y - d.y),
        Point::new(-sx * reach_x - d.x, 0.0),
        Point::new(0.0, -sy * reach_y - d.y),
    ]
}

/// Smallest scalings of the x and of the y coordinates that each alone
/// separate the labels of `u` and `v`, plus a small clearance. Infinite
/// along an axis where the centers agree.
fn separating_factors(geometry: &LabelGeometry, u: NodeId, pu: Point, v: NodeId, pv: Point) -> Point {
    let (a, b) = (geometry.get(u), geometry.get(v));
    let d = pu - pv;
    let fx = (a.width + b.width) / 2.0 / d.x.abs();
    let fy = (a.height + b.height) / 2.0 / d.y.abs();
    Point::new(fx, fy) * (1.0 + SEPARATION_GAP)
}

/// Overlap depth of two labels: the smaller of the axis penetrations, or 0.
fn overlap_depth(geometry: &LabelGeometry, u: NodeId, pu: Point, v: NodeId, pv: Point) -> f64 {
    let (a, b) = (geometry.get(u), geometry.get(v));
    let px = (a.width + b.width) / 2.0 - (pu.x - pv.x).abs();
    let py = (a.height + b.height) / 2.0 - (pu.y - pv.y).abs();
    px.min(py).max(0.0)
}

fn first_acceptable(state: &State, node: NodeId, other: NodeId, offsets: &[Point], parallel: bool) -> Option<Point> {
    let here = state.layout.get(node);
    let there = state.layout.get(other);
    let depth = overlap_depth(state.geometry, node, here, other, there);
    let mut before = Vec::new();
    state.grid.overlap_partners(&state.layout, state.geometry, node, here, &mut before);
    let ok = |offset: &Point| -> bool {
        let to = here + *offset;
        if overlap_depth(state.geometry, node, to, other, there) >= depth {
            return false;
        }
        let mut after = Vec::new();
        state.grid.overlap_partners(&state.layout, state.geometry, node, to, &mut after);
        if after.iter().any(|w| before.binary_search(w).is_err()) {
            return false;
        }
        !move_introduces_crossing(&state.layout, state.tree, &state.grid, node, to)
    };
    let found = if parallel { offsets.par_iter().find_first(|o| ok(o)) } else { offsets.iter().find(|o| ok(o)) };
    found.map(|o| here + *o)
}
