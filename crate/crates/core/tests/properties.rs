//! Property tests for the model, geometry, forces, initializations,
//! metrics, hierarchy and document round-trip.

mod common;

use arbor_core::forces::{collision_push, ForceContext, ForceParams, Repulsion};
use arbor_core::geometry::{
    count_crossings, count_overlaps, labels_overlap, move_introduces_crossing, segments_intersect,
};
use arbor_core::init::{compact_init, edge_length_init, partition_range};
use arbor_core::io::MapDocument;
use arbor_core::metrics::{cm, del};
use arbor_core::mlst::{assign_edge_lengths, extract_mlst, select_terminals, LengthMode, WeightedGraph};
use arbor_core::model::{EdgeRecord, NodeRecord};
use arbor_core::pipeline::{run_pipeline, InitKind, Mode, PipelineConfig};
use arbor_core::{DesiredLengths, LabelBox, LabelGeometry, LabeledTree, Layout, LayoutParams, Point, SpatialGrid};
use common::*;
use proptest::prelude::*;

fn tree_strategy(max: usize) -> impl Strategy<Value = (usize, u64)> {
    (1..=max, any::<u64>())
}

fn lengths_for(tree: &LabeledTree, seed: u64) -> DesiredLengths {
    use rand::Rng;
    let mut r = rng(seed);
    DesiredLengths((0..tree.edge_count()).map(|_| r.gen_range(20.0..400.0)).collect())
}

fn params_only(strengths: [f64; 4]) -> LayoutParams {
    LayoutParams {
        collision_strength: strengths[0],
        edge_length_strength: strengths[1],
        distribution_strength: strengths[2],
        node_edge_strength: strengths[3],
        max_step: Some(f64::INFINITY),
        ..LayoutParams::default()
    }
}

/// Every force field and the total on a random tree and layout, sequential.
fn forces(
    tree: &LabeledTree,
    layout: &Layout,
    geometry: &LabelGeometry,
    lengths: &DesiredLengths,
    p: &LayoutParams,
) -> Vec<Vec<Point>> {
    let grid = SpatialGrid::build(tree, layout, geometry, SpatialGrid::default_cell_size(lengths, geometry));
    let ctx = ForceContext::new(tree, layout, geometry, lengths, &grid, ForceParams::resolve(p, lengths));
    vec![
        ctx.collision_force(false).0,
        ctx.edge_length_force(false).0,
        ctx.distribution_force(Repulsion::AllPairs, false).0,
        ctx.node_edge_force(false).0,
        ctx.total_force(Repulsion::AllPairs, false).0,
    ]
}

fn close(a: Point, b: Point, tol: f64) -> bool {
    (a - b).norm() <= tol * (1.0 + a.norm().max(b.norm()))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn subtree_sizes_and_bfs_order((n, seed) in tree_strategy(300), root_pick in any::<usize>()) {
        let tree = random_tree(n, seed);
        let root = root_pick % n;
        let rooted = tree.rooted(root).unwrap();
        let children_total: usize = rooted.children[root].iter().map(|&c| rooted.size[c]).sum();
        prop_assert_eq!(children_total, n - 1);
        let mut seen = vec![usize::MAX; n];
        for (i, &v) in rooted.order.iter().enumerate() {
            prop_assert_eq!(seen[v], usize::MAX);
            seen[v] = i;
        }
        for v in 0..n {
            prop_assert!(seen[v] != usize::MAX);
            if let Some((p, _)) = rooted.parent[v] {
                prop_assert!(seen[p] < seen[v]);
            }
        }
    }

    #[test]
    fn tree_records_round_trip((n, seed) in tree_strategy(200)) {
        let tree = random_tree(n, seed);
        let again = LabeledTree::build(tree.node_records(), tree.edge_records()).unwrap();
        prop_assert_eq!(again, tree);
    }

    #[test]
    fn wedge_partition(weights in prop::collection::vec(1usize..50, 1..20), start in 0.0..3.0f64, span in 0.1..6.2f64) {
        let parts = partition_range(start, start + span, &weights);
        let total: usize = weights.iter().sum();
        prop_assert_eq!(parts[0].0, start);
        prop_assert_eq!(parts[parts.len() - 1].1, start + span);
        let mut sum = 0.0;
        for (i, &(a, b)) in parts.iter().enumerate() {
            if i > 0 {
                prop_assert_eq!(a, parts[i - 1].1);
            }
            sum += b - a;
            prop_assert!(((b - a) / span - weights[i] as f64 / total as f64).abs() < 1e-12);
        }
        prop_assert!((sum - span).abs() < 1e-12);
    }

    #[test]
    fn initializations_are_crossing_free((n, seed) in tree_strategy(400), root_pick in any::<usize>()) {
        let tree = random_tree(n, seed);
        let root = root_pick % n;
        let lengths = lengths_for(&tree, seed);
        let l = edge_length_init(&tree, root, &lengths).unwrap();
        prop_assert_eq!(brute_crossings(&tree, &l), 0);
        for e in brute_relative_errors(&tree, &l, &lengths) {
            prop_assert!(e.abs() < 1e-9);
        }
        let c = compact_init(&tree, root, 200.0).unwrap();
        prop_assert_eq!(brute_crossings(&tree, &c), 0);
        let depth = tree.rooted(root).unwrap().depth;
        for (v, &d) in depth.iter().enumerate() {
            let r = d as f64 * 200.0;
            prop_assert!((c.get(v).norm() - r).abs() < 1e-9 * (1.0 + r));
        }
    }

    #[test]
    fn grid_counts_match_brute_force((n, seed) in tree_strategy(150), extent in 50.0..1500.0f64, cell in 3.0..400.0f64) {
        let tree = random_tree(n, seed);
        let mut r = rng(seed ^ 0xabc);
        let layout = random_layout(n, extent, &mut r);
        let geometry = random_geometry(n, &mut r);
        let grid = SpatialGrid::build(&tree, &layout, &geometry, cell);
        prop_assert_eq!(count_crossings(&layout, &tree, &grid), brute_crossings(&tree, &layout));
        prop_assert_eq!(count_overlaps(&layout, &geometry, &grid), brute_overlaps(&layout, &geometry));
    }

    #[test]
    fn staying_put_never_crosses((n, seed) in tree_strategy(300)) {
        let tree = random_tree(n, seed);
        let lengths = lengths_for(&tree, seed);
        let layout = edge_length_init(&tree, 0, &lengths).unwrap();
        let geometry = LabelGeometry::from_labels(&tree, 14.0);
        let grid = SpatialGrid::build(&tree, &layout, &geometry, SpatialGrid::default_cell_size(&lengths, &geometry));
        for v in 0..n {
            prop_assert!(!move_introduces_crossing(&layout, &tree, &grid, v, layout.get(v)));
        }
    }

    #[test]
    fn predicates_are_symmetric(pts in prop::array::uniform8(-10.0..10.0f64)) {
        let p = |i: usize| Point::new(pts[2 * i], pts[2 * i + 1]);
        let (a, b, c, d) = (p(0), p(1), p(2), p(3));
        let fwd = segments_intersect(a, b, c, d);
        prop_assert_eq!(fwd, segments_intersect(c, d, a, b));
        prop_assert_eq!(fwd, segments_intersect(b, a, d, c));
        prop_assert_eq!(fwd, brute_segments_meet((a.x, a.y), (b.x, b.y), (c.x, c.y), (d.x, d.y)));
        let layout = Layout::new(vec![a, b]);
        let g = LabelGeometry::new(vec![
            LabelBox { width: pts[4].abs() + 0.1, height: pts[5].abs() + 0.1 },
            LabelBox { width: pts[6].abs() + 0.1, height: pts[7].abs() + 0.1 },
        ]).unwrap();
        prop_assert_eq!(labels_overlap(0, 1, &layout, &g), labels_overlap(1, 0, &layout, &g));
    }

    #[test]
    fn forces_are_antisymmetric(d in prop::array::uniform2(-300.0..300.0f64), desired in 10.0..400.0f64) {
        let d = Point::new(d[0], d[1]);
        prop_assume!(d.norm() > 1e-6);
        let (ru, rv) = (40.0, 25.0);
        let a = collision_push(d, ru, rv, 3.0);
        let b = collision_push(-d, rv, ru, 3.0);
        prop_assert!(close(a, -b, 1e-12));
        let a = arbor_core::forces::edge_push(d, desired, 0.05);
        let b = arbor_core::forces::edge_push(-d, desired, 0.05);
        prop_assert!(close(a, -b, 1e-12));
        let a = arbor_core::forces::distribution_push(d, desired * desired);
        let b = arbor_core::forces::distribution_push(-d, desired * desired);
        prop_assert!(close(a, -b, 1e-12));
    }

    #[test]
    fn forces_ignore_translation((n, seed) in tree_strategy(80), shift in prop::array::uniform2(-1e4..1e4f64)) {
        let tree = random_tree(n, seed);
        let mut r = rng(seed);
        let layout = random_layout(n, 800.0, &mut r);
        let geometry = random_geometry(n, &mut r);
        let lengths = lengths_for(&tree, seed);
        let params = LayoutParams::default();
        let before = forces(&tree, &layout, &geometry, &lengths, &params);
        let mut moved = layout.clone();
        moved.translate(Point::new(shift[0], shift[1]));
        let after = forces(&tree, &moved, &geometry, &lengths, &params);
        for (f, g) in before.iter().zip(&after) {
            for (a, b) in f.iter().zip(g) {
                prop_assert!(close(*a, *b, 1e-7), "{:?} vs {:?}", a, b);
            }
        }
    }

    #[test]
    fn total_is_linear_in_each_strength((n, seed) in tree_strategy(60), which in 0usize..4, s in 0.01..5.0f64) {
        let tree = random_tree(n, seed);
        let mut r = rng(seed);
        let layout = random_layout(n, 600.0, &mut r);
        let geometry = random_geometry(n, &mut r);
        let lengths = lengths_for(&tree, seed);
        let mut strengths = [0.0; 4];
        strengths[which] = s;
        let f = forces(&tree, &layout, &geometry, &lengths, &params_only(strengths));
        for (&total, &single) in f[4].iter().zip(&f[which]) {
            prop_assert!(close(total, single * s, 1e-12));
        }
    }

    #[test]
    fn taller_ellipse_pushes_less_vertically(dy in 0.5..10.0f64, b in 1.0..6.0f64, db in 0.05..3.0f64) {
        // equal 100 x 20 labels stacked vertically
        let g = LabelGeometry::new(vec![LabelBox { width: 100.0, height: 20.0 }; 2]).unwrap();
        let push = |aspect: f64| {
            let r = g.collision_radius(0, aspect);
            collision_push(Point::new(0.0, dy), r, r, aspect).y.abs()
        };
        let (lo, hi) = (push(b), push(b + db));
        prop_assert!(lo > 0.0);
        // strictly while the radius is set by the width, flat once it is set by the height
        if (b + db) * 20.0 <= 100.0 {
            prop_assert!(hi < lo, "{} !< {}", hi, lo);
        } else {
            prop_assert!(hi <= lo * (1.0 + 1e-12), "{} > {}", hi, lo);
        }
    }

    #[test]
    fn del_and_cm_scale_covariance((n, seed) in tree_strategy(200), k in 0.01..100.0f64) {
        prop_assume!(n >= 2);
        let tree = random_tree(n, seed);
        let mut r = rng(seed);
        let layout = random_layout(n, 1000.0, &mut r);
        let geometry = random_geometry(n, &mut r);
        let lengths = lengths_for(&tree, seed);
        let mut scaled = layout.clone();
        scaled.scale_about(Point::ORIGIN, Point::new(k, k));
        let scaled_lengths = DesiredLengths(lengths.0.iter().map(|l| l * k).collect());
        let d0 = del(&layout, &tree, &lengths).unwrap();
        let d1 = del(&scaled, &tree, &scaled_lengths).unwrap();
        prop_assert!((d0 - d1).abs() <= 1e-9 * (1.0 + d0));
        let scaled_geometry = LabelGeometry::new(
            geometry.boxes().iter().map(|b| LabelBox { width: b.width * k, height: b.height * k }).collect(),
        ).unwrap();
        let c0 = cm(&layout, &geometry).unwrap();
        let c1 = cm(&scaled, &scaled_geometry).unwrap();
        prop_assert!((c0 - c1).abs() <= 1e-9 * c0);
    }

    #[test]
    fn del_is_zero_exactly_when_realized((n, seed) in tree_strategy(200), bump in 1e-6..0.5f64) {
        prop_assume!(n >= 2);
        let tree = random_tree(n, seed);
        let lengths = lengths_for(&tree, seed);
        let mut layout = edge_length_init(&tree, 0, &lengths).unwrap();
        prop_assert!(del(&layout, &tree, &lengths).unwrap() < 1e-12);
        // stretch every edge at a leaf
        let leaf = (0..n).rev().find(|&v| tree.degree(v) == 1 && v != 0).unwrap();
        let (parent, _) = tree.neighbors(leaf)[0];
        let dir = layout.get(leaf) - layout.get(parent);
        layout.set(leaf, layout.get(leaf) + dir * bump);
        prop_assert!(del(&layout, &tree, &lengths).unwrap() > 0.0);
    }

    #[test]
    fn mlst_levels_nest(n in 4usize..60, extra in 0usize..40, h in 1usize..6, seed in any::<u64>()) {
        use rand::Rng;
        let mut r = rng(seed);
        let parents = random_parents(n, &mut r);
        let mut edges: Vec<EdgeRecord> =
            parents.iter().enumerate().map(|(i, &p)| EdgeRecord::new(p as u64, i as u64 + 1, r.gen_range(1.0..5.0))).collect();
        for _ in 0..extra {
            let (a, b) = (r.gen_range(0..n as u64), r.gen_range(0..n as u64));
            if a != b && !edges.iter().any(|e| (e.source, e.target) == (a, b) || (e.source, e.target) == (b, a)) {
                edges.push(EdgeRecord::new(a, b, r.gen_range(1.0..5.0)));
            }
        }
        let nodes = (0..n as u64).map(|i| NodeRecord::new(i, format!("v{i}"), r.gen_range(0.0..10.0))).collect();
        let graph = WeightedGraph::build(nodes, edges).unwrap();
        let terminals = select_terminals(&graph, h).unwrap();
        let mlt = extract_mlst(&graph, &terminals).unwrap();
        prop_assert_eq!(mlt.check_nesting(), Ok(()));
        for (v, &level) in terminals.iter().enumerate() {
            if level > 0 {
                let id = graph.node(v).id;
                let t = mlt.tree.node_of(id).expect("terminal kept");
                prop_assert!(mlt.node_level[t] <= level);
            }
        }
        let linear = assign_edge_lengths(mlt, LengthMode::Linear, 200.0, 50.0);
        for e in 0..linear.tree.edge_count() {
            for f in 0..linear.tree.edge_count() {
                if linear.edge_level[e] < linear.edge_level[f] {
                    prop_assert!(linear.desired_length.get(e) >= linear.desired_length.get(f));
                }
            }
        }
    }
}

#[test]
fn balanced_tree_is_mirror_symmetric() {
    for depth in 1..=7 {
        let n = (1usize << (depth + 1)) - 1;
        let tree = LabeledTree::build(
            (0..n as u64).map(|i| NodeRecord::new(i, "x", 1.0)).collect(),
            (1..n as u64).map(|i| EdgeRecord::new((i - 1) / 2, i, 1.0)).collect(),
        )
        .unwrap();
        let lengths = DesiredLengths::uniform(&tree, 100.0);
        for layout in [edge_length_init(&tree, 0, &lengths).unwrap(), compact_init(&tree, 0, 100.0).unwrap()] {
            let key = |p: Point| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64);
            let mut points: Vec<_> = layout.positions().iter().map(|&p| key(p)).collect();
            let mut mirrored: Vec<_> = layout.positions().iter().map(|&p| key(Point::new(p.x, -p.y))).collect();
            points.sort();
            mirrored.sort();
            assert_eq!(points, mirrored, "depth {depth}");
        }
    }
}

#[test]
fn single_edge_at_rest_feels_no_force() {
    let tree = LabeledTree::build(
        vec![NodeRecord::new(0, "a", 1.0), NodeRecord::new(1, "b", 1.0)],
        vec![EdgeRecord::new(0, 1, 1.0)],
    )
    .unwrap();
    let lengths = DesiredLengths::uniform(&tree, 5000.0);
    let layout = Layout::new(vec![Point::new(0.0, 0.0), Point::new(3000.0, 4000.0)]);
    let geometry = LabelGeometry::new(vec![LabelBox { width: 10.0, height: 5.0 }; 2]).unwrap();
    let params = LayoutParams { distribution_strength: 0.0, ..LayoutParams::default() };
    let f = forces(&tree, &layout, &geometry, &lengths, &params);
    for push in &f[4] {
        assert!(push.norm() < 1e-12, "{push:?}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn map_document_round_trips((n, seed) in (2usize..60, any::<u64>()), compact in any::<bool>(), prt in any::<bool>()) {
        let mut r = rng(seed);
        let parents = random_parents(n, &mut r);
        let input = tree_input(&parents, &mut r);
        let config = PipelineConfig {
            init: if compact { InitKind::Compact } else { InitKind::EdgeLength },
            mode: if prt { Mode::Prt } else { Mode::Rt },
            params: LayoutParams { iterations: 5, seed, ..LayoutParams::default() },
            ..PipelineConfig::default()
        };
        let doc = run_pipeline(input, &config).unwrap().document;
        let json = doc.to_json();
        let back = MapDocument::from_json(&json).unwrap();
        prop_assert_eq!(&back, &doc);
        prop_assert_eq!(back.to_json(), json);
        back.validate().unwrap();
        back.hierarchy().unwrap().check_nesting().unwrap();
        // the stored metrics are the ones the document implies
        let tree = back.tree().unwrap();
        let geometry = back.geometry().unwrap();
        let m = arbor_core::MetricsReport::evaluate(&back.layout(), &tree, &geometry, &back.lengths()).unwrap();
        let stored = &doc.meta.metrics;
        prop_assert_eq!((m.del, m.cm, m.crossings, m.overlaps), (stored.del, stored.cm, stored.crossings, stored.overlaps));
        prop_assert!(m.cm <= 1.0 + 1e-12);
    }
}
