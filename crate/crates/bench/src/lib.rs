//! Fixtures shared by the benchmarks.

use arbor_core::init::{center_node_linear, edge_length_init};
use arbor_core::model::{EdgeRecord, NodeRecord};
use arbor_core::{DesiredLengths, LabelGeometry, LabeledTree, Layout};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random recursive tree with random labels, laid out by the edge-length
/// initialization with every desired length 200.
pub struct Fixture {
    pub tree: LabeledTree,
    pub lengths: DesiredLengths,
    pub geometry: LabelGeometry,
    pub layout: Layout,
}

impl Fixture {
    pub fn random(n: usize, seed: u64) -> Fixture {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nodes = (0..n as u64)
            .map(|i| {
                let len = rng.gen_range(3..=16);
                let label: String = (0..len).map(|_| rng.gen_range(b'a'..=b'z') as char).collect();
                NodeRecord::new(i, label, 1.0)
            })
            .collect();
        let edges = (1..n as u64).map(|i| EdgeRecord::new(rng.gen_range(0..i), i, 1.0)).collect();
        let tree = LabeledTree::build(nodes, edges).expect("random tree");
        let lengths = DesiredLengths::uniform(&tree, 200.0);
        let geometry = LabelGeometry::from_labels(&tree, 14.0);
        let layout = edge_length_init(&tree, center_node_linear(&tree), &lengths).expect("init");
        Fixture { tree, lengths, geometry, layout }
    }
}
