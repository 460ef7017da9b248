//! End-to-end run: hierarchy → desired lengths → initial layout →
//! improvement → final overlap removal → metrics → map document.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{
    final_iteration_with, prt_improve_with, rt_improve_with, EngineError, IterationStats, RunOptions, RunReport,
};
use crate::init::{center_node_linear, compact_init, edge_length_init, InitError};
use crate::io::{default_zoom_thresholds, GraphInput, MapDocument, MapEdge, MapMeta, MapNode};
use crate::metrics::{MetricsError, MetricsReport};
use crate::mlst::{
    assign_edge_lengths, default_l_add, default_level_count, extract_mlst, select_terminals, LengthMode, MlstError,
    MultiLevelTree, WeightedGraph,
};
use crate::model::{LabelGeometry, LayoutParams, ModelError, ParamError, DEFAULT_FONT_SIZE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitKind {
    /// Realizes every desired length exactly.
    EdgeLength,
    /// Concentric rings around the root, for compact drawings.
    Compact,
}

impl InitKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitKind::EdgeLength => "edge-length",
            InitKind::Compact => "compact",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Rt,
    Prt,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Rt => "rt",
            Mode::Prt => "prt",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub init: InitKind,
    pub mode: Mode,
    pub params: LayoutParams,
    /// Number of hierarchy levels; `None` picks one from the graph size.
    pub levels: Option<usize>,
    pub edge_lengths: LengthMode,
    pub l_min: f64,
    /// Extra length per level below the top; `None` spreads 200 units over the levels.
    pub l_add: Option<f64>,
    pub font_size: f64,
    /// External id of the layout root; `None` picks the most central node.
    pub root: Option<u64>,
    /// Ring spacing of the compact initialization; `None` means `l_min`.
    pub ring_step: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            init: InitKind::EdgeLength,
            mode: Mode::Rt,
            params: LayoutParams::default(),
            levels: None,
            edge_lengths: LengthMode::Linear,
            l_min: 200.0,
            l_add: None,
            font_size: DEFAULT_FONT_SIZE,
            root: None,
            ring_step: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mlst(#[from] MlstError),
    #[error(transparent)]
    Init(#[from] InitError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("root {0} is not a node of the tree")]
    UnknownRoot(u64),
}

pub struct PipelineOutput {
    pub document: MapDocument,
    pub report: RunReport,
    pub metrics: MetricsReport,
    pub runtime_seconds: f64,
}

/// Builds the hierarchy for `input` without laying it out.
pub fn build_hierarchy(input: GraphInput, config: &PipelineConfig) -> Result<MultiLevelTree, PipelineError> {
    let weights_given = input.node_weights_given;
    let mut graph = WeightedGraph::build(input.nodes, input.edges)?;
    if !weights_given {
        graph = graph.with_degree_weights();
    }
    let h = config.levels.unwrap_or_else(|| default_level_count(graph.len())).max(1);
    let terminals = select_terminals(&graph, h)?;
    let mlt = extract_mlst(&graph, &terminals)?;
    Ok(match config.edge_lengths {
        LengthMode::Given => {
            // scale so the shortest given length equals l_min
            let mut mlt = mlt;
            if let Some(min) = mlt.desired_length.min().filter(|m| *m > 0.0) {
                let scale = config.l_min / min;
                mlt.desired_length.0.iter_mut().for_each(|l| *l *= scale);
            }
            mlt
        }
        mode => assign_edge_lengths(mlt, mode, config.l_min, config.l_add.unwrap_or_else(|| default_l_add(h))),
    })
}

pub fn run_pipeline(input: GraphInput, config: &PipelineConfig) -> Result<PipelineOutput, PipelineError> {
    run_pipeline_observed(input, config, None)
}

/// Like [`run_pipeline`], reporting each iteration to `observer`.
pub fn run_pipeline_observed(
    input: GraphInput,
    config: &PipelineConfig,
    mut observer: Option<&mut (dyn FnMut(&IterationStats) + Send)>,
) -> Result<PipelineOutput, PipelineError> {
    config.params.validate()?;
    let started = Instant::now();
    let mlt = build_hierarchy(input, config)?;
    let tree = &mlt.tree;
    let lengths = &mlt.desired_length;
    let geometry = LabelGeometry::from_labels(tree, config.font_size);
    let root = match config.root {
        Some(id) => tree.node_of(id).ok_or(PipelineError::UnknownRoot(id))?,
        None => center_node_linear(tree),
    };
    let initial = match config.init {
        InitKind::EdgeLength => edge_length_init(tree, root, lengths)?,
        InitKind::Compact => compact_init(tree, root, config.ring_step.unwrap_or(config.l_min))?,
    };

    let params = &config.params;
    let mut report = RunReport::default();
    let mut emit = |stats: &IterationStats| {
        if let Some(o) = observer.as_mut() {
            o(stats)
        }
    };
    let mut options = RunOptions { observer: Some(&mut emit), ..RunOptions::default() };
    let (improved, r) = match config.mode {
        Mode::Rt => rt_improve_with(&initial, tree, &geometry, lengths, params, &mut options)?,
        Mode::Prt => prt_improve_with(&initial, tree, &geometry, lengths, params, &mut options)?,
    };
    report.absorb(r);
    let mut options = RunOptions { observer: Some(&mut emit), ..RunOptions::default() };
    let (layout, r) =
        final_iteration_with(&improved, tree, &geometry, lengths, params, config.mode == Mode::Prt, &mut options)?;
    report.absorb(r);

    let runtime_seconds = started.elapsed().as_secs_f64();
    let metrics = MetricsReport::evaluate(&layout, tree, &geometry, lengths)?;
    let document = MapDocument {
        nodes: (0..tree.len())
            .map(|v| {
                let p = layout.get(v);
                let b = geometry.get(v);
                MapNode {
                    id: tree.external_id(v),
                    label: tree.label(v).to_string(),
                    weight: tree.weight(v),
                    x: p.x,
                    y: p.y,
                    level: mlt.node_level[v],
                    label_w: b.width,
                    label_h: b.height,
                }
            })
            .collect(),
        edges: tree
            .edges()
            .iter()
            .enumerate()
            .map(|(e, edge)| MapEdge {
                source: tree.external_id(edge.a),
                target: tree.external_id(edge.b),
                level: mlt.edge_level[e],
                desired_length: lengths.get(e),
            })
            .collect(),
        meta: MapMeta {
            level_count: mlt.level_count,
            bounds: metrics.bounds,
            params: params.clone(),
            metrics: metrics.clone(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: params.seed,
            init: config.init.as_str().into(),
            mode: config.mode.as_str().into(),
            root: tree.external_id(root),
            zoom_thresholds: default_zoom_thresholds(mlt.level_count),
        },
    };
    let mut metrics = metrics;
    metrics.runtime_seconds = Some(runtime_seconds);
    Ok(PipelineOutput { document, report, metrics, runtime_seconds })
}
