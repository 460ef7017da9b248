//! Layout engine for large labeled trees.
//!
//! Every layout produced here is free of edge crossings and, after the final
//! overlap-removal pass, free of label overlaps. Within those hard constraints
//! the engine optimizes either desired edge lengths or drawing compactness,
//! depending on which initialization seeds the force-directed refinement.
//!
//! The usual flow is [`mlst`] (only for general graphs) → [`init`] →
//! [`engine`] → [`metrics`], and [`pipeline::run_pipeline`] wires it together.

pub mod engine;
pub mod forces;
pub mod geometry;
pub mod init;
pub mod io;
pub mod metrics;
pub mod mlst;
pub mod model;
pub mod pipeline;
pub mod svg;

pub use engine::{final_iteration, prt_improve, rt_improve, EngineError, RunReport};
pub use geometry::{Rect, SpatialGrid};
pub use metrics::MetricsReport;
pub use mlst::{MultiLevelTree, WeightedGraph};
pub use model::{DesiredLengths, EdgeId, LabelBox, LabelGeometry, LabeledTree, Layout, LayoutParams, NodeId, Point};
