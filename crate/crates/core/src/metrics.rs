//! Layout quality measures: edge-length error, compactness, and counts of
//! the two hard-constraint violations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{count_crossings, count_overlaps, Rect, SpatialGrid};
use crate::model::{DesiredLengths, LabelGeometry, LabeledTree, Layout};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("desired length of edge {0} is not positive")]
    ZeroDesiredLength(usize),
    #[error("bounding rectangle has zero area")]
    DegenerateBounds,
}

/// Signed per-edge `(realized - desired) / desired`. Negative means the
/// edge is drawn shorter than desired.
pub fn relative_errors(layout: &Layout, tree: &LabeledTree, lengths: &DesiredLengths) -> Vec<f64> {
    (0..tree.edge_count())
        .map(|e| {
            let l = lengths.get(e);
            (layout.edge_length(tree, e) - l) / l
        })
        .collect()
}

/// Root-mean-square relative edge-length error; 0 for a perfect layout.
pub fn del(layout: &Layout, tree: &LabeledTree, lengths: &DesiredLengths) -> Result<f64, MetricsError> {
    if let Some(e) = lengths.0.iter().position(|&l| l.is_nan() || l <= 0.0) {
        return Err(MetricsError::ZeroDesiredLength(e));
    }
    if tree.edge_count() == 0 {
        return Ok(0.0);
    }
    let errs = relative_errors(layout, tree, lengths);
    Ok((errs.iter().map(|r| r * r).sum::<f64>() / errs.len() as f64).sqrt())
}

/// Total label area over the area of the rectangle bounding all labels.
pub fn cm(layout: &Layout, geometry: &LabelGeometry) -> Result<f64, MetricsError> {
    let bounds = layout.bounds(geometry);
    let area = bounds.area();
    if !(area > 0.0 && area.is_finite()) {
        return Err(MetricsError::DegenerateBounds);
    }
    Ok(geometry.total_area() / area)
}

/// Everything reported for a finished layout, in table column order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub del: f64,
    pub cm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_seconds: Option<f64>,
    pub crossings: usize,
    pub overlaps: usize,
    pub bounds: Rect,
    pub relative_errors: Vec<f64>,
}

pub const CSV_HEADER: &str = "del,cm,runtime_seconds,crossings,overlaps";

impl MetricsReport {
    pub fn evaluate(
        layout: &Layout,
        tree: &LabeledTree,
        geometry: &LabelGeometry,
        lengths: &DesiredLengths,
    ) -> Result<Self, MetricsError> {
        let grid = SpatialGrid::build(tree, layout, geometry, SpatialGrid::default_cell_size(lengths, geometry));
        Ok(MetricsReport {
            del: del(layout, tree, lengths)?,
            cm: cm(layout, geometry)?,
            runtime_seconds: None,
            crossings: count_crossings(layout, tree, &grid),
            overlaps: count_overlaps(layout, geometry, &grid),
            bounds: layout.bounds(geometry),
            relative_errors: relative_errors(layout, tree, lengths),
        })
    }

    /// Header plus one data row.
    pub fn to_csv(&self) -> String {
        let runtime = self.runtime_seconds.map(|r| r.to_string()).unwrap_or_default();
        format!("{CSV_HEADER}\n{},{},{},{},{}\n", self.del, self.cm, runtime, self.crossings, self.overlaps)
    }
}
