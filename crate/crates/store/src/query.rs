//! Prediction-scatter queries with lasso selection.

use reprtune_core::visprep::sample_predictions;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};
use crate::store::{RunStore, ScatterPoint};
use crate::views::{scatter_points, Axis};

/// Closed polygon given by its vertices `[x, y]` in (axis, rmse) space.
pub type Polygon = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub representation_id: String,
    pub window_id: usize,
    /// Timestamp of the window's first input step.
    pub start: String,
    pub rmse: f64,
    pub corr: Option<f64>,
    pub shap: f64,
    /// Horizon-mean forecast, target units.
    pub predicted_mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionSelection {
    pub axis: Axis,
    pub representation_ids: Vec<String>,
    /// Points with a value on the chosen axis, before sampling.
    pub total_points: usize,
    /// Uniform sample for drawing.
    pub points: Vec<ScatterPoint>,
    /// Every point inside at least one polygon, at full precision.
    pub selected: Vec<PredictionRow>,
}

/// Even-odd ray casting; points on an edge may fall either way.
pub fn point_in_polygon(x: f64, y: f64, polygon: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = polygon.len() - 1;
    for i in 0..polygon.len() {
        let ([xi, yi], [xj, yj]) = (polygon[i], polygon[j]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            inside = !inside;
        }
        j = i;
    }
    inside
}

/// Scatter points of the requested representations (all completed ones
/// when `representation_ids` is empty), sampled for drawing, plus the rows
/// of every point inside any of `polygons` (union semantics).
pub fn query_predictions(
    store: &RunStore,
    representation_ids: &[String],
    polygons: &[Polygon],
    axis: Axis,
) -> Result<PredictionSelection> {
    if let Some(bad) = polygons.iter().find(|p| p.len() < 3) {
        return Err(StoreError::MalformedPolygon(bad.len()));
    }
    if polygons.iter().flatten().flatten().any(|v| !v.is_finite()) {
        return Err(StoreError::InvalidQuery("polygon vertices must be finite".into()));
    }
    let reps = if representation_ids.is_empty() {
        store.representations.iter().collect()
    } else {
        representation_ids.iter().map(|id| store.representation(id)).collect::<Result<Vec<_>>>()?
    };

    let mut points = Vec::new();
    let mut selected = Vec::new();
    for rep in &reps {
        for point in scatter_points(rep) {
            let Some(x) = axis.x(&point) else { continue };
            if polygons.iter().any(|p| point_in_polygon(x, point.rmse, p)) {
                let prediction = &rep.predictions[point.window_id];
                selected.push(PredictionRow {
                    representation_id: point.representation_id.clone(),
                    window_id: point.window_id,
                    start: store.timestamps[rep.meta.raw_start(point.window_id)].clone(),
                    rmse: point.rmse,
                    corr: point.corr,
                    shap: point.shap,
                    predicted_mean: prediction.iter().sum::<f64>() / prediction.len() as f64,
                });
            }
            points.push(point);
        }
    }
    let options = &store.manifest.options;
    Ok(PredictionSelection {
        axis,
        representation_ids: reps.iter().map(|r| r.id().to_string()).collect(),
        total_points: points.len(),
        points: sample_predictions(&points, options.scatter_sample, store.manifest.model.seed),
        selected,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square() {
        let square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        assert!(point_in_polygon(0.5, 0.5, &square));
        assert!(!point_in_polygon(1.5, 0.5, &square));
        assert!(!point_in_polygon(0.5, -0.1, &square));
    }

    #[test]
    fn concave_polygon() {
        // U shape: the notch between the arms is outside.
        let u = [[0.0, 0.0], [3.0, 0.0], [3.0, 3.0], [2.0, 3.0], [2.0, 1.0], [1.0, 1.0], [1.0, 3.0], [0.0, 3.0]];
        assert!(point_in_polygon(0.5, 2.0, &u));
        assert!(point_in_polygon(2.5, 2.0, &u));
        assert!(!point_in_polygon(1.5, 2.0, &u));
        assert!(point_in_polygon(1.5, 0.5, &u));
    }
}
