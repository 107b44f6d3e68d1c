//! View payloads derived from stored metrics. The pipeline persists them at
//! default sizes; the API recomputes other sizes with the same functions.

use std::fmt;
use std::str::FromStr;

use reprtune_core::visprep::{aggregate_stripe, mosaic_matrix, Coloring, MosaicColor};
use reprtune_core::{Mosaic, Stripe};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};
use crate::store::{RunStore, ScatterPoint, StoredRepresentation, VsupSchemes};

/// Which metric colors a stripe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StripeMetric {
    /// Correlation against RMSE on the wedge.
    Corr,
    /// Shapley scalar against RMSE on the wedge.
    Shap,
    /// RMSE alone on a sequential scale.
    Rmse,
}

impl StripeMetric {
    pub const ALL: [StripeMetric; 3] = [StripeMetric::Corr, StripeMetric::Shap, StripeMetric::Rmse];

    pub fn as_str(&self) -> &'static str {
        match self {
            StripeMetric::Corr => "corr",
            StripeMetric::Shap => "shap",
            StripeMetric::Rmse => "rmse",
        }
    }
}

impl fmt::Display for StripeMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StripeMetric {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corr" => Ok(StripeMetric::Corr),
            "shap" => Ok(StripeMetric::Shap),
            "rmse" => Ok(StripeMetric::Rmse),
            other => Err(StoreError::InvalidQuery(format!("metric must be corr, shap or rmse, got {other:?}"))),
        }
    }
}

/// Explanation axis of the prediction scatterplot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Corr,
    Shap,
}

impl FromStr for Axis {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "corr" => Ok(Axis::Corr),
            "shap" => Ok(Axis::Shap),
            other => Err(StoreError::InvalidQuery(format!("axis must be corr or shap, got {other:?}"))),
        }
    }
}

impl Axis {
    /// Horizontal coordinate of a point; absent correlations have none.
    pub fn x(&self, point: &ScatterPoint) -> Option<f64> {
        match self {
            Axis::Corr => point.corr,
            Axis::Shap => Some(point.shap),
        }
    }
}

pub fn stripe(rep: &StoredRepresentation, vsup: &VsupSchemes, metric: StripeMetric, pixels: usize) -> Stripe {
    let pairs: Vec<(Option<f64>, f64)> = rep
        .metrics
        .iter()
        .map(|m| match metric {
            StripeMetric::Corr | StripeMetric::Rmse => (m.corr, m.rmse),
            StripeMetric::Shap => (Some(m.shap_scalar), m.rmse),
        })
        .collect();
    let coloring = match metric {
        StripeMetric::Corr => Coloring::Vsup(&vsup.corr),
        StripeMetric::Shap => Coloring::Vsup(&vsup.shap),
        StripeMetric::Rmse => Coloring::Metric2 { lo: 0.0, hi: vsup.rmse_max },
    };
    aggregate_stripe(rep.id(), &pairs, pixels, coloring)
}

pub fn scatter_points(rep: &StoredRepresentation) -> Vec<ScatterPoint> {
    rep.metrics
        .iter()
        .map(|m| ScatterPoint {
            representation_id: rep.id().to_string(),
            window_id: m.window_id,
            rmse: m.rmse,
            corr: m.corr,
            shap: m.shap_scalar,
        })
        .collect()
}

/// A series on the raw timeline: values starting at raw index `offset`.
struct Aligned<'a> {
    offset: usize,
    values: &'a [f64],
    is_variable: bool,
}

impl RunStore {
    fn aligned(&self, id: &str) -> Result<Aligned<'_>> {
        if let Ok(j) = self.variable_index(id) {
            return Ok(Aligned { offset: 0, values: &self.raw[j], is_variable: true });
        }
        let rep = self.representation(id).map_err(|e| match e {
            StoreError::UnknownRepresentation(_) => StoreError::UnknownVariable(id.to_string()),
            other => other,
        })?;
        Ok(Aligned {
            offset: rep.meta.offset,
            values: &rep.series[rep.meta.target_index],
            is_variable: false,
        })
    }

    /// Mosaic over two variables or representations on their common raw span.
    ///
    /// Cells hold the mean target value when the dataset is multivariate and
    /// both axes are non-target variables, and the point density otherwise.
    pub fn mosaic(&self, x: &str, y: &str, grid: usize) -> Result<Mosaic> {
        let (ax, ay) = (self.aligned(x)?, self.aligned(y)?);
        let start = ax.offset.max(ay.offset);
        let end = (ax.offset + ax.values.len()).min(ay.offset + ay.values.len());
        if start >= end {
            return Err(StoreError::InvalidQuery(format!("{x} and {y} do not overlap in time")));
        }
        let xs = &ax.values[start - ax.offset..end - ax.offset];
        let ys = &ay.values[start - ay.offset..end - ay.offset];
        let target_index = self.target_index();
        let target_id = &self.manifest.dataset.variables[target_index].id;
        let by_target = self.raw.len() > 1 && ax.is_variable && ay.is_variable && x != target_id && y != target_id;
        let color = if by_target {
            MosaicColor::Values(&self.raw[target_index][start..end])
        } else {
            MosaicColor::Density
        };
        Ok(mosaic_matrix(x, xs, y, ys, color, grid)?)
    }

    /// Axis pairs persisted at the default grid: every variable pair for
    /// multivariate data, otherwise raw target against each representation.
    pub fn default_mosaic_pairs(&self) -> Vec<(String, String)> {
        let ids: Vec<&String> = self.manifest.dataset.variables.iter().map(|v| &v.id).collect();
        if ids.len() > 1 {
            let mut pairs = Vec::new();
            for i in 0..ids.len() {
                for j in i + 1..ids.len() {
                    pairs.push((ids[i].clone(), ids[j].clone()));
                }
            }
            pairs
        } else {
            self.representations.iter().map(|r| (ids[0].clone(), r.id().to_string())).collect()
        }
    }
}
