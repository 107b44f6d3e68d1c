//! Read-only JSON API over a loaded run store.

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::Path;
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use reprtune_core::forecaster::TrainingResult;
use reprtune_core::{Stripe, WindowMetrics};
use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};
use crate::query::{query_predictions, Polygon};
use crate::store::{Explanation, ProfileRow, RepresentationMeta, RunStore};
use crate::views::{stripe, Axis, StripeMetric};

const MAX_PIXELS: usize = 100_000;

type Params = Query<BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationDetail {
    pub meta: RepresentationMeta,
    pub profile: ProfileRow,
    pub training: TrainingResult,
    pub explanation: Explanation,
    pub parameter_count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripePayload {
    pub metric: StripeMetric,
    pub pixels: usize,
    /// Shared raw timeline `[t0, t1)`.
    pub time_extent: (usize, usize),
    pub offset: usize,
    pub skip: usize,
    /// Number of distinct cell ids the coloring can produce.
    pub cell_count: usize,
    pub stripe: Stripe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSlice {
    pub variable: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowDetail {
    pub representation_id: String,
    pub window_id: usize,
    pub raw_start: usize,
    pub input_timestamps: Vec<String>,
    pub target_timestamps: Vec<String>,
    /// Smoothed inputs, one slice per variable.
    pub input: Vec<SeriesSlice>,
    pub target: Vec<f64>,
    pub prediction: Vec<f64>,
    pub metrics: WindowMetrics,
    pub base: f64,
    pub feature_labels: Vec<String>,
    pub phi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSummary {
    pub id: String,
    pub display_name: String,
    pub unit: Option<String>,
    pub is_target: bool,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    /// Mean absolute attribution under the representation named by `rep`.
    pub importance: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
struct PredictionBody {
    #[serde(default)]
    reps: Option<Vec<String>>,
    #[serde(default, alias = "axes")]
    axis: Option<Axis>,
    #[serde(default)]
    polygons: Vec<Polygon>,
}

fn json<T: Serialize>(status: StatusCode, value: &T) -> Response {
    let body = serde_json::to_vec(value).expect("payloads serialize");
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

fn status_of(err: &StoreError) -> StatusCode {
    match err {
        StoreError::UnknownRepresentation(_)
        | StoreError::RequiresPipelineRun(_)
        | StoreError::RepresentationFailed { .. }
        | StoreError::UnknownVariable(_)
        | StoreError::UnknownWindow { .. } => StatusCode::NOT_FOUND,
        StoreError::MalformedPolygon(_) | StoreError::InvalidQuery(_) => StatusCode::BAD_REQUEST,
        StoreError::Core(_) => StatusCode::UNPROCESSABLE_ENTITY,
        _ => StatusCode::INTERNAL_SERVER_ERROR,
    }
}

impl IntoResponse for StoreError {
    fn into_response(self) -> Response {
        json(status_of(&self), &ErrorBody { code: self.code().to_string(), message: self.to_string() })
    }
}

fn respond<T: Serialize>(result: Result<T>) -> Response {
    match result {
        Ok(value) => json(StatusCode::OK, &value),
        Err(e) => e.into_response(),
    }
}

fn parse_param<T: std::str::FromStr>(params: &BTreeMap<String, String>, key: &str) -> Result<Option<T>> {
    params
        .get(key)
        .map(|raw| raw.parse().map_err(|_| StoreError::InvalidQuery(format!("bad value {raw:?} for {key}"))))
        .transpose()
}

fn axis_param(params: &BTreeMap<String, String>) -> Result<Option<Axis>> {
    params.get("axis").or_else(|| params.get("axes")).map(|a| a.parse()).transpose()
}

fn reps_param(params: &BTreeMap<String, String>) -> Vec<String> {
    params
        .get("reps")
        .map(|r| r.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect())
        .unwrap_or_default()
}

pub fn router(store: Arc<RunStore>) -> Router {
    Router::new()
        .route("/manifest", get(manifest))
        .route("/representations", get(representations))
        .route("/representations/{id}", get(representation))
        .route("/representations/{id}/stripe", get(stripe_view))
        .route("/representations/{id}/windows/{t}", get(window_view))
        .route("/variables", get(variables))
        .route("/variables/matrix", get(matrix))
        .route("/variables/{id}/horizon", get(horizon))
        .route("/predictions", get(predictions_get).post(predictions_post))
        .fallback(not_found)
        .with_state(store)
}

async fn not_found() -> Response {
    json(StatusCode::NOT_FOUND, &ErrorBody { code: "not_found".into(), message: "no such endpoint".into() })
}

async fn manifest(State(store): State<Arc<RunStore>>) -> Response {
    json(StatusCode::OK, &store.manifest)
}

async fn representations(State(store): State<Arc<RunStore>>) -> Response {
    json(StatusCode::OK, &store.profile)
}

async fn representation(State(store): State<Arc<RunStore>>, UrlPath(id): UrlPath<String>) -> Response {
    respond(store.representation(&id).map(|rep| RepresentationDetail {
        meta: rep.meta.clone(),
        profile: rep.profile.clone(),
        training: rep.training.clone(),
        explanation: rep.explanation.clone(),
        parameter_count: rep.model.parameter_count(),
    }))
}

async fn stripe_view(State(store): State<Arc<RunStore>>, UrlPath(id): UrlPath<String>, Query(params): Params) -> Response {
    respond((|| {
        let rep = store.representation(&id)?;
        let metric = parse_param::<StripeMetric>(&params, "metric")?.unwrap_or(StripeMetric::Corr);
        let pixels = parse_param::<usize>(&params, "pixels")?.unwrap_or(store.manifest.options.stripe_pixels);
        if pixels == 0 || pixels > MAX_PIXELS {
            return Err(StoreError::InvalidQuery(format!("pixels must be in 1..={MAX_PIXELS}")));
        }
        let row = match rep.stripes.get(metric.as_str()) {
            Some(row) if row.len() == pixels => row.clone(),
            _ => stripe(rep, &store.vsup, metric, pixels),
        };
        let cell_count = match metric {
            StripeMetric::Corr | StripeMetric::Shap => store.vsup.corr.tree.iter().sum(),
            StripeMetric::Rmse => reprtune_core::visprep::SEQUENTIAL_BINS,
        };
        Ok(StripePayload {
            metric,
            pixels,
            time_extent: store.manifest.time_extent,
            offset: rep.meta.offset,
            skip: rep.meta.skip,
            cell_count,
            stripe: row,
        })
    })())
}

async fn window_view(State(store): State<Arc<RunStore>>, UrlPath((id, t)): UrlPath<(String, String)>) -> Response {
    respond((|| {
        let rep = store.representation(&id)?;
        let window: usize = t.parse().map_err(|_| StoreError::InvalidQuery(format!("bad window index {t:?}")))?;
        let metrics = rep
            .metrics
            .get(window)
            .cloned()
            .ok_or_else(|| StoreError::UnknownWindow { id: id.clone(), window })?;
        let meta = &rep.meta;
        let start = window * meta.skip;
        let (w, h) = (meta.window_length, meta.horizon);
        let raw = meta.raw_start(window);
        Ok(WindowDetail {
            representation_id: meta.id.clone(),
            window_id: window,
            raw_start: raw,
            input_timestamps: store.timestamps[raw..raw + w].to_vec(),
            target_timestamps: store.timestamps[raw + w..raw + w + h].to_vec(),
            input: store
                .manifest
                .dataset
                .variables
                .iter()
                .zip(&rep.series)
                .map(|(v, s)| SeriesSlice { variable: v.id.clone(), values: s[start..start + w].to_vec() })
                .collect(),
            target: rep.series[meta.target_index][start + w..start + w + h].to_vec(),
            prediction: rep.predictions[window].clone(),
            metrics,
            base: rep.explanation.base,
            feature_labels: rep.explanation.feature_labels.clone(),
            phi: rep.attributions[window].clone(),
        })
    })())
}

async fn variables(State(store): State<Arc<RunStore>>, Query(params): Params) -> Response {
    respond((|| {
        let importance = match params.get("rep") {
            Some(id) => store.representation(id)?.explanation.importance.clone(),
            None => None,
        };
        let mut out: Vec<VariableSummary> = store
            .manifest
            .dataset
            .variables
            .iter()
            .zip(&store.raw)
            .map(|(v, values)| VariableSummary {
                id: v.id.clone(),
                display_name: v.display_name.clone(),
                unit: v.unit.clone(),
                is_target: v.is_target,
                min: values.iter().copied().fold(f64::INFINITY, f64::min),
                max: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                mean: values.iter().sum::<f64>() / values.len() as f64,
                importance: importance.as_ref().and_then(|imp| imp.iter().find(|(id, _)| id == &v.id).map(|p| p.1)),
            })
            .collect();
        if let Some(ranked) = &importance {
            let rank = |id: &str| ranked.iter().position(|(r, _)| r == id).unwrap_or(usize::MAX);
            out.sort_by_key(|v| rank(&v.id));
        }
        Ok(out)
    })())
}

async fn matrix(State(store): State<Arc<RunStore>>, Query(params): Params) -> Response {
    respond((|| {
        let x = params.get("x").ok_or_else(|| StoreError::InvalidQuery("missing x".into()))?;
        let y = params.get("y").ok_or_else(|| StoreError::InvalidQuery("missing y".into()))?;
        let grid = parse_param::<usize>(&params, "grid")?.unwrap_or(store.manifest.options.mosaic_grid);
        if !(2..=100).contains(&grid) {
            return Err(StoreError::InvalidQuery("grid must be in 2..=100".into()));
        }
        if let Some(m) = store.mosaics.iter().find(|m| &m.x_variable == x && &m.y_variable == y && m.grid == grid) {
            return Ok(m.clone());
        }
        store.mosaic(x, y, grid)
    })())
}

async fn horizon(State(store): State<Arc<RunStore>>, UrlPath(id): UrlPath<String>) -> Response {
    respond((|| {
        store.variable_index(&id)?;
        store
            .horizons
            .iter()
            .find(|h| h.variable_id == id)
            .cloned()
            .ok_or(StoreError::Core(reprtune_core::Error::ConstantSeries))
    })())
}

async fn predictions_get(State(store): State<Arc<RunStore>>, Query(params): Params) -> Response {
    respond((|| {
        let axis = axis_param(&params)?.unwrap_or(Axis::Corr);
        query_predictions(&store, &reps_param(&params), &[], axis)
    })())
}

async fn predictions_post(State(store): State<Arc<RunStore>>, Query(params): Params, body: Bytes) -> Response {
    respond((|| {
        let body: PredictionBody = if body.iter().all(u8::is_ascii_whitespace) {
            PredictionBody::default()
        } else {
            serde_json::from_slice(&body).map_err(|e| StoreError::InvalidQuery(format!("bad request body: {e}")))?
        };
        let axis = body.axis.or(axis_param(&params)?).unwrap_or(Axis::Corr);
        let reps = body.reps.unwrap_or_else(|| reps_param(&params));
        query_predictions(&store, &reps, &body.polygons, axis)
    })())
}

/// Binds `addr`, reporting an occupied port as [`StoreError::PortInUse`].
pub async fn bind(addr: SocketAddr) -> Result<tokio::net::TcpListener> {
    tokio::net::TcpListener::bind(addr).await.map_err(|e| match e.kind() {
        std::io::ErrorKind::AddrInUse => StoreError::PortInUse(addr.port()),
        _ => StoreError::Io { path: addr.to_string(), source: e },
    })
}

/// Loads the store at `root` and serves it until the process stops.
pub async fn serve(root: &Path, addr: SocketAddr) -> Result<()> {
    let store = Arc::new(RunStore::load(root)?);
    let listener = bind(addr).await?;
    log::info!("serving {} on http://{}", root.display(), listener.local_addr().map_err(|e| StoreError::io(root, e))?);
    axum::serve(listener, router(store))
        .await
        .map_err(|e| StoreError::Io { path: addr.to_string(), source: e })
}
