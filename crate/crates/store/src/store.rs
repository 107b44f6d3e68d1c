//! On-disk run store.
//!
//! ```text
//! manifest.json            dataset, configs, representation list, file checksums
//! profile.json             one row per completed representation
//! raw.json / raw.bin       timestamps, variable ids, raw values [k, T]
//! vsup.json                shared quantizers for the corr and shap stripes
//! horizon.json             4-band encodings of every raw variable
//! mosaic.json              default-grid mosaic matrices
//! <rep>/representation.json smoothing, skip, offset
//! <rep>/profile.json       the representation's profile row
//! <rep>/training.json      epoch losses and normalized train/val RMSE
//! <rep>/scaler.json        min-max scaler fitted on the training span
//! <rep>/params.json/.bin   model config and named parameter tensors
//! <rep>/series.json/.bin   smoothed series [k, T']
//! <rep>/metrics.json       per-window rmse, corr, shap scalar
//! <rep>/predictions.json/.bin  de-normalized forecasts [N_w, horizon]
//! <rep>/explanation.json   base value, feature labels, variable importance
//! <rep>/attributions.json/.bin  Shapley values in target units [N_w, F]
//! <rep>/stripes.json       stripes at the default pixel width, per metric
//! <rep>/scatter.json       sampled prediction points
//! ```
//!
//! Every file is written from in-memory state with a fixed serialization,
//! so loading a store and writing it again reproduces it byte for byte.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use reprtune_core::explainer::FeatureSet;
use reprtune_core::forecaster::{ModelConfig, TensorSpec, TrainingResult};
use reprtune_core::transform::{representation_id, SmoothingSpec, TransformConfig};
use reprtune_core::{Horizon, Model, Mosaic, Scaler, Stripe, Vsup, WindowMetrics};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Result, StoreError};
use crate::tensor::{self, ArrayHeader};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    /// Stripe width persisted for every representation.
    pub stripe_pixels: usize,
    /// Points kept per scatter payload.
    pub scatter_sample: usize,
    pub mosaic_grid: usize,
    /// Lag segments used as Shapley features for univariate data.
    pub time_segments: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self { stripe_pixels: 800, scatter_sample: 1000, mosaic_grid: 5, time_segments: 12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub id: String,
    pub display_name: String,
    pub unit: Option<String>,
    pub is_target: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub name: String,
    pub source_file: String,
    pub sha256: String,
    pub frequency: String,
    pub length: usize,
    pub target: String,
    pub variables: Vec<VariableInfo>,
    pub first_timestamp: String,
    pub last_timestamp: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationEntry {
    pub id: String,
    /// Directory relative to the store root; absent for failed runs.
    pub dir: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub dataset: DatasetInfo,
    pub transform: TransformConfig,
    pub model: ModelConfig,
    pub options: PipelineOptions,
    /// Raw time-index range `[t0, t1)` shared by every stripe layout.
    pub time_extent: (usize, usize),
    pub representations: Vec<RepresentationEntry>,
    /// SHA-256 of every other file, keyed by path relative to the root.
    pub files: BTreeMap<String, String>,
}

/// Sortable per-representation summary; errors are in target units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub id: String,
    pub smoothing: String,
    pub skip: usize,
    pub window_count: usize,
    pub train_windows: usize,
    pub test_windows: usize,
    pub train_error: f64,
    pub val_error: f64,
    pub acf_value: Option<f64>,
    pub acf_lag: Option<usize>,
    pub adf_statistic: Option<f64>,
    pub adf_stationary: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepresentationMeta {
    pub id: String,
    pub smoothing: SmoothingSpec,
    pub skip: usize,
    /// Raw time index of smoothed position 0.
    pub offset: usize,
    pub window_length: usize,
    pub horizon: usize,
    pub target_index: usize,
}

impl RepresentationMeta {
    /// Raw time index of window `t`'s first input step.
    pub fn raw_start(&self, window: usize) -> usize {
        self.offset + window * self.skip
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    /// Explained scalar of the background window, in target units.
    pub base: f64,
    pub features: FeatureSet,
    pub feature_labels: Vec<String>,
    /// Variables ranked by mean absolute attribution (multivariate only).
    pub importance: Option<Vec<(String, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub representation_id: String,
    pub window_id: usize,
    pub rmse: f64,
    pub corr: Option<f64>,
    pub shap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ParamsHeader {
    dtype: String,
    config: ModelConfig,
    input_shape: (usize, usize),
    parameter_count: usize,
    tensors: Vec<TensorSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RawHeader {
    dtype: String,
    shape: Vec<usize>,
    variables: Vec<String>,
    timestamps: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsupSchemes {
    pub corr: Vsup,
    pub shap: Vsup,
    /// Upper end of the RMSE axis used by single-metric RMSE stripes.
    pub rmse_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoredRepresentation {
    pub meta: RepresentationMeta,
    pub profile: ProfileRow,
    pub training: TrainingResult,
    pub scaler: Scaler,
    pub model: Model,
    pub series: Vec<Vec<f64>>,
    pub metrics: Vec<WindowMetrics>,
    pub predictions: Vec<Vec<f64>>,
    pub explanation: Explanation,
    pub attributions: Vec<Vec<f64>>,
    pub stripes: BTreeMap<String, Stripe>,
    pub scatter: Vec<ScatterPoint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunStore {
    pub manifest: Manifest,
    pub timestamps: Vec<String>,
    /// Raw values per variable, dataset column order.
    pub raw: Vec<Vec<f64>>,
    pub vsup: VsupSchemes,
    pub horizons: Vec<Horizon>,
    pub mosaics: Vec<Mosaic>,
    pub profile: Vec<ProfileRow>,
    pub representations: Vec<StoredRepresentation>,
}

/// Directory name of a representation (`WMA-13/Sk-3` -> `WMA-13_Sk-3`).
pub fn representation_dir(id: &str) -> String {
    id.replace('/', "_")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub(crate) fn to_json<T: Serialize + ?Sized>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("store types serialize");
    bytes.push(b'\n');
    bytes
}

impl StoredRepresentation {
    pub fn id(&self) -> &str {
        &self.meta.id
    }

    fn files(&self) -> Vec<(String, Vec<u8>)> {
        let dir = representation_dir(self.id());
        let mut out = Vec::new();
        let mut put = |name: &str, bytes: Vec<u8>| out.push((format!("{dir}/{name}"), bytes));
        put("representation.json", to_json(&self.meta));
        put("profile.json", to_json(&self.profile));
        put("training.json", to_json(&self.training));
        put("scaler.json", to_json(&self.scaler));

        let params = ParamsHeader {
            dtype: tensor::DTYPE.into(),
            config: self.model.config().clone(),
            input_shape: self.model.input_shape(),
            parameter_count: self.model.parameter_count(),
            tensors: self.model.tensors(),
        };
        put("params.json", to_json(&params));
        put("params.bin", tensor::encode(self.model.parameters()));

        for (name, rows) in [("series", &self.series), ("predictions", &self.predictions)] {
            let (header, flat) = tensor::flatten(rows);
            put(&format!("{name}.json"), to_json(&header));
            put(&format!("{name}.bin"), tensor::encode(&flat));
        }
        put("metrics.json", to_json(&self.metrics));
        put("explanation.json", to_json(&self.explanation));
        let (header, flat) = tensor::flatten(&self.attributions);
        put("attributions.json", to_json(&header));
        put("attributions.bin", tensor::encode(&flat));
        put("stripes.json", to_json(&self.stripes));
        put("scatter.json", to_json(&self.scatter));
        out
    }

    fn load(root: &Path, dir: &str) -> Result<Self> {
        let base = root.join(dir);
        let meta: RepresentationMeta = read_json(&base.join("representation.json"))?;
        let params: ParamsHeader = read_json(&base.join("params.json"))?;
        let values = read_bin(&base.join("params.bin"))?;
        if values.len() != params.parameter_count {
            return Err(StoreError::CorruptStore(format!("{dir}: parameter count mismatch")));
        }
        let model = Model::from_parameters(&params.config, params.input_shape, values)?;
        if model.tensors() != params.tensors {
            return Err(StoreError::CorruptStore(format!("{dir}: tensor layout mismatch")));
        }
        let rep = Self {
            profile: read_json(&base.join("profile.json"))?,
            training: read_json(&base.join("training.json"))?,
            scaler: read_json(&base.join("scaler.json"))?,
            model,
            series: read_rows(&base, "series")?,
            metrics: read_json(&base.join("metrics.json"))?,
            predictions: read_rows(&base, "predictions")?,
            explanation: read_json(&base.join("explanation.json"))?,
            attributions: read_rows(&base, "attributions")?,
            stripes: read_json(&base.join("stripes.json"))?,
            scatter: read_json(&base.join("scatter.json"))?,
            meta,
        };
        let n_w = rep.profile.window_count;
        if rep.metrics.len() != n_w || rep.predictions.len() != n_w || rep.attributions.len() != n_w {
            return Err(StoreError::CorruptStore(format!("{dir}: per-window files disagree with {n_w} windows")));
        }
        Ok(rep)
    }
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| StoreError::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    serde_json::from_slice(&read_bytes(path)?).map_err(|e| StoreError::json(path, e))
}

fn read_bin(path: &Path) -> Result<Vec<f64>> {
    tensor::decode(&read_bytes(path)?, path)
}

fn read_rows(dir: &Path, name: &str) -> Result<Vec<Vec<f64>>> {
    let header: ArrayHeader = read_json(&dir.join(format!("{name}.json")))?;
    let path = dir.join(format!("{name}.bin"));
    tensor::unflatten(&header, read_bin(&path)?, &path)
}

impl RunStore {
    /// Every artifact except the manifest, as `(relative path, bytes)`.
    pub fn files(&self) -> Vec<(String, Vec<u8>)> {
        let (header, flat) = tensor::flatten(&self.raw);
        let raw_header = RawHeader {
            dtype: header.dtype,
            shape: header.shape,
            variables: self.manifest.dataset.variables.iter().map(|v| v.id.clone()).collect(),
            timestamps: self.timestamps.clone(),
        };
        let mut out = vec![
            ("profile.json".to_string(), to_json(&self.profile)),
            ("raw.json".to_string(), to_json(&raw_header)),
            ("raw.bin".to_string(), tensor::encode(&flat)),
            ("vsup.json".to_string(), to_json(&self.vsup)),
            ("horizon.json".to_string(), to_json(&self.horizons)),
            ("mosaic.json".to_string(), to_json(&self.mosaics)),
        ];
        for rep in &self.representations {
            out.extend(rep.files());
        }
        out
    }

    /// Writes every artifact and then the manifest, whose `files` map is
    /// refreshed with the checksums of what was written.
    pub fn write(&mut self, root: &Path) -> Result<()> {
        fs::create_dir_all(root).map_err(|e| StoreError::io(root, e))?;
        let mut checksums = BTreeMap::new();
        for (rel, bytes) in self.files() {
            let path = root.join(&rel);
            if let Some(parent) = path.parent() {
                fs::create_dir_all(parent).map_err(|e| StoreError::io(parent, e))?;
            }
            fs::write(&path, &bytes).map_err(|e| StoreError::io(&path, e))?;
            checksums.insert(rel, sha256_hex(&bytes));
        }
        self.manifest.files = checksums;
        let path = root.join(MANIFEST_FILE);
        fs::write(&path, to_json(&self.manifest)).map_err(|e| StoreError::io(&path, e))
    }

    /// Loads a store, checking that every file the manifest lists exists
    /// with the recorded checksum.
    pub fn load(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref();
        let manifest_path = root.join(MANIFEST_FILE);
        if !manifest_path.is_file() {
            return Err(StoreError::StoreNotFound(root.display().to_string()));
        }
        let manifest: Manifest = read_json(&manifest_path)?;
        if manifest.format_version != FORMAT_VERSION {
            return Err(StoreError::CorruptStore(format!("unsupported format version {}", manifest.format_version)));
        }
        for (rel, expected) in &manifest.files {
            let actual = sha256_hex(&read_bytes(&root.join(rel))?);
            if &actual != expected {
                return Err(StoreError::CorruptStore(format!("checksum mismatch for {rel}")));
            }
        }

        let raw_header: RawHeader = read_json(&root.join("raw.json"))?;
        let raw_path = root.join("raw.bin");
        let raw = tensor::unflatten(
            &ArrayHeader { dtype: raw_header.dtype, shape: raw_header.shape },
            read_bin(&raw_path)?,
            &raw_path,
        )?;
        let mut representations = Vec::new();
        for entry in &manifest.representations {
            match (&entry.status, &entry.dir) {
                (RunStatus::Ok, Some(dir)) => {
                    let rep = StoredRepresentation::load(root, dir)?;
                    if rep.meta.id != entry.id {
                        return Err(StoreError::CorruptStore(format!("{dir} holds {}, expected {}", rep.meta.id, entry.id)));
                    }
                    representations.push(rep);
                }
                (RunStatus::Ok, None) => {
                    return Err(StoreError::CorruptStore(format!("{} has no directory", entry.id)));
                }
                (RunStatus::Failed, _) => {}
            }
        }
        Ok(Self {
            timestamps: raw_header.timestamps,
            raw,
            vsup: read_json(&root.join("vsup.json"))?,
            horizons: read_json(&root.join("horizon.json"))?,
            mosaics: read_json(&root.join("mosaic.json"))?,
            profile: read_json(&root.join("profile.json"))?,
            representations,
            manifest,
        })
    }

    /// Resolves a representation id, distinguishing ids that are simply
    /// not part of this run from malformed ones.
    pub fn representation(&self, id: &str) -> Result<&StoredRepresentation> {
        if let Some(rep) = self.representations.iter().find(|r| r.meta.id == id) {
            return Ok(rep);
        }
        if let Some(entry) = self.manifest.representations.iter().find(|e| e.id == id) {
            return Err(StoreError::RepresentationFailed {
                id: id.to_string(),
                reason: entry.error.clone().unwrap_or_default(),
            });
        }
        match reprtune_core::transform::parse_representation_id(id) {
            Some((smoothing, skip)) => Err(StoreError::RequiresPipelineRun(representation_id(&smoothing, skip))),
            None => Err(StoreError::UnknownRepresentation(id.to_string())),
        }
    }

    pub fn variable_index(&self, id: &str) -> Result<usize> {
        self.manifest
            .dataset
            .variables
            .iter()
            .position(|v| v.id == id)
            .ok_or_else(|| StoreError::UnknownVariable(id.to_string()))
    }

    pub fn target_index(&self) -> usize {
        self.manifest.dataset.variables.iter().position(|v| v.is_target).unwrap_or(0)
    }
}
