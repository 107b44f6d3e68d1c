//! Transform, train, predict, explain and prepare views for every
//! representation, then persist the result as a run store.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use log::{info, warn};
use rayon::prelude::*;
use reprtune_core::dataset::parse_dataset;
use reprtune_core::explainer::{background_window, explain_windows, variable_importance, window_correlation, FeatureSet};
use reprtune_core::forecaster::{predict_all, train, ModelConfig};
use reprtune_core::stats::{acf_peak, adf_test, rmse};
use reprtune_core::transform::{representation_id, split_point, Representation, SmoothingSpec, TransformConfig};
use reprtune_core::visprep::{build_vsup, horizon_bands, sample_predictions, Metric1Domain};
use reprtune_core::{Attribution, Dataset, Model, WindowMetrics};

use crate::error::{Result, StoreError};
use crate::store::{
    representation_dir, sha256_hex, DatasetInfo, Explanation, Manifest, PipelineOptions, ProfileRow,
    RepresentationEntry, RepresentationMeta, RunStatus, RunStore, StoredRepresentation, VariableInfo, VsupSchemes,
    FORMAT_VERSION, MANIFEST_FILE,
};
use crate::views::{scatter_points, stripe, StripeMetric};

/// Runs the full sweep over `transform.smoothing x transform.skips` and
/// writes the store to `out_dir`.
///
/// The model's output width is taken from `transform.horizon`. Failures of
/// individual representations are recorded in the manifest; dataset or
/// configuration errors abort.
pub fn run_pipeline(
    dataset_path: &Path,
    target: &str,
    transform: &TransformConfig,
    model: &ModelConfig,
    options: &PipelineOptions,
    out_dir: &Path,
) -> Result<RunStore> {
    let bytes = fs::read(dataset_path).map_err(|e| StoreError::io(dataset_path, e))?;
    let name = dataset_path.file_stem().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let dataset: Dataset = parse_dataset(bytes.as_slice(), &name, target)?;
    let source_file = dataset_path.file_name().map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut store = build_store(&dataset, &source_file, &sha256_hex(&bytes), transform, model, options)?;
    clear_previous(out_dir)?;
    store.write(out_dir)?;
    info!("run store written to {}", out_dir.display());
    Ok(store)
}

/// Computes the whole store in memory.
pub fn build_store(
    dataset: &Dataset,
    source_file: &str,
    sha256: &str,
    transform: &TransformConfig,
    model: &ModelConfig,
    options: &PipelineOptions,
) -> Result<RunStore> {
    transform.validate()?;
    let model = ModelConfig { horizon: transform.horizon, ..model.clone() };
    model.validate(transform.window_length)?;
    if options.stripe_pixels == 0 || options.scatter_sample == 0 {
        return Err(StoreError::InvalidQuery("stripe width and scatter sample must be positive".into()));
    }
    if options.mosaic_grid < 2 {
        return Err(StoreError::InvalidQuery("mosaic grid needs at least 2 partitions".into()));
    }

    let specs: Vec<(SmoothingSpec, usize)> = transform
        .smoothing
        .iter()
        .flat_map(|&s| transform.skips.iter().map(move |&k| (s, k)))
        .collect();
    let total = specs.len();
    let outcomes: Vec<(String, Result<StoredRepresentation>)> = specs
        .par_iter()
        .enumerate()
        .map(|(i, &(smoothing, skip))| {
            let id = representation_id(&smoothing, skip);
            let outcome = process_representation(dataset, smoothing, skip, transform, &model, options);
            match &outcome {
                Ok(rep) => info!(
                    "[{}/{total}] {id}: {} windows, train error {:.4}, val error {:.4}",
                    i + 1,
                    rep.profile.window_count,
                    rep.profile.train_error,
                    rep.profile.val_error
                ),
                Err(e) => warn!("[{}/{total}] {id} failed: {e}", i + 1),
            }
            (id, outcome)
        })
        .collect();

    let mut entries = Vec::with_capacity(total);
    let mut representations = Vec::new();
    for (id, outcome) in outcomes {
        match outcome {
            Ok(rep) => {
                entries.push(RepresentationEntry {
                    dir: Some(representation_dir(&id)),
                    id,
                    status: RunStatus::Ok,
                    error: None,
                });
                representations.push(rep);
            }
            Err(e) => entries.push(RepresentationEntry { id, dir: None, status: RunStatus::Failed, error: Some(e.to_string()) }),
        }
    }
    if let Some(dup) = entries.iter().enumerate().find(|(i, e)| entries[..*i].iter().any(|o| o.id == e.id)) {
        return Err(StoreError::InvalidQuery(format!("duplicate representation {}", dup.1.id)));
    }

    let vsup = shared_vsup(&representations)?;
    for rep in &mut representations {
        rep.stripes = StripeMetric::ALL
            .iter()
            .map(|&m| (m.to_string(), stripe(rep, &vsup, m, options.stripe_pixels)))
            .collect::<BTreeMap<_, _>>();
        rep.scatter = sample_predictions(&scatter_points(rep), options.scatter_sample, model.seed);
    }

    let target_index = dataset.target_index();
    let horizons = dataset
        .variables
        .iter()
        .filter_map(|v| match horizon_bands(&v.id, &v.values) {
            Ok(h) => Some(h),
            Err(e) => {
                warn!("no horizon bands for {}: {e}", v.id);
                None
            }
        })
        .collect();
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        dataset: DatasetInfo {
            name: dataset.name.clone(),
            source_file: source_file.to_string(),
            sha256: sha256.to_string(),
            frequency: dataset.frequency.clone(),
            length: dataset.len(),
            target: dataset.target_id.clone(),
            variables: dataset
                .variables
                .iter()
                .enumerate()
                .map(|(j, v)| VariableInfo {
                    id: v.id.clone(),
                    display_name: v.display_name.clone(),
                    unit: v.unit.clone(),
                    is_target: j == target_index,
                })
                .collect(),
            first_timestamp: dataset.timestamps[0].to_string(),
            last_timestamp: dataset.timestamps[dataset.len() - 1].to_string(),
        },
        transform: transform.clone(),
        model,
        options: options.clone(),
        time_extent: (0, dataset.len()),
        representations: entries,
        files: BTreeMap::new(),
    };
    let mut store = RunStore {
        manifest,
        timestamps: dataset.timestamps.iter().map(ToString::to_string).collect(),
        raw: dataset.variables.iter().map(|v| v.values.clone()).collect(),
        vsup,
        horizons,
        mosaics: Vec::new(),
        profile: representations.iter().map(|r| r.profile.clone()).collect(),
        representations,
    };
    store.mosaics = store
        .default_mosaic_pairs()
        .iter()
        .map(|(x, y)| store.mosaic(x, y, options.mosaic_grid))
        .collect::<Result<_>>()?;
    Ok(store)
}

fn process_representation(
    dataset: &Dataset,
    smoothing: SmoothingSpec,
    skip: usize,
    transform: &TransformConfig,
    config: &ModelConfig,
    options: &PipelineOptions,
) -> Result<StoredRepresentation> {
    let rep = Representation::build(dataset, smoothing, skip, transform.window_length, transform.horizon)?;
    let annotate = |e: reprtune_core::Error| reprtune_core::Error::Representation { id: rep.id.clone(), source: Box::new(e) };
    let n = rep.windows.len();
    let n_train = split_point(n, transform.split_ratio).map_err(annotate)?;
    let scaler = rep.fit_scaler(n_train);
    let scaled: Vec<_> = rep.windows.iter().map(|w| scaler.transform_window(w)).collect();

    let target = rep.target_series();
    let (acf_lag, acf_value) = acf_peak(target).ok().unzip();
    let adf = adf_test(target).ok();

    let k = dataset.variable_count();
    let model = Model::init(config, (transform.window_length, k)).map_err(annotate)?;
    let (model, training) = train(model, &scaled[..n_train], &scaled[n_train..], config).map_err(annotate)?;

    let predictions: Vec<Vec<f64>> = predict_all(&model, &scaled)
        .map_err(annotate)?
        .into_iter()
        .map(|p| p.predicted.iter().map(|&y| scaler.unscale_target(y)).collect())
        .collect();
    let concat_rmse = |range: std::ops::Range<usize>| -> Result<f64> {
        let predicted: Vec<f64> = predictions[range.clone()].concat();
        let actual: Vec<f64> = rep.windows[range].iter().flat_map(|w| w.target.iter().copied()).collect();
        Ok(rmse(&predicted, &actual).map_err(annotate)?)
    };
    let train_error = concat_rmse(0..n_train)?;
    let val_error = concat_rmse(n_train..n)?;

    let background = background_window(&scaled[..n_train]).map_err(annotate)?;
    let features = if k > 1 {
        FeatureSet::variables(dataset.variables.iter().map(|v| v.id.clone()))
    } else {
        FeatureSet::time_segments(transform.window_length, options.time_segments)
    };
    let range = scaler.target_range();
    let attributions: Vec<Attribution> = explain_windows(&model, &scaled, background.view(), &features)
        .map_err(annotate)?
        .into_iter()
        .map(|a| Attribution {
            base: scaler.unscale_target(a.base),
            prediction: scaler.unscale_target(a.prediction),
            phi: a.phi.iter().map(|&p| p * range).collect(),
            ..a
        })
        .collect();
    let importance = if k > 1 { Some(variable_importance(&attributions, k).map_err(annotate)?) } else { None };

    let metrics = rep
        .windows
        .iter()
        .zip(&predictions)
        .zip(&attributions)
        .map(|((w, pred), attr)| {
            Ok(WindowMetrics {
                window_id: w.index,
                rmse: rmse(pred, &w.target)?,
                corr: window_correlation(pred, &w.target)?,
                shap_scalar: attr.phi.iter().sum(),
            })
        })
        .collect::<reprtune_core::Result<Vec<_>>>()
        .map_err(annotate)?;
    let finite = metrics
        .iter()
        .all(|m| m.rmse.is_finite() && m.shap_scalar.is_finite() && m.corr.is_none_or(f64::is_finite));
    if !finite || !(train_error.is_finite() && val_error.is_finite()) {
        return Err(annotate(reprtune_core::Error::NonFiniteActivation).into());
    }

    let profile = ProfileRow {
        id: rep.id.clone(),
        smoothing: smoothing.to_string(),
        skip,
        window_count: n,
        train_windows: n_train,
        test_windows: n - n_train,
        train_error,
        val_error,
        acf_value,
        acf_lag,
        adf_statistic: adf.as_ref().map(|a| a.statistic),
        adf_stationary: adf.as_ref().map(|a| a.stationary),
    };
    Ok(StoredRepresentation {
        meta: RepresentationMeta {
            id: rep.id.clone(),
            smoothing,
            skip,
            offset: rep.offset(),
            window_length: rep.window_length,
            horizon: rep.horizon,
            target_index: rep.target_index,
        },
        profile,
        training,
        scaler,
        model,
        metrics,
        predictions,
        explanation: Explanation {
            base: attributions.first().map_or(0.0, |a| a.base),
            feature_labels: features.labels(),
            features,
            importance,
        },
        attributions: attributions.into_iter().map(|a| a.phi).collect(),
        series: rep.series,
        stripes: BTreeMap::new(),
        scatter: Vec::new(),
    })
}

/// Quantizers shared by all representations so stripe colors compare
/// across rows.
fn shared_vsup(representations: &[StoredRepresentation]) -> Result<VsupSchemes> {
    let all = || representations.iter().flat_map(|r| r.metrics.iter());
    let or_zero = |v: Vec<f64>| if v.is_empty() { vec![0.0] } else { v };
    let corr = or_zero(all().filter_map(|m| m.corr).collect());
    let shap = or_zero(all().map(|m| m.shap_scalar).collect());
    let rmse = or_zero(all().map(|m| m.rmse).collect());
    let rmse_max = rmse.iter().copied().fold(0.0, f64::max);
    Ok(VsupSchemes {
        corr: build_vsup(&corr, &rmse, Metric1Domain::Correlation)?,
        shap: build_vsup(&shap, &rmse, Metric1Domain::Observed)?,
        rmse_max,
    })
}

/// Removes the files of a store previously written to `dir`.
fn clear_previous(dir: &Path) -> Result<()> {
    let manifest = dir.join(MANIFEST_FILE);
    let Ok(bytes) = fs::read(&manifest) else {
        return Ok(());
    };
    let Ok(previous) = serde_json::from_slice::<Manifest>(&bytes) else {
        return Ok(());
    };
    for rel in previous.files.keys() {
        let path = dir.join(rel);
        if path.is_file() {
            fs::remove_file(&path).map_err(|e| StoreError::io(&path, e))?;
        }
    }
    for entry in previous.representations.iter().filter_map(|e| e.dir.as_ref()) {
        let _ = fs::remove_dir(dir.join(entry));
    }
    fs::remove_file(&manifest).map_err(|e| StoreError::io(&manifest, e))
}
