#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use reprtune_core::forecaster::ModelConfig;
use reprtune_core::transform::{SmoothingSpec, TransformConfig};
use reprtune_store::fixtures::{air_quality_csv, sunspot_csv};
use reprtune_store::{run_pipeline, PipelineOptions, RunStore};

pub fn small_transform() -> TransformConfig {
    TransformConfig {
        smoothing: vec![SmoothingSpec::RAW, SmoothingSpec::ma(3), SmoothingSpec::wma(5)],
        skips: vec![1, 3],
        window_length: 24,
        horizon: 6,
        split_ratio: 0.8,
    }
}

pub fn small_model() -> ModelConfig {
    ModelConfig {
        conv_filters: 4,
        conv_kernel: 3,
        lstm_units: 6,
        dense_units: 6,
        horizon: 6,
        learning_rate: 5e-3,
        epochs: 8,
        batch_size: 16,
        seed: 11,
    }
}

pub fn small_options() -> PipelineOptions {
    PipelineOptions { stripe_pixels: 800, scatter_sample: 50, mosaic_grid: 5, time_segments: 6 }
}

pub fn write_csv(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

/// A univariate store on a short sunspot-like series, built once per test binary.
pub fn sunspot_store() -> &'static (tempfile::TempDir, RunStore) {
    static STORE: OnceLock<(tempfile::TempDir, RunStore)> = OnceLock::new();
    STORE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = write_csv(dir.path(), "sunspots.csv", &sunspot_csv(150, 3));
        let out = dir.path().join("store");
        let store = run_pipeline(&data, "sunspots", &small_transform(), &small_model(), &small_options(), &out).unwrap();
        (dir, store)
    })
}

/// A six-variable hourly store.
pub fn air_quality_store() -> &'static (tempfile::TempDir, RunStore) {
    static STORE: OnceLock<(tempfile::TempDir, RunStore)> = OnceLock::new();
    STORE.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let data = write_csv(dir.path(), "air.csv", &air_quality_csv(200, 5));
        let out = dir.path().join("store");
        let transform = TransformConfig {
            smoothing: vec![SmoothingSpec::RAW, SmoothingSpec::ma(4)],
            skips: vec![2],
            ..small_transform()
        };
        let store = run_pipeline(&data, "pm25", &transform, &small_model(), &small_options(), &out).unwrap();
        (dir, store)
    })
}

pub fn store_root(fixture: &(tempfile::TempDir, RunStore)) -> PathBuf {
    fixture.0.path().join("store")
}
