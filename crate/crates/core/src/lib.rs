//! Time-series representation tuning.
//!
//! Raw series are smoothed (MA/WMA), cut into sliding windows at several
//! skip lengths, and each resulting representation gets its own
//! convolutional-recurrent forecaster. Per-window errors, correlations and
//! Shapley attributions are then prepared as compact view data.
//!
//! Numeric code is generic over [`Scalar`] (`f32`/`f64`); the `f64`
//! aliases below are what the pipeline uses.

pub mod dataset;
pub mod error;
pub mod explainer;
pub mod forecaster;
pub mod scalar;
pub mod stats;
pub mod transform;
pub mod visprep;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset = dataset::TimeSeriesDataset<f64>;
pub type Variable = dataset::VariableSeries<f64>;
pub type Window = transform::SlidingWindow<f64>;
pub type Repr = transform::Representation<f64>;
pub type Scaler = transform::MinMaxScaler<f64>;
pub type Model = forecaster::ForecastModel<f64>;
pub type ModelF32 = forecaster::ForecastModel<f32>;
pub type Prediction = forecaster::Prediction<f64>;
pub type Attribution = explainer::Attribution<f64>;
pub type WindowMetrics = explainer::WindowMetrics<f64>;
pub type Vsup = visprep::VsupScheme<f64>;
pub type Stripe = visprep::StripeRow<f64>;
pub type Mosaic = visprep::MosaicGrid<f64>;
pub type Horizon = visprep::HorizonBands<f64>;
