//! Convolution -> LSTM -> dense -> linear forecaster.
//!
//! Input is a `W x k` window (time steps by variables). A valid 1-D
//! convolution with ReLU runs over time, treating variables as input
//! channels; the LSTM consumes the resulting feature sequence and its
//! final hidden state feeds a ReLU dense layer and a linear output layer of
//! width `horizon`.
//!
//! All parameters live in one flat vector; [`TensorSpec`] names the slices.

mod gradcheck;
mod network;
mod train;

use ndarray::{ArrayView2, CowArray, Ix2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::stats::rmse;
use crate::transform::SlidingWindow;

pub use gradcheck::{gradient_check, GradientCheck};
pub use network::{ForwardTrace, StreamState};
pub use train::{train, TrainingResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub conv_filters: usize,
    pub conv_kernel: usize,
    pub lstm_units: usize,
    pub dense_units: usize,
    /// Output width (forecast steps).
    pub horizon: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            conv_filters: 32,
            conv_kernel: 3,
            lstm_units: 50,
            dense_units: 32,
            horizon: 1,
            learning_rate: 1e-3,
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self, window_length: usize) -> Result<()> {
        let sizes = [
            ("conv_filters", self.conv_filters),
            ("conv_kernel", self.conv_kernel),
            ("lstm_units", self.lstm_units),
            ("dense_units", self.dense_units),
            ("horizon", self.horizon),
            ("epochs", self.epochs),
            ("batch_size", self.batch_size),
        ];
        if let Some((name, _)) = sizes.iter().find(|(_, v)| *v == 0) {
            return Err(Error::InvalidConfig(format!("{name} must be at least 1")));
        }
        if self.conv_kernel > window_length {
            return Err(Error::InvalidConfig(format!(
                "conv_kernel {} exceeds window length {window_length}",
                self.conv_kernel
            )));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning_rate must be positive".into()));
        }
        Ok(())
    }
}

/// Name, shape and flat offset of one parameter tensor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Layout {
    pub filters: usize,
    pub kernel: usize,
    pub features: usize,
    pub units: usize,
    pub dense: usize,
    pub outputs: usize,
    pub conv_w: usize,
    pub conv_b: usize,
    pub lstm_wx: usize,
    pub lstm_wh: usize,
    pub lstm_b: usize,
    pub dense_w: usize,
    pub dense_b: usize,
    pub out_w: usize,
    pub out_b: usize,
    pub total: usize,
}

impl Layout {
    fn new(config: &ModelConfig, features: usize) -> Self {
        let (f, k, h, d, o) = (
            config.conv_filters,
            config.conv_kernel,
            config.lstm_units,
            config.dense_units,
            config.horizon,
        );
        let conv_w = 0;
        let conv_b = conv_w + f * k * features;
        let lstm_wx = conv_b + f;
        let lstm_wh = lstm_wx + 4 * h * f;
        let lstm_b = lstm_wh + 4 * h * h;
        let dense_w = lstm_b + 4 * h;
        let dense_b = dense_w + d * h;
        let out_w = dense_b + d;
        let out_b = out_w + o * d;
        Self {
            filters: f,
            kernel: k,
            features,
            units: h,
            dense: d,
            outputs: o,
            conv_w,
            conv_b,
            lstm_wx,
            lstm_wh,
            lstm_b,
            dense_w,
            dense_b,
            out_w,
            out_b,
            total: out_b + o,
        }
    }

    fn tensors(&self) -> Vec<TensorSpec> {
        let spec = |name: &str, shape: Vec<usize>, offset| TensorSpec { name: name.into(), shape, offset };
        let (f, k, c, h, d, o) = (self.filters, self.kernel, self.features, self.units, self.dense, self.outputs);
        vec![
            spec("conv.weight", vec![f, k, c], self.conv_w),
            spec("conv.bias", vec![f], self.conv_b),
            spec("lstm.kernel", vec![4 * h, f], self.lstm_wx),
            spec("lstm.recurrent", vec![4 * h, h], self.lstm_wh),
            spec("lstm.bias", vec![4 * h], self.lstm_b),
            spec("dense.weight", vec![d, h], self.dense_w),
            spec("dense.bias", vec![d], self.dense_b),
            spec("output.weight", vec![o, d], self.out_w),
            spec("output.bias", vec![o], self.out_b),
        ]
    }
}

/// Parameters of the forecasting network.
///
/// LSTM gate blocks are stacked in input, forget, cell, output order.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastModel<T> {
    config: ModelConfig,
    window_length: usize,
    layout: Layout,
    params: Vec<T>,
}

impl<T: Scalar> ForecastModel<T> {
    /// Fresh model with Glorot-uniform kernels, zero biases and unit forget
    /// bias. Fully determined by `config.seed`.
    pub fn init(config: &ModelConfig, input_shape: (usize, usize)) -> Result<Self> {
        let (window_length, features) = input_shape;
        if window_length == 0 || features == 0 {
            return Err(Error::shape("non-empty (W, k)", format!("{input_shape:?}")));
        }
        config.validate(window_length)?;
        let layout = Layout::new(config, features);
        let mut params = vec![T::zero(); layout.total];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (f, k, c, h, d, o) = (layout.filters, layout.kernel, layout.features, layout.units, layout.dense, layout.outputs);
        let mut fill = |offset: usize, len: usize, fan_in: usize, fan_out: usize| {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut params[offset..offset + len] {
                *p = T::lit(rng.random_range(-limit..limit));
            }
        };
        fill(layout.conv_w, f * k * c, k * c, k * f);
        fill(layout.lstm_wx, 4 * h * f, f, 4 * h);
        fill(layout.lstm_wh, 4 * h * h, h, 4 * h);
        fill(layout.dense_w, d * h, h, d);
        fill(layout.out_w, o * d, d, o);
        for p in &mut params[layout.lstm_b + h..layout.lstm_b + 2 * h] {
            *p = T::one();
        }
        Ok(Self { config: config.clone(), window_length, layout, params })
    }

    /// Rebuilds a model from a flat parameter vector (e.g. loaded from disk).
    pub fn from_parameters(config: &ModelConfig, input_shape: (usize, usize), params: Vec<T>) -> Result<Self> {
        let mut model = Self::init(config, input_shape)?;
        if params.len() != model.params.len() {
            return Err(Error::shape(model.params.len(), params.len()));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        model.params = params;
        Ok(model)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    /// `(W, k)`.
    pub fn input_shape(&self) -> (usize, usize) {
        (self.window_length, self.layout.features)
    }

    pub fn horizon(&self) -> usize {
        self.layout.outputs
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }

    pub fn parameters(&self) -> &[T] {
        &self.params
    }

    pub fn parameters_mut(&mut self) -> &mut [T] {
        &mut self.params
    }

    pub fn tensors(&self) -> Vec<TensorSpec> {
        self.layout.tensors()
    }

    pub fn tensor(&self, name: &str) -> Option<&[T]> {
        let spec = self.tensors().into_iter().find(|t| t.name == name)?;
        Some(&self.params[spec.offset..spec.offset + spec.len()])
    }

    pub fn tensor_mut(&mut self, name: &str) -> Option<&mut [T]> {
        let spec = self.tensors().into_iter().find(|t| t.name == name)?;
        Some(&mut self.params[spec.offset..spec.offset + spec.len()])
    }

    /// Converts every parameter to another scalar type.
    pub fn cast<U: Scalar>(&self) -> ForecastModel<U> {
        ForecastModel {
            config: self.config.clone(),
            window_length: self.window_length,
            layout: self.layout,
            params: self.params.iter().map(|&p| U::lit(p.as_f64())).collect(),
        }
    }

    pub(crate) fn check_input<'a>(&self, input: ArrayView2<'a, T>) -> Result<CowArray<'a, T, Ix2>> {
        let expected = self.input_shape();
        if input.dim() != expected {
            return Err(Error::shape(format!("{expected:?}"), format!("{:?}", input.dim())));
        }
        Ok(if input.is_standard_layout() {
            CowArray::from(input)
        } else {
            CowArray::from(input.as_standard_layout().into_owned())
        })
    }

    /// Forecast for one window.
    pub fn forward(&self, input: ArrayView2<T>) -> Result<Vec<T>> {
        let input = self.check_input(input)?;
        let trace = self.run(input.as_slice().expect("standard layout"));
        finite_output(trace.output)
    }

    /// Forward pass keeping every intermediate activation.
    pub fn trace(&self, input: ArrayView2<T>) -> Result<ForwardTrace<T>> {
        let input = self.check_input(input)?;
        Ok(self.run(input.as_slice().expect("standard layout")))
    }
}

pub(crate) fn finite_output<T: Scalar>(output: Vec<T>) -> Result<Vec<T>> {
    if output.iter().all(|v| v.is_finite()) {
        Ok(output)
    } else {
        Err(Error::NonFiniteActivation)
    }
}

/// Anything that maps a `W x k` window to a `horizon`-step forecast.
pub trait Predictor<T: Scalar>: Sync {
    fn input_shape(&self) -> (usize, usize);
    fn horizon(&self) -> usize;
    fn predict(&self, input: ArrayView2<T>) -> Result<Vec<T>>;

    /// Incremental interface, when the predictor reads its input front to back.
    fn streaming(&self) -> Option<&dyn Streaming<T>> {
        None
    }
}

/// Predictors whose state after reading the first rows of a window does not
/// depend on later rows.
pub trait Streaming<T: Scalar>: Sync {
    fn begin(&self) -> StreamState<T>;
    /// Consumes every step whose receptive field lies in `input[..rows]`.
    /// Rows at or past `rows` are never read.
    fn advance(&self, state: &mut StreamState<T>, input: &[T], rows: usize);
    /// Per-step input contributions of a complete input, for
    /// [`Streaming::advance_projected`]. Empty when not supported.
    fn project(&self, _input: &[T]) -> Vec<T> {
        Vec::new()
    }
    /// [`Streaming::advance`] where every step starting at or after
    /// `from_row` reads only rows copied from the input `projected` was
    /// computed from, and takes its contribution from there.
    fn advance_projected(&self, state: &mut StreamState<T>, input: &[T], rows: usize, _projected: &[T], _from_row: usize) {
        self.advance(state, input, rows);
    }
    fn finish(&self, state: &StreamState<T>) -> Result<Vec<T>>;
}

impl<T: Scalar> Predictor<T> for ForecastModel<T> {
    fn input_shape(&self) -> (usize, usize) {
        ForecastModel::input_shape(self)
    }

    fn horizon(&self) -> usize {
        ForecastModel::horizon(self)
    }

    fn predict(&self, input: ArrayView2<T>) -> Result<Vec<T>> {
        self.forward(input)
    }

    fn streaming(&self) -> Option<&dyn Streaming<T>> {
        Some(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction<T> {
    pub window_index: usize,
    pub predicted: Vec<T>,
    pub rmse: T,
}

/// One prediction per window, with per-window RMSE against its target.
pub fn predict_all<T: Scalar, P: Predictor<T> + ?Sized>(model: &P, windows: &[SlidingWindow<T>]) -> Result<Vec<Prediction<T>>> {
    windows
        .iter()
        .map(|w| {
            let predicted = model.predict(w.input.view())?;
            if predicted.len() != w.target.len() {
                return Err(Error::shape(w.target.len(), predicted.len()));
            }
            let rmse = rmse(&predicted, &w.target)?;
            Ok(Prediction { window_index: w.index, predicted, rmse })
        })
        .collect()
}

/// RMSE over the concatenated errors of every prediction.
pub fn representation_rmse<T: Scalar>(predictions: &[Prediction<T>], windows: &[SlidingWindow<T>]) -> Result<T> {
    if predictions.len() != windows.len() {
        return Err(Error::LengthMismatch { left: predictions.len(), right: windows.len() });
    }
    let predicted: Vec<T> = predictions.iter().flat_map(|p| p.predicted.iter().copied()).collect();
    let actual: Vec<T> = windows.iter().flat_map(|w| w.target.iter().copied()).collect();
    rmse(&predicted, &actual)
}

#[cfg(test)]
mod tests;
