//! Per-window counterfactual metrics: exact Shapley attributions against a
//! background window, prediction/actual correlation, and variable ranking.
//!
//! A coalition keeps its member features from the explained window and
//! replaces every other feature with the background (the mean training
//! input). The explained scalar is the mean of the forecast horizon, so
//! `base + sum(phi)` reproduces it exactly, where `base` is the explained
//! scalar of the background itself.

use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forecaster::{Predictor, Streaming};
use crate::scalar::{mean, Scalar};
use crate::stats::pearson;
use crate::transform::SlidingWindow;

/// Largest feature count handled by exact coalition enumeration.
pub const MAX_EXACT_FEATURES: usize = 12;

/// Number of contiguous lag segments used as features for univariate data.
pub const DEFAULT_TIME_SEGMENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FeatureSet {
    /// One feature per input variable (column).
    Variables { ids: Vec<String> },
    /// One feature per contiguous block of time steps, `[start, end)`.
    TimeSegments { bounds: Vec<(usize, usize)> },
}

impl FeatureSet {
    pub fn variables(ids: impl IntoIterator<Item = impl Into<String>>) -> Self {
        FeatureSet::Variables { ids: ids.into_iter().map(Into::into).collect() }
    }

    /// Splits `window_length` lags into `segments` near-equal contiguous blocks
    /// (fewer if the window is shorter than `segments`).
    pub fn time_segments(window_length: usize, segments: usize) -> Self {
        let n = segments.min(window_length).max(1);
        FeatureSet::TimeSegments {
            bounds: (0..n).map(|g| (g * window_length / n, (g + 1) * window_length / n)).collect(),
        }
    }

    /// Variables for multivariate inputs, lag segments for univariate ones.
    pub fn for_input(variable_ids: &[String], window_length: usize) -> Self {
        if variable_ids.len() > 1 {
            Self::variables(variable_ids.iter().cloned())
        } else {
            Self::time_segments(window_length, DEFAULT_TIME_SEGMENTS)
        }
    }

    pub fn len(&self) -> usize {
        match self {
            FeatureSet::Variables { ids } => ids.len(),
            FeatureSet::TimeSegments { bounds } => bounds.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> Vec<String> {
        match self {
            FeatureSet::Variables { ids } => ids.clone(),
            FeatureSet::TimeSegments { bounds } => bounds.iter().map(|(a, b)| format!("lags[{a}..{b})")).collect(),
        }
    }

    fn validate(&self, (w, k): (usize, usize)) -> Result<()> {
        let count = self.len();
        if count == 0 {
            return Err(Error::EmptyInput);
        }
        if count > MAX_EXACT_FEATURES {
            return Err(Error::TooManyFeatures { count, max: MAX_EXACT_FEATURES });
        }
        match self {
            FeatureSet::Variables { ids } if ids.len() != k => Err(Error::shape(format!("{k} variables"), ids.len())),
            FeatureSet::TimeSegments { bounds } if bounds.last().map(|b| b.1) != Some(w) || bounds[0].0 != 0 => {
                Err(Error::shape(format!("segments covering {w} steps"), format!("{bounds:?}")))
            }
            _ => Ok(()),
        }
    }

    /// Overwrites the rows/columns of feature `j` in `buf` with `src`.
    fn copy_feature<T: Scalar>(&self, j: usize, src: &ArrayView2<T>, buf: &mut Array2<T>) {
        match self {
            FeatureSet::Variables { .. } => buf.column_mut(j).assign(&src.column(j)),
            FeatureSet::TimeSegments { bounds } => {
                let (a, b) = bounds[j];
                buf.slice_mut(ndarray::s![a..b, ..]).assign(&src.slice(ndarray::s![a..b, ..]));
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution<T> {
    pub window_id: usize,
    /// Explained scalar of the background window.
    pub base: T,
    /// Explained scalar of the window itself.
    pub prediction: T,
    pub phi: Vec<T>,
    pub feature_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics<T> {
    pub window_id: usize,
    pub rmse: T,
    /// Absent when prediction or actual is constant over the horizon.
    pub corr: Option<T>,
    pub shap_scalar: T,
}

/// Element-wise mean of the training inputs.
pub fn background_window<T: Scalar>(windows: &[SlidingWindow<T>]) -> Result<Array2<T>> {
    let first = windows.first().ok_or(Error::EmptyInput)?;
    let mut acc = Array2::<T>::zeros(first.input.dim());
    for w in windows {
        if w.input.dim() != acc.dim() {
            return Err(Error::shape(format!("{:?}", acc.dim()), format!("{:?}", w.input.dim())));
        }
        acc += &w.input;
    }
    let n = T::from_count(windows.len());
    Ok(acc.mapv(|v| v / n))
}

/// Explained scalar of every coalition, indexed by membership bitmask.
fn coalition_values<T: Scalar, P: Predictor<T> + ?Sized>(
    model: &P,
    window: ArrayView2<T>,
    background: ArrayView2<T>,
    features: &FeatureSet,
) -> Result<Vec<T>> {
    if let (Some(stream), FeatureSet::TimeSegments { bounds }) = (model.streaming(), features) {
        return streamed_coalition_values(stream, window, background, bounds);
    }
    let f = features.len();
    (0..1usize << f)
        .map(|mask| {
            let mut input = background.to_owned();
            for j in (0..f).filter(|j| mask >> j & 1 == 1) {
                features.copy_feature(j, &window, &mut input);
            }
            Ok(mean(&model.predict(input.view())?))
        })
        .collect()
}

/// Depth-first walk over time segments: coalitions sharing their choices on
/// the leading segments share the recurrent state computed over them.
fn streamed_coalition_values<T: Scalar>(
    model: &dyn Streaming<T>,
    window: ArrayView2<T>,
    background: ArrayView2<T>,
    bounds: &[(usize, usize)],
) -> Result<Vec<T>> {
    let window = window.as_standard_layout();
    let background = background.as_standard_layout();
    let (window, background) = (window.as_slice().expect("standard"), background.as_slice().expect("standard"));
    let width = window.len() / bounds.last().map_or(1, |b| b.1).max(1);
    let mut values = vec![T::zero(); 1 << bounds.len()];
    let mut buffer = background.to_vec();

    struct Walk<'a, T: Scalar> {
        model: &'a dyn Streaming<T>,
        window: &'a [T],
        background: &'a [T],
        projected: [Vec<T>; 2],
        bounds: &'a [(usize, usize)],
        width: usize,
    }

    impl<T: Scalar> Walk<'_, T> {
        fn visit(&self, depth: usize, mask: usize, state: &crate::forecaster::StreamState<T>, buffer: &mut [T], values: &mut [T]) -> Result<()> {
            if depth == self.bounds.len() {
                values[mask] = mean(&self.model.finish(state)?);
                return Ok(());
            }
            let (a, b) = self.bounds[depth];
            let rows = a * self.width..b * self.width;
            for present in [false, true] {
                let src = if present { self.window } else { self.background };
                buffer[rows.clone()].copy_from_slice(&src[rows.clone()]);
                let mut next = state.clone();
                let projected = &self.projected[usize::from(present)];
                let from = if projected.is_empty() { b } else { a };
                self.model.advance_projected(&mut next, buffer, b, projected, from);
                self.visit(depth + 1, mask | (usize::from(present) << depth), &next, buffer, values)?;
            }
            Ok(())
        }
    }

    let projected = [model.project(background), model.project(window)];
    let walk = Walk { model, window, background, projected, bounds, width };
    walk.visit(0, 0, &model.begin(), &mut buffer, &mut values)?;
    Ok(values)
}

fn shapley_weights<T: Scalar>(f: usize) -> Vec<T> {
    let fact = |n: usize| (1..=n).map(|i| i as f64).product::<f64>();
    (0..f).map(|s| T::lit(fact(s) * fact(f - s - 1) / fact(f))).collect()
}

/// Exact Shapley values by enumerating all `2^F` coalitions.
pub fn shap_values<T: Scalar, P: Predictor<T> + ?Sized>(
    model: &P,
    window: &SlidingWindow<T>,
    background: ArrayView2<T>,
    features: &FeatureSet,
) -> Result<Attribution<T>> {
    let shape = model.input_shape();
    features.validate(shape)?;
    for dim in [window.input.dim(), background.dim()] {
        if dim != shape {
            return Err(Error::shape(format!("{shape:?}"), format!("{dim:?}")));
        }
    }
    let f = features.len();
    let values = coalition_values(model, window.input.view(), background, features)?;
    let weights = shapley_weights::<T>(f);
    let phi = (0..f)
        .map(|j| {
            let bit = 1usize << j;
            (0..1usize << f)
                .filter(|mask| mask & bit == 0)
                .map(|mask| weights[mask.count_ones() as usize] * (values[mask | bit] - values[mask]))
                .sum()
        })
        .collect();
    Ok(Attribution {
        window_id: window.index,
        base: values[0],
        prediction: values[(1 << f) - 1],
        phi,
        feature_labels: features.labels(),
    })
}

/// [`shap_values`] for many windows, in parallel, preserving order.
pub fn explain_windows<T: Scalar, P: Predictor<T> + ?Sized>(
    model: &P,
    windows: &[SlidingWindow<T>],
    background: ArrayView2<T>,
    features: &FeatureSet,
) -> Result<Vec<Attribution<T>>> {
    windows.par_iter().map(|w| shap_values(model, w, background, features)).collect()
}

/// Sum of the attributions; positive when the window pushes the forecast above the base.
pub fn window_shap_scalar<T: Scalar>(attribution: &Attribution<T>) -> T {
    attribution.phi.iter().copied().sum()
}

/// Pearson correlation of forecast and ground truth over the horizon, or
/// `None` when either side is constant.
pub fn window_correlation<T: Scalar>(prediction: &[T], actual: &[T]) -> Result<Option<T>> {
    match pearson(prediction, actual) {
        Ok(r) => Ok(Some(r)),
        Err(Error::ZeroVariance) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Variables ranked by mean absolute attribution, descending; ties broken by id.
pub fn variable_importance<T: Scalar>(attributions: &[Attribution<T>], variable_count: usize) -> Result<Vec<(String, T)>> {
    if variable_count < 2 {
        return Err(Error::Univariate);
    }
    let first = attributions.first().ok_or(Error::EmptyInput)?;
    let labels = &first.feature_labels;
    if labels.len() != variable_count {
        return Err(Error::shape(variable_count, labels.len()));
    }
    let mut ranked: Vec<(String, T)> = labels
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let total: T = attributions.iter().map(|a| a.phi[j].abs()).sum();
            (id.clone(), total / T::from_count(attributions.len()))
        })
        .collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal).then_with(|| a.0.cmp(&b.0)));
    Ok(ranked)
}
