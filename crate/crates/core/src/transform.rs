//! Smoothing, sliding-window sampling and representation enumeration.
//!
//! Smoothing uses trailing windows: output `j` summarizes raw points
//! `j ..= j + m - 1` and is aligned to raw time `j + m - 1`. The smoothed
//! series is therefore `m - 1` points shorter than its input; nothing is
//! padded.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::dataset::TimeSeriesDataset;
use crate::error::{Error, Result};
use crate::scalar::{min_max, Scalar};

/// Trailing unweighted moving average over `m` points.
///
/// Accumulated as deviations from the newest point, so a constant window
/// returns its value exactly.
pub fn moving_average<T: Scalar>(values: &[T], m: usize) -> Result<Vec<T>> {
    check_span(values.len(), m)?;
    let scale = T::one() / T::from_count(m);
    Ok(values
        .windows(m)
        .map(|w| {
            let last = w[m - 1];
            last + w.iter().map(|&x| x - last).sum::<T>() * scale
        })
        .collect())
}

/// Weights of the trailing weighted moving average, oldest first:
/// `2 i / (m (m + 1))` for `i = 1..=m`, so the most recent point weighs most.
pub fn wma_weights<T: Scalar>(m: usize) -> Vec<T> {
    let norm = T::lit(2.0) / (T::from_count(m) * T::from_count(m + 1));
    (1..=m).map(|i| T::from_count(i) * norm).collect()
}

/// Trailing weighted moving average with arithmetic-progression weights.
pub fn weighted_moving_average<T: Scalar>(values: &[T], m: usize) -> Result<Vec<T>> {
    check_span(values.len(), m)?;
    let weights = wma_weights::<T>(m);
    Ok(values
        .windows(m)
        .map(|w| {
            let last = w[m - 1];
            last + w.iter().zip(&weights).map(|(&x, &wt)| (x - last) * wt).sum::<T>()
        })
        .collect())
}

fn check_span(len: usize, m: usize) -> Result<()> {
    if m == 0 {
        return Err(Error::InvalidSpan);
    }
    if m > len {
        return Err(Error::SpanTooLarge { span: m, len });
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SmoothingMethod {
    Raw,
    Ma,
    Wma,
}

/// One smoothing choice. Displays and parses as `Raw`, `MA-3`, `WMA-13`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub method: SmoothingMethod,
    /// Span `m`; `None` for raw data.
    pub span: Option<usize>,
}

impl SmoothingSpec {
    pub const RAW: SmoothingSpec = SmoothingSpec { method: SmoothingMethod::Raw, span: None };

    pub fn ma(m: usize) -> Self {
        Self { method: SmoothingMethod::Ma, span: Some(m) }
    }

    pub fn wma(m: usize) -> Self {
        Self { method: SmoothingMethod::Wma, span: Some(m) }
    }

    /// Number of raw points consumed before the first smoothed output (`m - 1`).
    pub fn lag(&self) -> usize {
        self.span.map_or(0, |m| m.saturating_sub(1))
    }

    pub fn apply<T: Scalar>(&self, values: &[T]) -> Result<Vec<T>> {
        match (self.method, self.span) {
            (SmoothingMethod::Raw, _) => Ok(values.to_vec()),
            (SmoothingMethod::Ma, Some(m)) => moving_average(values, m),
            (SmoothingMethod::Wma, Some(m)) => weighted_moving_average(values, m),
            (_, None) => Err(Error::InvalidSpan),
        }
    }
}

impl fmt::Display for SmoothingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.method, self.span) {
            (SmoothingMethod::Raw, _) => f.write_str("Raw"),
            (SmoothingMethod::Ma, Some(m)) => write!(f, "MA-{m}"),
            (SmoothingMethod::Wma, Some(m)) => write!(f, "WMA-{m}"),
            (_, None) => f.write_str("?"),
        }
    }
}

impl FromStr for SmoothingSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("raw") {
            return Ok(Self::RAW);
        }
        let (method, span) = s
            .split_once('-')
            .ok_or_else(|| format!("expected Raw, MA-<m> or WMA-<m>, got {s:?}"))?;
        let m: usize = span.parse().map_err(|_| format!("bad span in {s:?}"))?;
        if m == 0 {
            return Err(format!("span must be positive in {s:?}"));
        }
        match method.to_ascii_uppercase().as_str() {
            "MA" => Ok(Self::ma(m)),
            "WMA" => Ok(Self::wma(m)),
            _ => Err(format!("unknown smoothing method in {s:?}")),
        }
    }
}

/// Formats a representation id such as `WMA-13/Sk-3`.
pub fn representation_id(smoothing: &SmoothingSpec, skip: usize) -> String {
    format!("{smoothing}/Sk-{skip}")
}

/// Inverse of [`representation_id`].
pub fn parse_representation_id(id: &str) -> Option<(SmoothingSpec, usize)> {
    let (smoothing, skip) = id.rsplit_once("/Sk-")?;
    let skip: usize = skip.parse().ok().filter(|&s| s >= 1)?;
    Some((smoothing.parse().ok()?, skip))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub smoothing: Vec<SmoothingSpec>,
    pub skips: Vec<usize>,
    /// Input steps `W`.
    pub window_length: usize,
    /// Forecast steps.
    pub horizon: usize,
    pub split_ratio: f64,
}

impl TransformConfig {
    pub const DEFAULT_SPLIT: f64 = 0.8;

    pub fn validate(&self) -> Result<()> {
        if self.smoothing.is_empty() {
            return Err(Error::InvalidConfig("no smoothing specs".into()));
        }
        if self.skips.is_empty() {
            return Err(Error::InvalidConfig("no skip lengths".into()));
        }
        if self.skips.contains(&0) {
            return Err(Error::InvalidSkip);
        }
        if self.window_length == 0 || self.horizon == 0 {
            return Err(Error::InvalidConfig("window length and horizon must be positive".into()));
        }
        if !(self.split_ratio > 0.0 && self.split_ratio < 1.0) {
            return Err(Error::InvalidRatio(self.split_ratio));
        }
        Ok(())
    }
}

/// A `(W input, horizon target)` slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlidingWindow<T> {
    pub index: usize,
    /// Offset of the first input row in the (smoothed) series.
    pub start: usize,
    /// `W x k` input matrix, rows are time steps.
    pub input: Array2<T>,
    /// Target-variable values for the `horizon` steps after the input.
    pub target: Vec<T>,
}

/// Number of windows that fit: `floor((len - W - horizon) / s) + 1`, or 0.
pub fn window_count(len: usize, window_length: usize, horizon: usize, skip: usize) -> usize {
    let footprint = window_length + horizon;
    if skip == 0 || footprint > len {
        0
    } else {
        (len - footprint) / skip + 1
    }
}

/// Cuts `series` (one vector per variable, equal lengths) into sliding
/// windows starting at `0, s, 2s, ...`.
pub fn generate_windows<T: Scalar>(
    series: &[Vec<T>],
    window_length: usize,
    horizon: usize,
    skip: usize,
    target_index: usize,
) -> Result<Vec<SlidingWindow<T>>> {
    if skip == 0 {
        return Err(Error::InvalidSkip);
    }
    let k = series.len();
    if target_index >= k {
        return Err(Error::shape(format!("target index < {k}"), target_index));
    }
    let len = series[0].len();
    if let Some(bad) = series.iter().find(|s| s.len() != len) {
        return Err(Error::LengthMismatch { left: len, right: bad.len() });
    }
    let count = window_count(len, window_length, horizon, skip);
    if count == 0 || window_length == 0 || horizon == 0 {
        return Err(Error::SeriesTooShort { len, required: window_length + horizon });
    }
    Ok((0..count)
        .map(|index| {
            let start = index * skip;
            let input = Array2::from_shape_fn((window_length, k), |(t, j)| series[j][start + t]);
            let from = start + window_length;
            SlidingWindow {
                index,
                start,
                input,
                target: series[target_index][from..from + horizon].to_vec(),
            }
        })
        .collect())
}

/// Number of training windows for a chronological split: `floor(ratio * n)`
/// clamped so both sides keep at least one window.
pub fn split_point(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidRatio(ratio));
    }
    if n < 2 {
        return Err(Error::TooFewWindows(n));
    }
    Ok(((ratio * n as f64).floor() as usize).clamp(1, n - 1))
}

/// Chronological train/test split; no shuffling.
pub fn split_train_test<W>(windows: &[W], ratio: f64) -> Result<(&[W], &[W])> {
    let cut = split_point(windows.len(), ratio)?;
    Ok(windows.split_at(cut))
}

/// One smoothing + sampling combination with its derived windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Representation<T> {
    pub id: String,
    pub smoothing: SmoothingSpec,
    pub skip: usize,
    /// Smoothed values per variable, in dataset column order.
    pub series: Vec<Vec<T>>,
    pub windows: Vec<SlidingWindow<T>>,
    pub window_length: usize,
    pub horizon: usize,
    pub target_index: usize,
}

impl<T: Scalar> Representation<T> {
    pub fn build(dataset: &TimeSeriesDataset<T>, smoothing: SmoothingSpec, skip: usize, window_length: usize, horizon: usize) -> Result<Self> {
        let id = representation_id(&smoothing, skip);
        let annotate = |source: Error| Error::Representation { id: id.clone(), source: Box::new(source) };
        let series = dataset
            .variables
            .iter()
            .map(|v| smoothing.apply(&v.values))
            .collect::<Result<Vec<_>>>()
            .map_err(annotate)?;
        let target_index = dataset.target_index();
        let windows = generate_windows(&series, window_length, horizon, skip, target_index).map_err(annotate)?;
        Ok(Self {
            id,
            smoothing,
            skip,
            series,
            windows,
            window_length,
            horizon,
            target_index,
        })
    }

    /// Raw-time index of smoothed position 0.
    pub fn offset(&self) -> usize {
        self.smoothing.lag()
    }

    pub fn smoothed_len(&self) -> usize {
        self.series.first().map_or(0, Vec::len)
    }

    pub fn target_series(&self) -> &[T] {
        &self.series[self.target_index]
    }

    /// Min-max scaler fitted on the span covered by the first `n_train` windows.
    pub fn fit_scaler(&self, n_train: usize) -> MinMaxScaler<T> {
        let end = self.windows[..n_train.min(self.windows.len())]
            .last()
            .map_or(self.smoothed_len(), |w| w.start + self.window_length + self.horizon);
        MinMaxScaler::fit(&self.series, end, self.target_index)
    }
}

/// Cartesian product of smoothing specs and skips, smoothing-major.
pub fn enumerate_representations<T: Scalar>(dataset: &TimeSeriesDataset<T>, config: &TransformConfig) -> Result<Vec<Representation<T>>> {
    config.validate()?;
    let mut out = Vec::with_capacity(config.smoothing.len() * config.skips.len());
    for smoothing in &config.smoothing {
        for &skip in &config.skips {
            out.push(Representation::build(dataset, *smoothing, skip, config.window_length, config.horizon)?);
        }
    }
    if let Some(dup) = out.iter().enumerate().find(|(i, r)| out[..*i].iter().any(|o| o.id == r.id)) {
        return Err(Error::InvalidConfig(format!("duplicate representation {}", dup.1.id)));
    }
    Ok(out)
}

/// Per-variable min-max scaling to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMaxScaler<T> {
    pub mins: Vec<T>,
    /// `max - min`, replaced by 1 for constant variables.
    pub ranges: Vec<T>,
    pub target_index: usize,
}

impl<T: Scalar> MinMaxScaler<T> {
    pub fn fit(series: &[Vec<T>], end: usize, target_index: usize) -> Self {
        let (mins, ranges) = series
            .iter()
            .map(|s| {
                let (lo, hi) = min_max(&s[..end.min(s.len())]).unwrap_or((T::zero(), T::one()));
                let range = hi - lo;
                (lo, if range > T::zero() { range } else { T::one() })
            })
            .unzip();
        Self { mins, ranges, target_index }
    }

    pub fn transform_window(&self, window: &SlidingWindow<T>) -> SlidingWindow<T> {
        let mut input = window.input.clone();
        for (j, mut col) in input.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|x| (x - self.mins[j]) / self.ranges[j]);
        }
        SlidingWindow {
            index: window.index,
            start: window.start,
            input,
            target: window.target.iter().map(|&y| self.scale_target(y)).collect(),
        }
    }

    pub fn scale_target(&self, y: T) -> T {
        (y - self.mins[self.target_index]) / self.ranges[self.target_index]
    }

    pub fn unscale_target(&self, y: T) -> T {
        y * self.ranges[self.target_index] + self.mins[self.target_index]
    }

    /// Multiplier that converts a normalized target difference into data units.
    pub fn target_range(&self) -> T {
        self.ranges[self.target_index]
    }
}
