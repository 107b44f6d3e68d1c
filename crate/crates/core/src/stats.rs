//! Stationarity, autocorrelation, correlation and error metrics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{mean, min_max, Scalar};

/// MacKinnon asymptotic critical values for the constant-only ADF regression.
pub const ADF_CRITICAL_1PCT: f64 = -3.43;
pub const ADF_CRITICAL_5PCT: f64 = -2.86;
pub const ADF_CRITICAL_10PCT: f64 = -2.57;

/// Minimum series length accepted by [`adf_test`].
pub const ADF_MIN_LEN: usize = 20;

/// Largest lag scanned by [`acf_peak`].
pub const ACF_MAX_LAG: usize = 40;

fn check_non_constant<T: Scalar>(values: &[T]) -> Result<()> {
    match min_max(values) {
        Some((lo, hi)) if lo < hi => Ok(()),
        _ => Err(Error::ConstantSeries),
    }
}

/// Sample autocorrelation at `lag`, normalized by the lag-0 sum of squares.
///
/// The numerator runs over `t = lag..n` only; the full-series mean is used
/// in both sums.
pub fn acf<T: Scalar>(values: &[T], lag: usize) -> Result<T> {
    let n = values.len();
    if n < 2 || lag >= n {
        return Err(Error::LagOutOfRange { lag, len: n });
    }
    check_non_constant(values)?;
    let mu = mean(values);
    let denom: T = values.iter().map(|&x| (x - mu) * (x - mu)).sum();
    if denom <= T::zero() {
        return Err(Error::ConstantSeries);
    }
    let num: T = values[lag..]
        .iter()
        .zip(values)
        .map(|(&a, &b)| (a - mu) * (b - mu))
        .sum();
    Ok(num / denom)
}

/// Largest autocorrelation over lags `1..=min(40, n / 4)`, with its lag.
/// This is the single scalar summarizing periodicity strength.
pub fn acf_peak<T: Scalar>(values: &[T]) -> Result<(usize, T)> {
    let max_lag = ACF_MAX_LAG.min(values.len() / 4).max(1);
    let mut best: Option<(usize, T)> = None;
    for lag in 1..=max_lag {
        let v = acf(values, lag)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((lag, v));
        }
    }
    best.ok_or(Error::EmptyInput)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdfResult {
    /// t-ratio of the lagged-level coefficient.
    pub statistic: f64,
    pub lags_used: usize,
    /// `statistic < critical_value_5pct`.
    pub stationary: bool,
    pub critical_value_5pct: f64,
}

/// Schwert's rule `floor(12 (n / 100)^(1/4))`.
pub fn adf_lag_order(n: usize) -> usize {
    (12.0 * (n as f64 / 100.0).powf(0.25)).floor() as usize
}

/// Augmented Dickey-Fuller test with a constant term.
///
/// Regresses `dx_t` on `[1, x_{t-1}, dx_{t-1}, ..., dx_{t-p}]` by least
/// squares with `p` from [`adf_lag_order`].
pub fn adf_test<T: Scalar>(values: &[T]) -> Result<AdfResult> {
    let n = values.len();
    if n < ADF_MIN_LEN {
        return Err(Error::SeriesTooShort { len: n, required: ADF_MIN_LEN });
    }
    let p = adf_lag_order(n);
    let diff: Vec<T> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let cols = p + 2;
    let nobs = diff.len().saturating_sub(p);
    if nobs <= cols {
        return Err(Error::SeriesTooShort { len: n, required: n + cols + 1 - nobs });
    }

    let mut design = Vec::with_capacity(nobs * cols);
    let mut response = Vec::with_capacity(nobs);
    for t in p..diff.len() {
        design.push(T::one());
        design.push(values[t]);
        design.extend((1..=p).map(|j| diff[t - j]));
        response.push(diff[t]);
    }
    let fit = ols(&design, &response, cols)?;
    let statistic = fit.coefficients[1] / fit.std_errors[1];
    if !statistic.is_finite() {
        return Err(Error::SingularRegression);
    }
    let statistic = statistic.as_f64();
    Ok(AdfResult {
        statistic,
        lags_used: p,
        stationary: statistic < ADF_CRITICAL_5PCT,
        critical_value_5pct: ADF_CRITICAL_5PCT,
    })
}

struct OlsFit<T> {
    coefficients: Vec<T>,
    std_errors: Vec<T>,
}

/// Least squares through the normal equations; `design` is row-major `rows x cols`.
fn ols<T: Scalar>(design: &[T], response: &[T], cols: usize) -> Result<OlsFit<T>> {
    let rows = response.len();
    let mut xtx = vec![T::zero(); cols * cols];
    let mut xty = vec![T::zero(); cols];
    for (r, &y) in response.iter().enumerate() {
        let row = &design[r * cols..(r + 1) * cols];
        for i in 0..cols {
            xty[i] += row[i] * y;
            for j in 0..cols {
                xtx[i * cols + j] += row[i] * row[j];
            }
        }
    }
    let inv = invert(xtx, cols)?;
    let coefficients: Vec<T> = (0..cols)
        .map(|i| (0..cols).map(|j| inv[i * cols + j] * xty[j]).sum())
        .collect();
    let ssr: T = response
        .iter()
        .enumerate()
        .map(|(r, &y)| {
            let fitted: T = design[r * cols..(r + 1) * cols]
                .iter()
                .zip(&coefficients)
                .map(|(&x, &b)| x * b)
                .sum();
            (y - fitted) * (y - fitted)
        })
        .sum();
    if ssr <= T::zero() {
        return Err(Error::SingularRegression);
    }
    let sigma2 = ssr / T::from_count(rows - cols);
    let std_errors = (0..cols).map(|i| (sigma2 * inv[i * cols + i]).sqrt()).collect();
    Ok(OlsFit { coefficients, std_errors })
}

/// Gauss-Jordan inverse with partial pivoting; near-zero pivots are singular.
fn invert<T: Scalar>(mut a: Vec<T>, n: usize) -> Result<Vec<T>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let tol = scale * T::epsilon() * T::lit(1e3);
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().partial_cmp(&a[y * n + col].abs()).unwrap_or(std::cmp::Ordering::Equal))
            .unwrap_or(col);
        if !(a[pivot * n + col].abs() > tol) {
            return Err(Error::SingularRegression);
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
                inv.swap(pivot * n + j, col * n + j);
            }
        }
        let d = a[col * n + col];
        for j in 0..n {
            a[col * n + j] /= d;
            inv[col * n + j] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let f = a[r * n + col];
            if f == T::zero() {
                continue;
            }
            for j in 0..n {
                let (av, iv) = (a[col * n + j], inv[col * n + j]);
                a[r * n + j] -= f * av;
                inv[r * n + j] -= f * iv;
            }
        }
    }
    Ok(inv)
}

/// Pearson correlation coefficient, clamped to `[-1, 1]`.
///
/// Evaluated on mean-centered sums, which is algebraically the same as the
/// raw-moment form `(n Sxy - Sx Sy) / sqrt(...)` but does not cancel
/// catastrophically for large offsets.
pub fn pearson<T: Scalar>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::ZeroVariance);
    }
    if check_non_constant(x).is_err() || check_non_constant(y).is_err() {
        return Err(Error::ZeroVariance);
    }
    let (mx, my) = (mean(x), mean(y));
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    let denom = (sxx * syy).sqrt();
    if !(denom > T::zero()) {
        return Err(Error::ZeroVariance);
    }
    Ok((sxy / denom).max(-T::one()).min(T::one()))
}

/// Root-mean-square difference.
pub fn rmse<T: Scalar>(predicted: &[T], actual: &[T]) -> Result<T> {
    if predicted.len() != actual.len() {
        return Err(Error::LengthMismatch { left: predicted.len(), right: actual.len() });
    }
    if predicted.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mse: T = predicted
        .iter()
        .zip(actual)
        .map(|(&p, &a)| (p - a) * (p - a))
        .sum::<T>()
        / T::from_count(predicted.len());
    Ok(mse.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn acf_lag_zero_is_one() {
        let x = [1.0, 3.0, 2.0, 5.0, 4.0];
        assert_abs_diff_eq!(acf(&x, 0).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn acf_alternating() {
        let x: Vec<f64> = (0..100).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect();
        // 99 products of -1 over 100 squares of 1 around mean 0.
        assert_abs_diff_eq!(acf(&x, 1).unwrap(), -0.99, epsilon = 1e-12);
    }

    #[test]
    fn acf_errors() {
        assert_eq!(acf(&[2.0, 2.0, 2.0], 1).unwrap_err(), Error::ConstantSeries);
        assert_eq!(acf(&[1.0, 2.0], 2).unwrap_err(), Error::LagOutOfRange { lag: 2, len: 2 });
    }

    #[test]
    fn acf_peak_finds_period() {
        let x: Vec<f64> = (0..260).map(|t| (2.0 * std::f64::consts::PI * t as f64 / 13.0).sin()).collect();
        assert_eq!(acf_peak(&x).unwrap().0, 13);
    }

    #[test]
    fn pearson_cases() {
        let x = [1.0, 2.0, 3.0];
        assert_abs_diff_eq!(pearson(&x, &x).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson(&x, &neg).unwrap(), -1.0, epsilon = 1e-15);
        assert_eq!(pearson(&x, &[1.0, 2.0]).unwrap_err(), Error::LengthMismatch { left: 3, right: 2 });
        assert_eq!(pearson(&x, &[4.0, 4.0, 4.0]).unwrap_err(), Error::ZeroVariance);
    }

    #[test]
    fn pearson_matches_raw_moment_formula() {
        let (x, y) = ([1.0f64, 2.0, 3.0], [1.0f64, 2.0, 4.0]);
        let n = 3.0;
        let (sx, sy): (f64, f64) = (x.iter().sum(), y.iter().sum());
        let sxy: f64 = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let oracle = (n * sxy - sx * sy) / ((n * sxx - sx * sx) * (n * syy - sy * sy)).sqrt();
        assert_abs_diff_eq!(pearson(&x, &y).unwrap(), oracle, epsilon = 1e-12);
    }

    #[test]
    fn rmse_cases() {
        let a = [1.0, -2.0, 3.5];
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        let shifted: Vec<f64> = a.iter().map(|v| v + 0.75).collect();
        assert_abs_diff_eq!(rmse(&shifted, &a).unwrap(), 0.75, epsilon = 1e-15);
        assert_abs_diff_eq!(rmse(&[0.0, 0.0], &[3.0, 4.0]).unwrap(), 5.0 / 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(rmse(&a, &a[..2]).unwrap_err(), Error::LengthMismatch { left: 3, right: 2 });
    }

    #[test]
    fn adf_constant_is_singular() {
        assert_eq!(adf_test(&[4.0; 100]).unwrap_err(), Error::SingularRegression);
    }

    #[test]
    fn adf_short_series() {
        assert!(matches!(adf_test(&[1.0; 10]), Err(Error::SeriesTooShort { .. })));
    }

    #[test]
    fn adf_lag_rule() {
        assert_eq!(adf_lag_order(100), 12);
        assert_eq!(adf_lag_order(500), 17);
    }
}
