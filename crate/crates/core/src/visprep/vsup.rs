use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{min_max, Scalar};

/// Value ranges at full certainty.
pub const VSUP_VALUE_BINS: usize = 8;
/// Uncertainty (RMSE) levels.
pub const VSUP_LEVELS: usize = 4;
/// Distinguishable value bins per level, lowest RMSE first.
pub const VSUP_TREE: [usize; VSUP_LEVELS] = [8, 4, 2, 1];
/// Bins of the single-metric sequential mode.
pub const SEQUENTIAL_BINS: usize = 8;

/// Domain of the first (explanation) metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric1Domain {
    /// Correlations: edges fixed over `[-1, 1]`.
    Correlation,
    /// Edges spread over the observed `[min, max]`.
    Observed,
}

/// Wedge-shaped value-suppressing quantizer.
///
/// Cell ids: level 0 uses 0..8, level 1 8..12, level 2 12..14, level 3 is 14.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VsupScheme<T> {
    pub dim1_edges: Vec<T>,
    pub dim2_edges: Vec<T>,
    pub tree: [usize; VSUP_LEVELS],
    /// Set when a dimension had no spread and fell back to a single bin.
    pub dim1_degenerate: bool,
    pub dim2_degenerate: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VsupCell {
    pub level: usize,
    pub bin: usize,
}

impl VsupCell {
    pub fn id(&self) -> usize {
        VSUP_TREE[..self.level].iter().sum::<usize>() + self.bin
    }
}

fn equal_edges<T: Scalar>(lo: T, hi: T, bins: usize) -> Vec<T> {
    let width = (hi - lo) / T::from_count(bins);
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + width * T::from_count(i) })
        .collect()
}

/// Unit-width fallback placing the constant value in the first bin.
fn degenerate_edges<T: Scalar>(value: T, bins: usize) -> Vec<T> {
    let width = T::one() / T::from_count(bins);
    let lo = value - width * T::lit(0.5);
    (0..=bins).map(|i| lo + width * T::from_count(i)).collect()
}

/// Index of the bin holding `v`; values outside the edges clamp to the ends.
fn bin_of<T: Scalar>(v: T, edges: &[T]) -> usize {
    let bins = edges.len() - 1;
    edges[1..bins].iter().take_while(|&&e| e <= v).count()
}

fn check_values<T: Scalar>(values: &[T]) -> Result<(T, T)> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    min_max(values).ok_or(Error::EmptyInput)
}

/// Builds the quantizer: eight equal ranges for the explanation metric and
/// four equal ranges over `[0, max RMSE]`.
///
/// A dimension whose values are all equal gets a single-bin fallback and its
/// degenerate flag set (a warning is logged).
pub fn build_vsup<T: Scalar>(metric1: &[T], metric2: &[T], domain: Metric1Domain) -> Result<VsupScheme<T>> {
    let (lo1, hi1) = check_values(metric1)?;
    let (lo2, hi2) = check_values(metric2)?;
    let (dim1_edges, dim1_degenerate) = match domain {
        Metric1Domain::Correlation => (equal_edges(-T::one(), T::one(), VSUP_VALUE_BINS), false),
        Metric1Domain::Observed if lo1 < hi1 => (equal_edges(lo1, hi1, VSUP_VALUE_BINS), false),
        Metric1Domain::Observed => (degenerate_edges(lo1, VSUP_VALUE_BINS), true),
    };
    let (dim2_edges, dim2_degenerate) = if lo2 < hi2 && hi2 > T::zero() {
        (equal_edges(T::zero(), hi2, VSUP_LEVELS), false)
    } else {
        (degenerate_edges(hi2, VSUP_LEVELS), true)
    };
    if dim1_degenerate || dim2_degenerate {
        log::warn!("degenerate VSUP range (metric1: {dim1_degenerate}, metric2: {dim2_degenerate}); using a single bin");
    }
    Ok(VsupScheme { dim1_edges, dim2_edges, tree: VSUP_TREE, dim1_degenerate, dim2_degenerate })
}

/// Maps a (value, uncertainty) pair to its wedge cell. The RMSE level `l`
/// coarsens the eight value bins by `2^l`.
pub fn vsup_quantize<T: Scalar>(v1: T, v2: T, scheme: &VsupScheme<T>) -> VsupCell {
    let level = bin_of(v2, &scheme.dim2_edges);
    let fine = bin_of(v1, &scheme.dim1_edges);
    VsupCell { level, bin: fine >> level }
}

/// Single-metric mode: one of [`SEQUENTIAL_BINS`] equal ranges over `edges`.
pub fn quantize_sequential<T: Scalar>(v: T, lo: T, hi: T) -> usize {
    if !(hi > lo) {
        return 0;
    }
    bin_of(v, &equal_edges(lo, hi, SEQUENTIAL_BINS))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn correlation_edges_are_fixed() {
        let s = build_vsup(&[0.1, 0.2], &[1.0, 8.0], Metric1Domain::Correlation).unwrap();
        let expected: Vec<f64> = (0..=8).map(|i| -1.0 + 0.25 * i as f64).collect();
        assert_eq!(s.dim1_edges, expected);
        assert_eq!(s.dim2_edges, [0.0, 2.0, 4.0, 6.0, 8.0]);
    }

    #[test]
    fn degenerate_rmse_falls_back() {
        let s = build_vsup(&[0.1, 0.2], &[3.0, 3.0], Metric1Domain::Correlation).unwrap();
        assert!(s.dim2_degenerate);
        assert_eq!(vsup_quantize(0.9, 3.0, &s).level, 0);
        let s = build_vsup(&[0.5, 0.5], &[1.0, 2.0], Metric1Domain::Observed).unwrap();
        assert!(s.dim1_degenerate);
        assert_eq!(vsup_quantize(0.5, 0.1, &s).bin, 0);
    }

    #[test]
    fn rejects_bad_input() {
        assert_eq!(build_vsup::<f64>(&[], &[1.0], Metric1Domain::Observed).unwrap_err(), Error::EmptyInput);
        assert_eq!(build_vsup(&[f64::NAN], &[1.0], Metric1Domain::Observed).unwrap_err(), Error::NonFiniteInput);
    }

    #[test]
    fn wedge_cells() {
        let s = build_vsup(&[-1.0, 1.0], &[0.0, 8.0], Metric1Domain::Correlation).unwrap();
        let level0: BTreeSet<_> = (0..80).map(|i| vsup_quantize(-1.0 + i as f64 / 40.0, 0.5, &s).id()).collect();
        assert_eq!(level0.len(), 8);
        let level3: BTreeSet<_> = (0..80).map(|i| vsup_quantize(-1.0 + i as f64 / 40.0, 7.5, &s)).collect();
        assert_eq!(level3.len(), 1);
        // bin 5 of 8 at level 1 is coarse bin 2 of 4
        let c = vsup_quantize(0.3, 2.5, &s);
        assert_eq!((c.level, c.bin), (1, 2));
        assert_eq!(c.id(), 10);
        // clamping
        assert_eq!(vsup_quantize(-7.0, -1.0, &s), VsupCell { level: 0, bin: 0 });
        assert_eq!(vsup_quantize(7.0, 100.0, &s), VsupCell { level: 3, bin: 0 });
        assert_eq!(vsup_quantize(1.0, 1.9, &s), VsupCell { level: 0, bin: 7 });
    }

    #[test]
    fn sequential_bins() {
        assert_eq!(quantize_sequential(0.0, 0.0, 8.0), 0);
        assert_eq!(quantize_sequential(8.0, 0.0, 8.0), 7);
        assert_eq!(quantize_sequential(3.5, 0.0, 8.0), 3);
        assert_eq!(quantize_sequential(1.0, 1.0, 1.0), 0);
    }
}
