use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{min_max, Scalar};

pub const DEFAULT_MOSAIC_GRID: usize = 5;

/// Quantity averaged within each cell.
#[derive(Debug, Clone, Copy)]
pub enum MosaicColor<'a, T> {
    /// Mean of a third variable (e.g. the forecast target).
    Values(&'a [T]),
    /// Share of all points falling in the cell.
    Density,
}

/// Uniform `g x g` partition of two variables. Indexing is `[x_bin][y_bin]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MosaicGrid<T> {
    pub x_variable: String,
    pub y_variable: String,
    pub grid: usize,
    pub x_edges: Vec<T>,
    pub y_edges: Vec<T>,
    /// Empty cells carry no value.
    pub cell_values: Vec<Vec<Option<T>>>,
    pub cell_counts: Vec<Vec<usize>>,
}

fn edges<T: Scalar>(lo: T, hi: T, g: usize) -> Vec<T> {
    let w = (hi - lo) / T::from_count(g);
    (0..=g).map(|i| if i == g { hi } else { lo + w * T::from_count(i) }).collect()
}

fn bin<T: Scalar>(v: T, lo: T, hi: T, g: usize) -> usize {
    if !(hi > lo) {
        return 0;
    }
    let b = ((v - lo) / (hi - lo) * T::from_count(g)).floor().to_usize().unwrap_or(0);
    b.min(g - 1)
}

/// Bins paired observations on a uniform grid spanning each axis'
/// `[min, max]`, averaging the coloring quantity per cell.
pub fn mosaic_matrix<T: Scalar>(
    x_variable: &str,
    x: &[T],
    y_variable: &str,
    y: &[T],
    color: MosaicColor<'_, T>,
    g: usize,
) -> Result<MosaicGrid<T>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    if let MosaicColor::Values(c) = color {
        if c.len() != x.len() {
            return Err(Error::LengthMismatch { left: x.len(), right: c.len() });
        }
    }
    if g < 2 {
        return Err(Error::InvalidConfig("mosaic grid needs at least 2 partitions".into()));
    }
    let (x_lo, x_hi) = min_max(x).ok_or(Error::EmptyInput)?;
    let (y_lo, y_hi) = min_max(y).ok_or(Error::EmptyInput)?;
    let mut counts = vec![vec![0usize; g]; g];
    let mut sums = vec![vec![T::zero(); g]; g];
    for i in 0..x.len() {
        let (bx, by) = (bin(x[i], x_lo, x_hi, g), bin(y[i], y_lo, y_hi, g));
        counts[bx][by] += 1;
        if let MosaicColor::Values(c) = color {
            sums[bx][by] += c[i];
        }
    }
    let total = T::from_count(x.len());
    let cell_values = counts
        .iter()
        .zip(&sums)
        .map(|(cr, sr)| {
            cr.iter()
                .zip(sr)
                .map(|(&n, &s)| {
                    (n > 0).then(|| match color {
                        MosaicColor::Values(_) => s / T::from_count(n),
                        MosaicColor::Density => T::from_count(n) / total,
                    })
                })
                .collect()
        })
        .collect();
    Ok(MosaicGrid {
        x_variable: x_variable.to_string(),
        y_variable: y_variable.to_string(),
        grid: g,
        x_edges: edges(x_lo, x_hi, g),
        y_edges: edges(y_lo, y_hi, g),
        cell_values,
        cell_counts: counts,
    })
}
