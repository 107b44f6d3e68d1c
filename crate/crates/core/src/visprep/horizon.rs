use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{min_max, Scalar};

pub const HORIZON_BANDS: usize = 4;

/// Band-folded encoding of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonBands<T> {
    pub variable_id: String,
    pub band_count: usize,
    pub min: T,
    /// `(max - min) / 4`.
    pub band_height: T,
    /// Per time step: band index `0..4` and fill fraction in `[0, 1]`.
    pub layers: Vec<(usize, T)>,
}

impl<T: Scalar> HorizonBands<T> {
    /// Inverse of the band mapping.
    pub fn value_at(&self, i: usize) -> T {
        let (band, fill) = self.layers[i];
        self.min + (T::from_count(band) + fill) * self.band_height
    }
}

pub fn horizon_bands<T: Scalar>(variable_id: &str, values: &[T]) -> Result<HorizonBands<T>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    let (lo, hi) = min_max(values).ok_or(Error::EmptyInput)?;
    if !(hi > lo) {
        return Err(Error::ConstantSeries);
    }
    let band_height = (hi - lo) / T::from_count(HORIZON_BANDS);
    let top = HORIZON_BANDS - 1;
    let layers = values
        .iter()
        .map(|&v| {
            let r = (v - lo) / band_height;
            let band = r.floor().to_usize().unwrap_or(0).min(top);
            (band, r - T::from_count(band))
        })
        .collect();
    Ok(HorizonBands {
        variable_id: variable_id.to_string(),
        band_count: HORIZON_BANDS,
        min: lo,
        band_height,
        layers,
    })
}
