//! Flat little-endian `f64` arrays with JSON shape sidecars.
//!
//! `name.bin` holds `product(shape)` values in row-major order; `name.json`
//! holds `{"dtype": "<f8", "shape": [...], ...extra}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, StoreError};

pub const DTYPE: &str = "<f8";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayHeader {
    pub dtype: String,
    pub shape: Vec<usize>,
}

impl ArrayHeader {
    pub fn new(shape: Vec<usize>) -> Self {
        Self { dtype: DTYPE.to_string(), shape }
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn encode(values: &[f64]) -> Vec<u8> {
    values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<Vec<f64>> {
    if bytes.len() % 8 != 0 {
        return Err(StoreError::CorruptStore(format!("{} is not a whole number of f64 values", path.display())));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// Flattens equal-length rows.
pub fn flatten(rows: &[Vec<f64>]) -> (ArrayHeader, Vec<f64>) {
    let cols = rows.first().map_or(0, Vec::len);
    (ArrayHeader::new(vec![rows.len(), cols]), rows.concat())
}

/// Splits a flat 2-D array back into rows.
pub fn unflatten(header: &ArrayHeader, values: Vec<f64>, path: &Path) -> Result<Vec<Vec<f64>>> {
    if header.dtype != DTYPE || header.shape.len() != 2 || header.len() != values.len() {
        return Err(StoreError::CorruptStore(format!(
            "{}: header {:?} does not match {} values",
            path.display(),
            header,
            values.len()
        )));
    }
    let cols = header.shape[1];
    if cols == 0 {
        return Ok(vec![Vec::new(); header.shape[0]]);
    }
    Ok(values.chunks_exact(cols).map(<[f64]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let values = [0.0, -0.0, 1.5, f64::MIN_POSITIVE, 1e308, -3.141592653589793];
        let bytes = encode(&values);
        assert_eq!(bytes.len(), 48);
        assert_eq!(&bytes[16..24], &1.5f64.to_le_bytes());
        let back = decode(&bytes, Path::new("x")).unwrap();
        assert!(back.iter().zip(&values).all(|(a, b)| a.to_bits() == b.to_bits()));
    }

    #[test]
    fn rows_round_trip() {
        let rows = vec![vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]];
        let (header, flat) = flatten(&rows);
        assert_eq!(header.shape, [2, 3]);
        assert_eq!(unflatten(&header, flat, Path::new("x")).unwrap(), rows);
    }

    #[test]
    fn rejects_truncated_data() {
        assert!(decode(&[0u8; 7], Path::new("x")).is_err());
        let header = ArrayHeader::new(vec![2, 2]);
        assert!(unflatten(&header, vec![1.0; 3], Path::new("x")).is_err());
    }
}
