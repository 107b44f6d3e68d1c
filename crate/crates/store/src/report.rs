//! Static export of the profile table.

use std::str::FromStr;

use crate::error::{Result, StoreError};
use crate::store::{to_json, RunStore};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(StoreError::InvalidQuery(format!("report format must be csv or json, got {other:?}"))),
        }
    }
}

/// One row per completed representation, in sweep order.
pub fn profile_report(store: &RunStore, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => Ok(to_json(&store.profile)),
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            for row in &store.profile {
                writer
                    .serialize(row)
                    .map_err(|e| StoreError::Export(e.to_string()))?;
            }
            writer
                .into_inner()
                .map_err(|e| StoreError::Export(e.to_string()))
        }
    }
}
