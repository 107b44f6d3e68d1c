//! CSV ingestion into [`TimeSeriesDataset`].
//!
//! The first column holds timestamps (integer indices or ISO-8601 dates),
//! every remaining column is one numeric variable. Rows are sorted by
//! timestamp; empty or non-numeric cells are rejected rather than repaired.

use std::fmt;
use std::io::Read;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A time point: either a bare integer index or a calendar date-time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Timestamp {
    Index(i64),
    DateTime(NaiveDateTime),
}

impl Timestamp {
    /// Parses an integer or one of the common ISO-8601 layouts
    /// (`YYYY-MM`, `YYYY-MM-DD`, `YYYY-MM-DD[T ]HH:MM[:SS]`).
    pub fn parse(raw: &str) -> Option<Self> {
        let raw = raw.trim();
        if let Ok(i) = raw.parse::<i64>() {
            return Some(Timestamp::Index(i));
        }
        for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M", "%Y-%m-%d %H:%M"] {
            if let Ok(dt) = NaiveDateTime::parse_from_str(raw, fmt) {
                return Some(Timestamp::DateTime(dt));
            }
        }
        if let Ok(d) = NaiveDate::parse_from_str(raw, "%Y-%m-%d") {
            return d.and_hms_opt(0, 0, 0).map(Timestamp::DateTime);
        }
        NaiveDate::parse_from_str(&format!("{raw}-01"), "%Y-%m-%d")
            .ok()
            .and_then(|d| d.and_hms_opt(0, 0, 0))
            .map(Timestamp::DateTime)
    }

    fn seconds(&self) -> i64 {
        match self {
            Timestamp::Index(i) => *i,
            Timestamp::DateTime(dt) => dt.and_utc().timestamp(),
        }
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Timestamp::Index(i) => write!(f, "{i}"),
            Timestamp::DateTime(dt) => write!(f, "{}", dt.format("%Y-%m-%dT%H:%M:%S")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableSeries<T> {
    pub id: String,
    pub display_name: String,
    pub values: Vec<T>,
    pub unit: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeriesDataset<T> {
    pub name: String,
    pub timestamps: Vec<Timestamp>,
    pub variables: Vec<VariableSeries<T>>,
    pub target_id: String,
    pub frequency: String,
}

impl<T: Scalar> TimeSeriesDataset<T> {
    /// Builds a dataset and checks its invariants.
    pub fn new(
        name: impl Into<String>,
        timestamps: Vec<Timestamp>,
        variables: Vec<VariableSeries<T>>,
        target_id: impl Into<String>,
    ) -> Result<Self> {
        let target_id = target_id.into();
        let len = timestamps.len();
        if len < 2 {
            return Err(Error::TooFewRows { required: 2, found: len });
        }
        if let Some(pair) = timestamps.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::DuplicateTimestamp(pair[1].to_string()));
        }
        for v in &variables {
            if v.values.len() != len {
                return Err(Error::RaggedVariable {
                    id: v.id.clone(),
                    expected: len,
                    found: v.values.len(),
                });
            }
            if v.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFiniteValue(v.id.clone()));
            }
        }
        if !variables.iter().any(|v| v.id == target_id) {
            return Err(Error::UnknownTarget(target_id));
        }
        let frequency = infer_frequency(&timestamps);
        Ok(Self {
            name: name.into(),
            timestamps,
            variables,
            target_id,
            frequency,
        })
    }

    /// Number of time points `T`.
    pub fn len(&self) -> usize {
        self.timestamps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.timestamps.is_empty()
    }

    /// Number of variables `k`.
    pub fn variable_count(&self) -> usize {
        self.variables.len()
    }

    pub fn target_index(&self) -> usize {
        self.variables
            .iter()
            .position(|v| v.id == self.target_id)
            .expect("target validated at construction")
    }

    pub fn target(&self) -> &VariableSeries<T> {
        &self.variables[self.target_index()]
    }

    pub fn variable(&self, id: &str) -> Option<&VariableSeries<T>> {
        self.variables.iter().find(|v| v.id == id)
    }

    /// Returns the last `n` rows (or all rows if fewer).
    pub fn tail(&self, n: usize) -> Result<Self> {
        let start = self.len().saturating_sub(n);
        let variables = self
            .variables
            .iter()
            .map(|v| VariableSeries {
                values: v.values[start..].to_vec(),
                ..v.clone()
            })
            .collect();
        Self::new(self.name.clone(), self.timestamps[start..].to_vec(), variables, self.target_id.clone())
    }
}

/// Loads a dataset from a CSV file; the dataset is named after the file stem.
pub fn load_dataset<T: Scalar>(path: impl AsRef<Path>, target: &str) -> Result<TimeSeriesDataset<T>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_dataset(file, &name, target)
}

/// Parses CSV text from any reader. Row and column numbers in errors are
/// 1-based data rows and 0-based columns (column 0 is the timestamp).
pub fn parse_dataset<T: Scalar, R: Read>(reader: R, name: &str, target: &str) -> Result<TimeSeriesDataset<T>> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers = csv.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();
    if headers.len() < 2 {
        return Err(Error::Csv("need a timestamp column and at least one variable".into()));
    }
    let columns: Vec<(String, String, Option<String>)> = headers.iter().skip(1).map(split_header).collect();
    if !columns.iter().any(|(id, _, _)| id == target) {
        return Err(Error::UnknownTarget(target.to_string()));
    }

    let mut rows: Vec<(Timestamp, Vec<T>)> = Vec::new();
    for (i, record) in csv.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        let raw_ts = record.get(0).unwrap_or("");
        let ts = Timestamp::parse(raw_ts).ok_or_else(|| Error::InvalidTimestamp {
            row,
            value: raw_ts.to_string(),
        })?;
        let mut values = Vec::with_capacity(columns.len());
        for col in 1..=columns.len() {
            let cell = record.get(col).unwrap_or("");
            let v = cell
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .and_then(T::from_f64)
                .ok_or(Error::MissingValue { row, col })?;
            values.push(v);
        }
        rows.push((ts, values));
    }
    if let Some(first) = rows.first() {
        let date_kind = matches!(first.0, Timestamp::DateTime(_));
        if let Some((i, (ts, _))) = rows
            .iter()
            .enumerate()
            .find(|(_, (ts, _))| matches!(ts, Timestamp::DateTime(_)) != date_kind)
        {
            return Err(Error::InvalidTimestamp { row: i + 1, value: ts.to_string() });
        }
    }

    rows.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(pair) = rows.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::DuplicateTimestamp(pair[0].0.to_string()));
    }

    let timestamps = rows.iter().map(|(ts, _)| *ts).collect();
    let variables = columns
        .into_iter()
        .enumerate()
        .map(|(j, (id, display_name, unit))| VariableSeries {
            id,
            display_name,
            values: rows.iter().map(|(_, v)| v[j]).collect(),
            unit,
        })
        .collect();
    TimeSeriesDataset::new(name, timestamps, variables, target)
}

/// `"temp [degC]"` splits into id `temp` and unit `degC`.
fn split_header(header: &str) -> (String, String, Option<String>) {
    let display = header.trim().to_string();
    if let (Some(open), true) = (display.rfind('['), display.ends_with(']')) {
        let id = display[..open].trim().to_string();
        let unit = display[open + 1..display.len() - 1].trim().to_string();
        if !id.is_empty() {
            return (id, display, Some(unit).filter(|u| !u.is_empty()));
        }
    }
    (display.clone(), display, None)
}

fn infer_frequency(timestamps: &[Timestamp]) -> String {
    let mut gaps: Vec<i64> = timestamps.windows(2).map(|w| w[1].seconds() - w[0].seconds()).collect();
    if gaps.is_empty() {
        return "unknown".into();
    }
    gaps.sort_unstable();
    let gap = gaps[gaps.len() / 2];
    if matches!(timestamps[0], Timestamp::Index(_)) {
        return if gap == 1 { "step".into() } else { format!("every {gap} steps") };
    }
    const DAY: i64 = 86_400;
    match gap {
        1 => "secondly".into(),
        60 => "minutely".into(),
        3_600 => "hourly".into(),
        DAY => "daily".into(),
        g if g == 7 * DAY => "weekly".into(),
        g if (28 * DAY..=31 * DAY).contains(&g) => "monthly".into(),
        g if (89 * DAY..=92 * DAY).contains(&g) => "quarterly".into(),
        g if (365 * DAY..=366 * DAY).contains(&g) => "yearly".into(),
        g => format!("every {g}s"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, target: &str) -> Result<TimeSeriesDataset<f64>> {
        parse_dataset(text.as_bytes(), "t", target)
    }

    #[test]
    fn monthly_univariate() {
        let ds = parse("date,sunspots\n1818-01,62.0\n1818-02,70.1\n1818-03,80.3\n", "sunspots").unwrap();
        assert_eq!(ds.variable_count(), 1);
        assert_eq!(ds.len(), 3);
        assert_eq!(ds.frequency, "monthly");
    }

    #[test]
    fn multivariate_keeps_column_order() {
        let text = "time,PM2.5,temp,rh,psfc,wnd_dir,wnd_spd\n\
                    2014-01-01 00:00,10,1,2,3,4,5\n\
                    2014-01-01 01:00,11,1,2,3,4,5\n";
        let ds = parse(text, "PM2.5").unwrap();
        assert_eq!(ds.variable_count(), 6);
        assert_eq!(ds.target_id, "PM2.5");
        assert_eq!(ds.frequency, "hourly");
        let ids: Vec<_> = ds.variables.iter().map(|v| v.id.as_str()).collect();
        assert_eq!(ids, ["PM2.5", "temp", "rh", "psfc", "wnd_dir", "wnd_spd"]);
    }

    #[test]
    fn blank_cell_is_rejected() {
        let err = parse("t,a,b\n1,1.0,2.0\n2,,3.0\n", "a").unwrap_err();
        assert_eq!(err, Error::MissingValue { row: 2, col: 1 });
        let err = parse("t,a,b\n1,1.0,x\n2,1.0,3.0\n", "a").unwrap_err();
        assert_eq!(err, Error::MissingValue { row: 1, col: 2 });
    }

    #[test]
    fn rows_are_sorted_and_duplicates_rejected() {
        let ds = parse("t,a\n3,30\n1,10\n2,20\n", "a").unwrap();
        assert_eq!(ds.variables[0].values, [10.0, 20.0, 30.0]);
        assert!(matches!(parse("t,a\n1,1\n1,2\n", "a"), Err(Error::DuplicateTimestamp(_))));
    }

    #[test]
    fn unknown_target() {
        assert_eq!(parse("t,a\n1,1\n2,2\n", "b").unwrap_err(), Error::UnknownTarget("b".into()));
    }

    #[test]
    fn unit_suffix_is_split() {
        let ds = parse("t,temp [degC]\n1,1\n2,2\n", "temp").unwrap();
        assert_eq!(ds.variables[0].unit.as_deref(), Some("degC"));
        assert_eq!(ds.variables[0].display_name, "temp [degC]");
    }

    #[test]
    fn tail_keeps_latest_rows() {
        let ds = parse("t,a\n1,1\n2,2\n3,3\n4,4\n", "a").unwrap();
        let tail = ds.tail(2).unwrap();
        assert_eq!(tail.variables[0].values, [3.0, 4.0]);
        assert_eq!(tail.timestamps[0], Timestamp::Index(3));
    }
}
