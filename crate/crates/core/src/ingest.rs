//! CSV ingestion and serialization.
//!
//! Input files are RFC-4180 CSV with a header row. The timestamp column
//! accepts ISO-8601 (with or without a UTC offset) or epoch seconds; the
//! sampling interval is inferred from the rows, and rows separated by more
//! than one interval leave explicit gaps on the sample grid, to be handled
//! by [`GappedSeries::fill_gaps`].

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use chrono::{DateTime, Duration, FixedOffset, NaiveDateTime, TimeZone};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Names of the timestamp and value columns.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub timestamp: String,
    pub value: String,
}

impl Default for ColumnSpec {
    fn default() -> Self {
        Self {
            timestamp: "timestamp".into(),
            value: "value".into(),
        }
    }
}

/// Ingestion settings.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestOptions {
    pub columns: ColumnSpec,
    /// Fixed UTC offset, in seconds, applied to timestamps that do not
    /// carry their own offset (naive ISO-8601 or epoch seconds). No DST.
    pub utc_offset_seconds: i32,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            columns: ColumnSpec::default(),
            utc_offset_seconds: 0,
        }
    }
}

/// A series on a uniform sample grid where some grid slots are missing.
///
/// Produced by [`ingest_csv`]; converted to contiguous [`TimeSeries`]
/// segments by [`GappedSeries::fill_gaps`].
#[derive(Debug, Clone)]
pub struct GappedSeries {
    samples: Vec<Option<f64>>,
    dt_seconds: f64,
    t0: Option<DateTime<FixedOffset>>,
    label: String,
}

/// A maximal run of missing samples: `start` grid index and run length.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gap {
    pub start: usize,
    pub len: usize,
}

impl GappedSeries {
    pub fn from_parts(
        samples: Vec<Option<f64>>,
        dt_seconds: f64,
        t0: Option<DateTime<FixedOffset>>,
        label: impl Into<String>,
    ) -> Self {
        Self {
            samples,
            dt_seconds,
            t0,
            label: label.into(),
        }
    }

    pub fn grid_len(&self) -> usize {
        self.samples.len()
    }

    pub fn dt_seconds(&self) -> f64 {
        self.dt_seconds
    }

    pub fn t0(&self) -> Option<DateTime<FixedOffset>> {
        self.t0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Maximal runs of missing samples, in grid order.
    pub fn gaps(&self) -> Vec<Gap> {
        let mut out = Vec::new();
        let mut run_start = None;
        for (i, s) in self.samples.iter().enumerate() {
            match (s, run_start) {
                (None, None) => run_start = Some(i),
                (Some(_), Some(start)) => {
                    out.push(Gap {
                        start,
                        len: i - start,
                    });
                    run_start = None;
                }
                _ => {}
            }
        }
        if let Some(start) = run_start {
            out.push(Gap {
                start,
                len: self.samples.len() - start,
            });
        }
        out
    }

    pub fn has_gaps(&self) -> bool {
        self.samples.iter().any(|s| s.is_none())
    }

    /// Fill or split at gaps, returning contiguous segments in time order.
    ///
    /// Gaps of at most `interpolate_limit` samples are filled by linear
    /// interpolation between the bounding observed samples; longer gaps
    /// (and gaps touching either end of the record, which have only one
    /// bounding sample) split the series. Windowed analyses run per
    /// segment and therefore never straddle a split.
    pub fn fill_gaps(&self, interpolate_limit: usize) -> Result<Vec<TimeSeries>> {
        let n = self.samples.len();
        let mut filled: Vec<Option<f64>> = self.samples.clone();

        for gap in self.gaps() {
            let before = gap.start.checked_sub(1).map(|i| filled[i]).flatten();
            let after = filled.get(gap.start + gap.len).copied().flatten();
            if gap.len <= interpolate_limit {
                if let (Some(a), Some(b)) = (before, after) {
                    let span = (gap.len + 1) as f64;
                    for k in 0..gap.len {
                        let frac = (k + 1) as f64 / span;
                        filled[gap.start + k] = Some(a + (b - a) * frac);
                    }
                }
                // Edge gaps fall through and split below.
            }
        }

        let mut segments = Vec::new();
        let mut seg_start = None;
        for i in 0..=n {
            let present = i < n && filled[i].is_some();
            match (present, seg_start) {
                (true, None) => seg_start = Some(i),
                (false, Some(start)) => {
                    let values: Vec<f64> =
                        filled[start..i].iter().map(|v| v.unwrap()).collect();
                    let t0 = self.t0.map(|t| {
                        t + Duration::milliseconds(
                            (start as f64 * self.dt_seconds * 1000.0).round() as i64,
                        )
                    });
                    segments.push(TimeSeries::new(
                        values,
                        self.dt_seconds,
                        t0,
                        self.label.clone(),
                    )?);
                    seg_start = None;
                }
                _ => {}
            }
        }
        Ok(segments)
    }
}

/// Read one CSV file into a gapped series.
///
/// The sampling interval is inferred as the median inter-row gap (lower
/// median, so sparse gaps cannot drag it up). A row gap of `k` intervals
/// leaves `k - 1` missing grid slots; gaps must be whole multiples of the
/// interval to within 1%.
pub fn ingest_csv(path: impl AsRef<Path>, options: &IngestOptions) -> Result<GappedSeries> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));

    let headers = reader
        .headers()
        .map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?
        .clone();
    let ts_col = headers
        .iter()
        .position(|h| h == options.columns.timestamp)
        .ok_or_else(|| Error::MissingColumn {
            name: options.columns.timestamp.clone(),
        })?;
    let val_col = headers
        .iter()
        .position(|h| h == options.columns.value)
        .ok_or_else(|| Error::MissingColumn {
            name: options.columns.value.clone(),
        })?;

    let offset = FixedOffset::east_opt(options.utc_offset_seconds)
        .ok_or_else(|| Error::InvalidParameter("utc offset out of range".into()))?;

    let mut stamps: Vec<DateTime<FixedOffset>> = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|source| Error::Csv {
            path: path.to_path_buf(),
            source,
        })?;
        let ts_raw = record.get(ts_col).unwrap_or("");
        let val_raw = record.get(val_col).unwrap_or("");
        let stamp = parse_timestamp(ts_raw, offset).ok_or_else(|| Error::BadTimestamp {
            row: row + 1,
            value: ts_raw.to_string(),
        })?;
        let value: f64 = val_raw.trim().parse().map_err(|_| Error::BadValue {
            row: row + 1,
            value: val_raw.to_string(),
        })?;
        if !value.is_finite() {
            return Err(Error::NonFinite { index: row });
        }
        if let Some(last) = stamps.last() {
            if stamp <= *last {
                return Err(Error::NonMonotoneTimestamps { row: row + 1 });
            }
        }
        stamps.push(stamp);
        values.push(value);
    }

    if stamps.len() < 2 {
        return Err(Error::TooShort {
            len: stamps.len(),
            min: 2,
        });
    }

    // Millisecond resolution is plenty for the 1% alignment test below.
    let secs: Vec<f64> = stamps
        .iter()
        .map(|t| t.timestamp_millis() as f64 / 1000.0)
        .collect();
    let mut diffs: Vec<f64> = secs.windows(2).map(|w| w[1] - w[0]).collect();
    diffs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let dt = diffs[(diffs.len() - 1) / 2];
    if !(dt > 0.0) {
        return Err(Error::NonPositiveDt { dt_seconds: dt });
    }

    let mut samples: Vec<Option<f64>> = Vec::with_capacity(values.len());
    let mut prev_index = 0usize;
    samples.push(Some(values[0]));
    for (row, (&s, &v)) in secs.iter().zip(&values).enumerate().skip(1) {
        let offset_from_start = s - secs[0];
        let idx_f = offset_from_start / dt;
        let idx = idx_f.round();
        if (offset_from_start - idx * dt).abs() > 0.01 * dt {
            return Err(Error::IrregularSampling {
                row: row + 1,
                gap_seconds: s - secs[row - 1],
                dt_seconds: dt,
            });
        }
        let idx = idx as usize;
        if idx <= prev_index {
            return Err(Error::NonMonotoneTimestamps { row: row + 1 });
        }
        for _ in prev_index + 1..idx {
            samples.push(None);
        }
        samples.push(Some(v));
        prev_index = idx;
    }

    let label = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    Ok(GappedSeries::from_parts(
        samples,
        dt,
        Some(stamps[0]),
        label,
    ))
}

/// Convenience: ingest and resolve gaps in one call, yielding contiguous
/// segments (one element when the record has no long gaps).
pub fn ingest_segments(
    path: impl AsRef<Path>,
    options: &IngestOptions,
    interpolate_limit: usize,
) -> Result<Vec<TimeSeries>> {
    ingest_csv(path, options)?.fill_gaps(interpolate_limit)
}

fn parse_timestamp(raw: &str, default_offset: FixedOffset) -> Option<DateTime<FixedOffset>> {
    let raw = raw.trim();
    if raw.is_empty() {
        return None;
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
        return Some(dt);
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
            return default_offset.from_local_datetime(&naive).single();
        }
    }
    if let Ok(epoch) = raw.parse::<f64>() {
        if epoch.is_finite() {
            let millis = (epoch * 1000.0).round() as i64;
            let utc = DateTime::from_timestamp_millis(millis)?;
            return Some(utc.with_timezone(&default_offset));
        }
    }
    None
}

/// Write a series in the canonical CSV layout (`timestamp,value`).
///
/// Timestamps are RFC 3339 when the series is anchored, otherwise seconds
/// from the first sample. Values print in shortest round-trip form, so
/// writing and re-ingesting reproduces them bit for bit.
pub fn write_csv(path: impl AsRef<Path>, series: &TimeSeries) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = BufWriter::new(file);
    write_csv_to(&mut out, series).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `write_csv` against any writer.
pub fn write_csv_to<W: Write>(out: &mut W, series: &TimeSeries) -> std::io::Result<()> {
    writeln!(out, "timestamp,value")?;
    for (i, v) in series.values().iter().enumerate() {
        match series.timestamp_at(i) {
            Some(ts) => writeln!(out, "{},{}", ts.to_rfc3339(), v)?,
            None => writeln!(out, "{},{}", series.seconds_at(i), v)?,
        }
    }
    out.flush()
}
