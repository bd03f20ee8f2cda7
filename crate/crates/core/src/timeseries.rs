//! Uniformly sampled time-series container and calendar arithmetic.

use chrono::{DateTime, Datelike, Duration, FixedOffset, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A uniformly sampled, finite-valued series.
///
/// Samples are implicitly equidistant: sample `i` sits at
/// `t0 + i * dt_seconds` when a wall-clock anchor is present. Values carry
/// caller-defined units (vehicles, meters of queue, ...).
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    values: Vec<f64>,
    dt_seconds: f64,
    t0: Option<DateTime<FixedOffset>>,
    label: String,
}

impl TimeSeries {
    /// Build a series, validating the container invariants: non-empty,
    /// all values finite, positive sampling interval.
    pub fn new(
        values: Vec<f64>,
        dt_seconds: f64,
        t0: Option<DateTime<FixedOffset>>,
        label: impl Into<String>,
    ) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::TooShort { len: 0, min: 1 });
        }
        if !(dt_seconds > 0.0) || !dt_seconds.is_finite() {
            return Err(Error::NonPositiveDt {
                dt_seconds,
            });
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            values,
            dt_seconds,
            t0,
            label: label.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dt_seconds(&self) -> f64 {
        self.dt_seconds
    }

    /// Sampling frequency in Hz.
    pub fn fs(&self) -> f64 {
        1.0 / self.dt_seconds
    }

    pub fn t0(&self) -> Option<DateTime<FixedOffset>> {
        self.t0
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Wall-clock instant of sample `index`, when the series is anchored.
    pub fn timestamp_at(&self, index: usize) -> Option<DateTime<FixedOffset>> {
        self.t0.map(|t0| {
            t0 + Duration::milliseconds((index as f64 * self.dt_seconds * 1000.0).round() as i64)
        })
    }

    /// Seconds from the first sample to sample `index`.
    pub fn seconds_at(&self, index: usize) -> f64 {
        index as f64 * self.dt_seconds
    }

    /// View of the samples covered by a window.
    pub fn window_values(&self, window: &CalendarWindow) -> &[f64] {
        &self.values[window.start_index..window.start_index + window.length]
    }

    /// Replace the sample values, keeping metadata. Lengths must match;
    /// used by preprocessing steps that map values one-to-one.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        debug_assert_eq!(values.len(), self.values.len());
        Self::new(values, self.dt_seconds, self.t0, self.label.clone())
    }
}

/// Weekday/weekend classification of a window start instant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl std::fmt::Display for DayType {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DayType::Weekday => write!(f, "weekday"),
            DayType::Weekend => write!(f, "weekend"),
        }
    }
}

/// Classify the instant `t0 + start_index * dt_seconds`: Saturday and
/// Sunday count as weekend, in the fixed offset carried by `t0`.
pub fn day_type(t0: DateTime<FixedOffset>, start_index: usize, dt_seconds: f64) -> DayType {
    let instant =
        t0 + Duration::milliseconds((start_index as f64 * dt_seconds * 1000.0).round() as i64);
    match instant.weekday() {
        Weekday::Sat | Weekday::Sun => DayType::Weekend,
        _ => DayType::Weekday,
    }
}

/// A sample-index window into a series, with the day type of its start
/// instant when the series carries a wall-clock anchor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalendarWindow {
    pub start_index: usize,
    pub length: usize,
    pub day_type: Option<DayType>,
}

impl CalendarWindow {
    /// Window `[start_index, start_index + length)` of `series`.
    pub fn new(series: &TimeSeries, start_index: usize, length: usize) -> Result<Self> {
        if length == 0 {
            return Err(Error::InvalidParameter("window length must be positive".into()));
        }
        let end = start_index
            .checked_add(length)
            .ok_or_else(|| Error::InvalidParameter("window end overflows".into()))?;
        if end > series.len() {
            return Err(Error::WindowOutOfBounds {
                start: start_index,
                start_plus_len: end,
                len: series.len(),
            });
        }
        let day = series
            .t0()
            .map(|t0| day_type(t0, start_index, series.dt_seconds()));
        Ok(Self {
            start_index,
            length,
            day_type: day,
        })
    }

    /// Day type, or an error for operations that require the calendar.
    pub fn require_day_type(&self) -> Result<DayType> {
        self.day_type.ok_or(Error::MissingTimeAnchor)
    }
}
