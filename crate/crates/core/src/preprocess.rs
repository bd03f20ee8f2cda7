//! Outlier mitigation for raw queue-length records.

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Consistency constant mapping the median absolute deviation to the
/// standard deviation of a Gaussian.
pub const MAD_SCALE: f64 = 1.4826;

/// Rolling-median Hampel filter.
///
/// Each sample is compared against the median of its centered window of
/// `2 * half_width + 1` samples (truncated at the record edges). Samples
/// farther than `n_sigmas * 1.4826 * MAD` from that median are replaced by
/// it; everything else passes through. Output length equals input length.
///
/// When a window's MAD is zero (at least half its samples equal), the
/// threshold collapses to zero and only samples exactly on the median are
/// kept; this is the intended behavior for e.g. constant stretches with a
/// lone spike, not an error.
///
/// Replacement decisions are made in a single pass over the input series.
/// Repeated application is a no-op whenever outliers are isolated against
/// a locally smooth baseline (the sensor-misread case this filter
/// targets); on data whose deviations hug the threshold, a second pass may
/// trim further samples because removing an outlier tightens nearby MADs.
pub fn hampel_filter(x: &TimeSeries, half_width: usize, n_sigmas: f64) -> Result<TimeSeries> {
    if half_width == 0 {
        return Err(Error::InvalidParameter(
            "hampel half_width must be at least 1".into(),
        ));
    }
    if !(n_sigmas > 0.0) {
        return Err(Error::InvalidParameter(
            "hampel n_sigmas must be positive".into(),
        ));
    }
    if x.len() <= 2 * half_width {
        return Err(Error::TooShort {
            len: x.len(),
            min: 2 * half_width + 1,
        });
    }

    let values = x.values();
    let n = values.len();
    let mut out = values.to_vec();
    let mut scratch = Vec::with_capacity(2 * half_width + 1);
    for i in 0..n {
        let lo = i.saturating_sub(half_width);
        let hi = (i + half_width + 1).min(n);

        scratch.clear();
        scratch.extend_from_slice(&values[lo..hi]);
        let med = median_in_place(&mut scratch);

        for v in scratch.iter_mut() {
            *v = (*v - med).abs();
        }
        let mad = median_in_place(&mut scratch);

        if (values[i] - med).abs() > n_sigmas * MAD_SCALE * mad {
            out[i] = med;
        }
    }
    x.with_values(out)
}

/// Median by sorting the scratch buffer; even-length windows (possible at
/// the record edges) take the midpoint of the two central values.
fn median_in_place(buf: &mut [f64]) -> f64 {
    buf.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = buf.len();
    if n % 2 == 1 {
        buf[n / 2]
    } else {
        0.5 * (buf[n / 2 - 1] + buf[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 120.0, None, "t").unwrap()
    }

    #[test]
    fn removes_single_spike_with_zero_mad() {
        let x = series(vec![5.0, 5.0, 5.0, 500.0, 5.0, 5.0, 5.0]);
        let y = hampel_filter(&x, 3, 3.0).unwrap();
        assert_eq!(y.values(), &[5.0; 7]);
    }

    #[test]
    fn constant_series_unchanged() {
        let x = series(vec![7.0; 64]);
        let y = hampel_filter(&x, 15, 3.0).unwrap();
        assert_eq!(y.values(), x.values());
    }

    #[test]
    fn rejects_degenerate_window_parameters() {
        let x = series(vec![1.0, 2.0, 3.0]);
        assert!(hampel_filter(&x, 0, 3.0).is_err());
        assert!(hampel_filter(&x, 2, 3.0).is_err());
        assert!(hampel_filter(&x, 1, 0.0).is_err());
    }

    #[test]
    fn preserves_length_and_metadata() {
        let x = series((0..100).map(|i| (i % 7) as f64).collect());
        let y = hampel_filter(&x, 5, 3.0).unwrap();
        assert_eq!(y.len(), x.len());
        assert_eq!(y.dt_seconds(), x.dt_seconds());
        assert_eq!(y.label(), x.label());
    }

    #[test]
    fn median_of_even_window_is_midpoint() {
        let mut buf = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(median_in_place(&mut buf), 2.5);
    }
}
