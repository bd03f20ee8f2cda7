//! Detrended fluctuation analysis: fluctuation function, global scaling
//! exponent, windowed local exponents, and the sliding time-dependent
//! exponent trace.
//!
//! The pipeline integrates the mean-removed series into a profile, cuts
//! the profile into non-overlapping segments of each scale from the front
//! and from the back (both passes pooled, so every sample contributes even
//! when the length is not a multiple of the scale), removes a least-squares
//! polynomial trend per segment, and takes F(s) as the RMS of the pooled
//! residuals. The scaling exponent is the slope of log2 F against log2 s.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{detrend_poly, ols_line};
use crate::timeseries::{CalendarWindow, TimeSeries};

/// Cumulative sum of the mean-removed series. Same length as the input;
/// the final element telescopes to zero up to rounding.
pub fn profile(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let mut acc = 0.0;
    values
        .iter()
        .map(|&v| {
            acc += v - mean;
            acc
        })
        .collect()
}

/// Number of segments pooled at a given scale: forward plus backward
/// passes, `2 * floor(n / scale)`.
pub fn segment_count(n: usize, scale: usize) -> usize {
    2 * (n / scale)
}

/// DFA fluctuation curve; `alpha` is present once fitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluctuationCurve {
    pub scales: Vec<usize>,
    pub fluctuation: Vec<f64>,
    pub alpha: Option<f64>,
    pub intercept: Option<f64>,
    pub r_squared: Option<f64>,
    pub detrend_order: usize,
}

impl FluctuationCurve {
    /// Serialize as `scale,fluctuation` CSV.
    pub fn write_csv_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "scale,fluctuation")?;
        for (s, f) in self.scales.iter().zip(&self.fluctuation) {
            writeln!(out, "{s},{f}")?;
        }
        out.flush()
    }
}

/// Doubling scale grid from `min` up to (and including, when hit exactly)
/// `max`.
pub fn pow2_scales(min: usize, max: usize) -> Vec<usize> {
    let mut scales = Vec::new();
    let mut s = min;
    while s <= max {
        scales.push(s);
        match s.checked_mul(2) {
            Some(next) => s = next,
            None => break,
        }
    }
    scales
}

/// Fluctuation function F(s) over the given scales (no fit yet).
///
/// Preconditions: scales strictly increasing, the smallest at least
/// `detrend_order + 2` (a polynomial needs that many points to leave a
/// residual), the largest at most a quarter of the series length.
pub fn fluctuation(
    x: &TimeSeries,
    scales: &[usize],
    detrend_order: usize,
) -> Result<FluctuationCurve> {
    fluctuation_of_values(x.values(), scales, detrend_order)
}

pub(crate) fn fluctuation_of_values(
    values: &[f64],
    scales: &[usize],
    detrend_order: usize,
) -> Result<FluctuationCurve> {
    let n = values.len();
    if n < 16 {
        return Err(Error::TooShort { len: n, min: 16 });
    }
    if detrend_order == 0 {
        return Err(Error::InvalidParameter(
            "detrend_order must be at least 1".into(),
        ));
    }
    if scales.is_empty() {
        return Err(Error::InvalidParameter("no scales given".into()));
    }
    if scales.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "scales must be strictly increasing".into(),
        ));
    }
    if scales[0] < detrend_order + 2 {
        return Err(Error::InvalidParameter(format!(
            "minimum scale {} is below detrend_order + 2 = {}",
            scales[0],
            detrend_order + 2
        )));
    }
    let max_allowed = n / 4;
    if let Some(&too_big) = scales.iter().find(|&&s| s > max_allowed) {
        return Err(Error::ScaleTooLarge {
            scale: too_big,
            max: max_allowed,
        });
    }

    let prof = profile(values);
    let mut fluct = Vec::with_capacity(scales.len());
    let mut scratch = vec![0.0f64; *scales.last().unwrap()];
    for &s in scales {
        let n_seg = n / s;
        let mut sum_sq_mean = 0.0;
        for pass in 0..2 {
            for v in 0..n_seg {
                let start = if pass == 0 { v * s } else { n - (v + 1) * s };
                let seg = &mut scratch[..s];
                seg.copy_from_slice(&prof[start..start + s]);
                detrend_poly(seg, detrend_order);
                sum_sq_mean += seg.iter().map(|r| r * r).sum::<f64>() / s as f64;
            }
        }
        let f = (sum_sq_mean / (2 * n_seg) as f64).sqrt();
        if !(f > 0.0) {
            return Err(Error::ConstantInput);
        }
        fluct.push(f);
    }

    Ok(FluctuationCurve {
        scales: scales.to_vec(),
        fluctuation: fluct,
        alpha: None,
        intercept: None,
        r_squared: None,
        detrend_order,
    })
}

/// Fit the scaling exponent: least squares of log2 F(s) on log2 s.
/// Needs at least four scales with positive fluctuation.
pub fn fit_alpha(curve: &FluctuationCurve) -> Result<FluctuationCurve> {
    if curve.scales.len() < 4 {
        return Err(Error::InvalidParameter(format!(
            "alpha fit needs at least 4 scales, got {}",
            curve.scales.len()
        )));
    }
    if curve.fluctuation.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::ConstantInput);
    }
    let log_s: Vec<f64> = curve.scales.iter().map(|&s| (s as f64).log2()).collect();
    let log_f: Vec<f64> = curve.fluctuation.iter().map(|&f| f.log2()).collect();
    let fit = ols_line(&log_s, &log_f)?;
    Ok(FluctuationCurve {
        alpha: Some(fit.slope),
        intercept: Some(fit.intercept),
        r_squared: Some(fit.r_squared),
        ..curve.clone()
    })
}

/// Settings for a whole-series DFA run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DfaConfig {
    pub min_scale: usize,
    pub max_scale: usize,
    pub detrend_order: usize,
}

impl Default for DfaConfig {
    fn default() -> Self {
        // Scale grid 2^4 .. 2^13; a series of 2^15 samples satisfies the
        // length >= 4 * max_scale rule.
        Self {
            min_scale: 16,
            max_scale: 8192,
            detrend_order: 1,
        }
    }
}

/// Global DFA: doubling scale grid, fluctuation function, alpha fit.
///
/// The grid must span at least 1.5 decades for the fit to be meaningful;
/// narrower requests are rejected rather than silently fitted.
pub fn dfa_global(x: &TimeSeries, config: &DfaConfig) -> Result<FluctuationCurve> {
    let scales = pow2_scales(config.min_scale, config.max_scale);
    if scales.len() < 2
        || (*scales.last().unwrap() as f64 / scales[0] as f64).log10() < 1.5
    {
        return Err(Error::InvalidParameter(format!(
            "global fit needs scales spanning at least 1.5 decades, got {:?}",
            scales
        )));
    }
    fit_alpha(&fluctuation(x, &scales, config.detrend_order)?)
}

/// Settings for windowed (local) DFA.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalDfaConfig {
    pub min_scale: usize,
    pub max_scale: usize,
    pub detrend_order: usize,
}

impl Default for LocalDfaConfig {
    fn default() -> Self {
        // Max scale 2^8 with the canonical 4x window of 1024 samples.
        Self {
            min_scale: 16,
            max_scale: 256,
            detrend_order: 1,
        }
    }
}

impl LocalDfaConfig {
    /// Window length implied by the scale rule: 4 times the maximum scale.
    pub fn window_len(&self) -> usize {
        4 * self.max_scale
    }
}

/// A fitted local exponent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalAlpha {
    pub alpha: f64,
    pub r_squared: f64,
}

/// DFA over one window of the series (the daily / local exponent).
///
/// The window length must equal `4 * max_scale` so the scale rule holds
/// exactly; constant windows are reported as errors (their fluctuation
/// function is zero).
pub fn dfa_local(
    x: &TimeSeries,
    window: &CalendarWindow,
    config: &LocalDfaConfig,
) -> Result<LocalAlpha> {
    if window.length != config.window_len() {
        return Err(Error::InvalidParameter(format!(
            "window length {} does not match 4 * max_scale = {}",
            window.length,
            config.window_len()
        )));
    }
    let values = x.window_values(window);
    local_alpha_of_values(values, config)
}

fn local_alpha_of_values(values: &[f64], config: &LocalDfaConfig) -> Result<LocalAlpha> {
    let scales = pow2_scales(config.min_scale, config.max_scale);
    let curve = fit_alpha(&fluctuation_of_values(
        values,
        &scales,
        config.detrend_order,
    )?)?;
    Ok(LocalAlpha {
        alpha: curve.alpha.unwrap(),
        r_squared: curve.r_squared.unwrap(),
    })
}

/// One evaluated window of a scaling trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceEntry {
    pub start_index: usize,
    pub alpha: f64,
    pub r_squared: f64,
}

/// A window the trace could not evaluate, with the reason.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedWindow {
    pub start_index: usize,
    pub reason: String,
}

/// Time-dependent scaling exponent: local alpha over a sliding window.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScalingTrace {
    pub entries: Vec<TraceEntry>,
    pub skipped: Vec<SkippedWindow>,
    pub window_len: usize,
    pub step: usize,
}

impl ScalingTrace {
    /// Number of window positions considered (entries plus skipped).
    pub fn n_windows(&self) -> usize {
        self.entries.len() + self.skipped.len()
    }

    /// Serialize as CSV: `timestamp,start_index,alpha,r_squared[,q]`.
    /// Timestamps come from the series anchor when present, otherwise
    /// seconds from the first sample.
    pub fn write_csv_to<W: Write>(
        &self,
        out: &mut W,
        series: &TimeSeries,
        q: Option<&[usize]>,
    ) -> std::io::Result<()> {
        if let Some(q) = q {
            debug_assert_eq!(q.len(), self.entries.len());
            writeln!(out, "timestamp,start_index,alpha,r_squared,q")?;
        } else {
            writeln!(out, "timestamp,start_index,alpha,r_squared")?;
        }
        for (i, e) in self.entries.iter().enumerate() {
            let stamp = match series.timestamp_at(e.start_index) {
                Some(ts) => ts.to_rfc3339(),
                None => format!("{}", series.seconds_at(e.start_index)),
            };
            match q {
                Some(q) => writeln!(
                    out,
                    "{stamp},{},{},{},{}",
                    e.start_index, e.alpha, e.r_squared, q[i]
                )?,
                None => writeln!(out, "{stamp},{},{},{}", e.start_index, e.alpha, e.r_squared)?,
            }
        }
        out.flush()
    }
}

/// Trace settings: window geometry plus the local DFA configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TraceConfig {
    pub step: usize,
    pub local: LocalDfaConfig,
}

impl Default for TraceConfig {
    fn default() -> Self {
        // Step of 15 samples = 30 minutes at the 2-minute cadence.
        Self {
            step: 15,
            local: LocalDfaConfig::default(),
        }
    }
}

/// Slide a `window_len` window by `step` samples and evaluate the local
/// exponent at each position. Window starts run 0, step, 2·step, ...;
/// degenerate windows (e.g. constant data) are skipped with a reason
/// rather than failing the whole trace.
///
/// Windows are independent and evaluated in parallel; entries are emitted
/// in start-index order regardless of evaluation order.
pub fn alpha_t(x: &TimeSeries, config: &TraceConfig) -> Result<ScalingTrace> {
    let window_len = config.local.window_len();
    if config.step == 0 {
        return Err(Error::InvalidParameter("step must be positive".into()));
    }
    if x.len() < window_len {
        return Err(Error::TooShort {
            len: x.len(),
            min: window_len,
        });
    }
    let starts: Vec<usize> = (0..=x.len() - window_len).step_by(config.step).collect();
    let values = x.values();
    let results: Vec<(usize, Result<LocalAlpha>)> = starts
        .into_par_iter()
        .map(|start| {
            (
                start,
                local_alpha_of_values(&values[start..start + window_len], &config.local),
            )
        })
        .collect();

    let mut entries = Vec::with_capacity(results.len());
    let mut skipped = Vec::new();
    for (start, res) in results {
        match res {
            Ok(la) => entries.push(TraceEntry {
                start_index: start,
                alpha: la.alpha,
                r_squared: la.r_squared,
            }),
            Err(err) => skipped.push(SkippedWindow {
                start_index: start,
                reason: err.to_string(),
            }),
        }
    }
    Ok(ScalingTrace {
        entries,
        skipped,
        window_len,
        step: config.step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{gen_white, NoiseKind, NoiseSpec};

    fn series(values: Vec<f64>) -> TimeSeries {
        TimeSeries::new(values, 120.0, None, "dfa").unwrap()
    }

    #[test]
    fn profile_of_constants_is_zero() {
        assert_eq!(profile(&[1.0, 1.0, 1.0, 1.0]), vec![0.0; 4]);
    }

    #[test]
    fn profile_of_alternating_signs() {
        assert_eq!(profile(&[1.0, -1.0, 1.0, -1.0]), vec![1.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn profile_telescopes_to_zero() {
        let spec = NoiseSpec::new(NoiseKind::White, 4096, 17);
        let x = gen_white(&spec).unwrap();
        let sd = {
            let v = x.values();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            (v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64).sqrt()
        };
        let last = *profile(x.values()).last().unwrap();
        assert!(last.abs() <= 1e-9 * x.len() as f64 * sd);
    }

    #[test]
    fn pooled_segment_count() {
        assert_eq!(segment_count(1024, 256), 8);
        assert_eq!(segment_count(1000, 256), 6);
        assert_eq!(segment_count(1023, 16), 2 * 63);
    }

    #[test]
    fn scale_above_quarter_length_is_rejected() {
        let x = series((0..256).map(|i| (i % 7) as f64).collect());
        assert!(matches!(
            fluctuation(&x, &[16, 32, 65], 1),
            Err(Error::ScaleTooLarge { scale: 65, max: 64 })
        ));
    }

    #[test]
    fn min_scale_respects_detrend_order() {
        let x = series((0..256).map(|i| (i % 7) as f64).collect());
        assert!(fluctuation(&x, &[3, 16], 2).is_err());
        assert!(fluctuation(&x, &[4, 16], 2).is_ok());
    }

    #[test]
    fn constant_input_errors() {
        let x = series(vec![5.0; 1024]);
        assert!(matches!(
            fluctuation(&x, &[16, 32], 1),
            Err(Error::ConstantInput)
        ));
    }

    #[test]
    fn exact_power_law_curve_fits_to_1e12() {
        let scales: Vec<usize> = pow2_scales(16, 1024);
        let curve = FluctuationCurve {
            fluctuation: scales.iter().map(|&s| (s as f64).powf(0.8)).collect(),
            scales,
            alpha: None,
            intercept: None,
            r_squared: None,
            detrend_order: 1,
        };
        let fitted = fit_alpha(&curve).unwrap();
        assert!((fitted.alpha.unwrap() - 0.8).abs() < 1e-12);
        assert!((fitted.r_squared.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_four_scales() {
        let curve = FluctuationCurve {
            scales: vec![16, 32, 64],
            fluctuation: vec![1.0, 2.0, 4.0],
            alpha: None,
            intercept: None,
            r_squared: None,
            detrend_order: 1,
        };
        assert!(fit_alpha(&curve).is_err());
    }

    #[test]
    fn global_defaults_need_2_to_the_15() {
        let x = series((0..1 << 14).map(|i| ((i * 31) % 17) as f64).collect());
        assert!(matches!(
            dfa_global(&x, &DfaConfig::default()),
            Err(Error::ScaleTooLarge { .. })
        ));
    }

    #[test]
    fn global_run_uses_ten_scales_at_2_to_the_15() {
        let spec = NoiseSpec::new(NoiseKind::White, 1 << 15, 23);
        let x = gen_white(&spec).unwrap();
        let curve = dfa_global(&x, &DfaConfig::default()).unwrap();
        assert_eq!(curve.scales.len(), 10);
        assert_eq!(curve.scales[0], 16);
        assert_eq!(*curve.scales.last().unwrap(), 8192);
        let alpha = curve.alpha.unwrap();
        assert!(
            (0.45..=0.55).contains(&alpha),
            "white-noise alpha {alpha} outside [0.45, 0.55]"
        );
    }

    #[test]
    fn narrow_scale_span_is_rejected_for_global_fit() {
        let x = series((0..4096).map(|i| ((i * 31) % 17) as f64).collect());
        let cfg = DfaConfig {
            min_scale: 16,
            max_scale: 64,
            detrend_order: 1,
        };
        assert!(dfa_global(&x, &cfg).is_err());
    }

    #[test]
    fn local_window_length_must_match_scale_rule() {
        let x = series((0..2048).map(|i| ((i * 7) % 13) as f64).collect());
        let cfg = LocalDfaConfig::default();
        let bad = CalendarWindow::new(&x, 0, 512).unwrap();
        assert!(dfa_local(&x, &bad, &cfg).is_err());
        let good = CalendarWindow::new(&x, 0, 1024).unwrap();
        assert!(dfa_local(&x, &good, &cfg).is_ok());
    }

    #[test]
    fn identical_windows_yield_identical_alpha() {
        let body: Vec<f64> = (0..1024).map(|i| ((i * 37) % 101) as f64).collect();
        let mut values = body.clone();
        values.extend_from_slice(&body);
        let x = series(values);
        let cfg = LocalDfaConfig::default();
        let w1 = CalendarWindow::new(&x, 0, 1024).unwrap();
        let w2 = CalendarWindow::new(&x, 1024, 1024).unwrap();
        let a1 = dfa_local(&x, &w1, &cfg).unwrap();
        let a2 = dfa_local(&x, &w2, &cfg).unwrap();
        assert_eq!(a1.alpha, a2.alpha);
    }

    #[test]
    fn constant_window_is_an_error() {
        let x = series(vec![4.0; 1024]);
        let w = CalendarWindow::new(&x, 0, 1024).unwrap();
        assert!(dfa_local(&x, &w, &LocalDfaConfig::default()).is_err());
    }

    #[test]
    fn trace_window_counts_are_exact() {
        let spec = NoiseSpec::new(NoiseKind::White, 1024 + 15, 3);
        let x = gen_white(&spec).unwrap();
        let trace = alpha_t(&x, &TraceConfig::default()).unwrap();
        assert_eq!(trace.n_windows(), 2);
        assert_eq!(trace.entries.len(), 2);
        assert_eq!(trace.entries[1].start_index, 15);

        let spec = NoiseSpec::new(NoiseKind::White, 2048, 4);
        let x = gen_white(&spec).unwrap();
        let trace = alpha_t(&x, &TraceConfig::default()).unwrap();
        assert_eq!(trace.entries.len(), (2048 - 1024) / 15 + 1);
    }

    #[test]
    fn trace_skips_degenerate_windows_with_reasons() {
        // Constant head, noisy tail: early windows are degenerate.
        let mut values = vec![1.0; 1024];
        let spec = NoiseSpec::new(NoiseKind::White, 1024, 8);
        values.extend_from_slice(gen_white(&spec).unwrap().values());
        let x = series(values);
        let trace = alpha_t(&x, &TraceConfig::default()).unwrap();
        assert!(!trace.skipped.is_empty());
        assert_eq!(trace.skipped[0].start_index, 0);
        assert!(trace.skipped[0].reason.contains("constant"));
        assert_eq!(
            trace.n_windows(),
            (2048 - 1024) / 15 + 1,
            "skips still occupy their grid position"
        );
    }
}
