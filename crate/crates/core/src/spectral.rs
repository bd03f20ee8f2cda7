//! Periodogram estimation, spectrum band segmentation, and spectral
//! exponent extraction.
//!
//! The estimator is the raw FFT periodogram S(f) = |X(f)|² / (fs·N) with
//! the series mean removed, one-sided with interior bins doubled and the
//! DC bin dropped. No taper and no averaging by default: harmonic spikes
//! (24 h, 12 h, 8 h, ... in signalized-intersection data) are part of the
//! signal and the power-law fit runs straight through them. A Welch
//! variant is available for variance reduction when spikes don't matter.

use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{lad_line, ols_line};
use crate::timeseries::TimeSeries;

/// Period of 14 days in seconds: default boundary between the
/// low-frequency region and the linear-decay region.
pub const LONG_PERIOD_SECONDS: f64 = 14.0 * 86_400.0;

/// Period of 32 minutes in seconds: default boundary between the
/// linear-decay region and the high-frequency region.
pub const SHORT_PERIOD_SECONDS: f64 = 1_920.0;

/// One-sided power spectral density.
///
/// `freqs[k] = (k + 1) * fs / n` for `k = 0 .. n/2 - 1`: the DC bin is
/// excluded, the Nyquist bin (even `n`) is the last entry. Power units are
/// value²/Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    freqs: Vec<f64>,
    power: Vec<f64>,
    fs: f64,
    n: usize,
}

impl Spectrum {
    /// Assemble a spectrum from parts, validating the layout invariants.
    pub fn from_parts(freqs: Vec<f64>, power: Vec<f64>, fs: f64, n: usize) -> Result<Self> {
        if freqs.len() != power.len() {
            return Err(Error::InvalidParameter(
                "freqs and power must have equal length".into(),
            ));
        }
        if power.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidParameter(
                "power values must be finite and non-negative".into(),
            ));
        }
        Ok(Self {
            freqs,
            power,
            fs,
            n,
        })
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    pub fn power(&self) -> &[f64] {
        &self.power
    }

    /// Sampling frequency in Hz.
    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Length of the series (or segment) the transform was taken over.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    /// Frequency resolution fs/n in Hz.
    pub fn df(&self) -> f64 {
        self.fs / self.n as f64
    }

    /// Record duration n/fs the spectrum describes, in seconds.
    pub fn record_seconds(&self) -> f64 {
        self.n as f64 / self.fs
    }

    /// Serialize as `freq_hz,power` CSV.
    pub fn write_csv_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "freq_hz,power")?;
        for (f, p) in self.freqs.iter().zip(&self.power) {
            writeln!(out, "{f},{p}")?;
        }
        out.flush()
    }
}

/// Raw periodogram of a mean-removed series.
///
/// Satisfies Parseval's identity exactly: the power summed over bins times
/// fs/n equals the sample variance of the mean-removed series.
pub fn periodogram(x: &TimeSeries) -> Result<Spectrum> {
    let n = x.len();
    if n < 16 {
        return Err(Error::TooShort { len: n, min: 16 });
    }
    let fs = x.fs();
    let mean = x.values().iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = x
        .values()
        .iter()
        .map(|&v| Complex::new(v - mean, 0.0))
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    Ok(one_sided(&buf, fs, n))
}

/// Welch-averaged periodogram: Hann-tapered segments of `segment_len`
/// samples with 50% overlap, each mean-removed, averaged in power.
///
/// Trades the raw periodogram's bin-level detail (and its harmonic
/// spikes' sharpness) for lower variance. The returned spectrum's `n` is
/// the segment length.
pub fn welch_periodogram(x: &TimeSeries, segment_len: usize) -> Result<Spectrum> {
    let n = x.len();
    if segment_len < 16 {
        return Err(Error::InvalidParameter(
            "welch segment length must be at least 16".into(),
        ));
    }
    if segment_len > n {
        return Err(Error::TooShort {
            len: n,
            min: segment_len,
        });
    }
    let fs = x.fs();
    let window: Vec<f64> = (0..segment_len)
        .map(|i| {
            let phase = std::f64::consts::TAU * i as f64 / segment_len as f64;
            0.5 * (1.0 - phase.cos())
        })
        .collect();
    let win_energy: f64 = window.iter().map(|w| w * w).sum();

    let step = (segment_len / 2).max(1);
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(segment_len);
    let mut acc: Option<Spectrum> = None;
    let mut count = 0usize;
    let mut start = 0usize;
    while start + segment_len <= n {
        let seg = &x.values()[start..start + segment_len];
        let mean = seg.iter().sum::<f64>() / segment_len as f64;
        let mut buf: Vec<Complex<f64>> = seg
            .iter()
            .zip(&window)
            .map(|(&v, &w)| Complex::new((v - mean) * w, 0.0))
            .collect();
        fft.process(&mut buf);
        // Density normalization: 1/(fs * sum w²) instead of 1/(fs * N).
        let mut spec = one_sided(&buf, fs, segment_len);
        let fix = segment_len as f64 / win_energy;
        for p in spec.power.iter_mut() {
            *p *= fix;
        }
        match &mut acc {
            None => acc = Some(spec),
            Some(total) => {
                for (t, p) in total.power.iter_mut().zip(&spec.power) {
                    *t += p;
                }
            }
        }
        count += 1;
        start += step;
    }
    let mut spec = acc.expect("at least one segment fits");
    for p in spec.power.iter_mut() {
        *p /= count as f64;
    }
    Ok(spec)
}

/// One-sided PSD from an unnormalized forward FFT: normalization
/// 1/(fs·n) first, then interior bins doubled (DC dropped, Nyquist kept
/// single for even n).
fn one_sided(fft_out: &[Complex<f64>], fs: f64, n: usize) -> Spectrum {
    let nb = n / 2;
    let norm = 1.0 / (fs * n as f64);
    let mut freqs = Vec::with_capacity(nb);
    let mut power = Vec::with_capacity(nb);
    for k in 1..=nb {
        let mut p = fft_out[k].norm_sqr() * norm;
        if !(n % 2 == 0 && k == nb) {
            p *= 2.0;
        }
        freqs.push(k as f64 * fs / n as f64);
        power.push(p);
    }
    Spectrum {
        freqs,
        power,
        fs,
        n,
    }
}

/// Spectrum region labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    LowFrequency,
    LinearDecay,
    HighFrequency,
}

/// How to carve a spectrum into low-frequency / linear-decay /
/// high-frequency regions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BandPolicy {
    /// Fixed period cutoffs: periods longer than `long_period_seconds`
    /// are low-frequency, periods shorter than `short_period_seconds`
    /// are high-frequency, the rest is the linear-decay region
    /// (boundaries inclusive).
    Absolute {
        long_period_seconds: f64,
        short_period_seconds: f64,
    },
    /// The lowest `count` harmonics of the record are low-frequency;
    /// the short-period cutoff works as in `Absolute`. Useful for records
    /// shorter than the default 14-day cutoff.
    Harmonics {
        count: usize,
        short_period_seconds: f64,
    },
    /// Everything is linear-decay (fit over the full spectrum).
    Full,
}

impl Default for BandPolicy {
    fn default() -> Self {
        BandPolicy::Absolute {
            long_period_seconds: LONG_PERIOD_SECONDS,
            short_period_seconds: SHORT_PERIOD_SECONDS,
        }
    }
}

/// Bin ranges of the three spectrum regions (half-open index ranges into
/// the spectrum), plus the fit band in Hz.
#[derive(Debug, Clone, PartialEq)]
pub struct BandAnnotation {
    pub low: std::ops::Range<usize>,
    pub linear: std::ops::Range<usize>,
    pub high: std::ops::Range<usize>,
    /// Frequency edges of the linear-decay region.
    pub f_lo: f64,
    pub f_hi: f64,
}

impl BandAnnotation {
    pub fn band_of(&self, bin: usize) -> Band {
        if self.low.contains(&bin) {
            Band::LowFrequency
        } else if self.linear.contains(&bin) {
            Band::LinearDecay
        } else {
            Band::HighFrequency
        }
    }
}

/// Split a spectrum into the three regions under `policy`.
///
/// With the default absolute policy the record must span at least the
/// long-period cutoff (14 days); shorter records need custom edges or the
/// harmonics policy.
pub fn segment_bands(spectrum: &Spectrum, policy: &BandPolicy) -> Result<BandAnnotation> {
    let nb = spectrum.len();
    match *policy {
        BandPolicy::Absolute {
            long_period_seconds,
            short_period_seconds,
        } => {
            if !(long_period_seconds > short_period_seconds && short_period_seconds > 0.0) {
                return Err(Error::InvalidParameter(
                    "band edges must satisfy long_period > short_period > 0".into(),
                ));
            }
            let record = spectrum.record_seconds();
            if record < long_period_seconds {
                return Err(Error::RecordTooShortForBands {
                    record_days: record / 86_400.0,
                    cutoff_days: long_period_seconds / 86_400.0,
                });
            }
            let f_lo = 1.0 / long_period_seconds;
            let f_hi = 1.0 / short_period_seconds;
            let start = spectrum.freqs.partition_point(|&f| f < f_lo);
            let end = spectrum.freqs.partition_point(|&f| f <= f_hi);
            Ok(BandAnnotation {
                low: 0..start,
                linear: start..end,
                high: end..nb,
                f_lo,
                f_hi,
            })
        }
        BandPolicy::Harmonics {
            count,
            short_period_seconds,
        } => {
            if !(short_period_seconds > 0.0) {
                return Err(Error::InvalidParameter(
                    "short_period_seconds must be positive".into(),
                ));
            }
            let start = count.min(nb);
            let f_hi = 1.0 / short_period_seconds;
            let end = spectrum.freqs.partition_point(|&f| f <= f_hi).max(start);
            Ok(BandAnnotation {
                low: 0..start,
                linear: start..end,
                high: end..nb,
                f_lo: spectrum.freqs.get(start).copied().unwrap_or(0.0),
                f_hi,
            })
        }
        BandPolicy::Full => Ok(BandAnnotation {
            low: 0..0,
            linear: 0..nb,
            high: nb..nb,
            f_lo: spectrum.freqs.first().copied().unwrap_or(0.0),
            f_hi: spectrum.freqs.last().copied().unwrap_or(0.0),
        }),
    }
}

/// Slope estimator choice for the log-log fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    /// Ordinary least squares (the default; fits straight through
    /// harmonic spikes).
    #[default]
    Ols,
    /// Least absolute deviations, for sensitivity analysis against
    /// spike-heavy spectra.
    Lad,
}

/// Power-law fit over a frequency band.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandFit {
    /// Spectral exponent: negated slope of log10 S vs log10 f.
    pub beta: f64,
    pub intercept: f64,
    pub f_lo: f64,
    pub f_hi: f64,
    pub r_squared: f64,
    /// Bins that entered the fit.
    pub n_bins: usize,
    /// In-band bins dropped because their power was zero.
    pub dropped_bins: usize,
    pub method: FitMethod,
}

/// Minimum usable bins for a band fit.
pub const MIN_FIT_BINS: usize = 8;

/// Fit S(f) ~ f^(−β) over `[f_lo, f_hi]` (inclusive) by regression of
/// log10 power on log10 frequency.
///
/// Zero-power bins inside the band are dropped and counted in
/// `dropped_bins`; at least [`MIN_FIT_BINS`] usable bins must remain.
pub fn fit_beta(spectrum: &Spectrum, f_lo: f64, f_hi: f64, method: FitMethod) -> Result<BandFit> {
    if !(f_lo < f_hi) {
        return Err(Error::InvalidParameter(format!(
            "band edges must satisfy f_lo < f_hi, got [{f_lo}, {f_hi}]"
        )));
    }
    let mut log_f = Vec::new();
    let mut log_p = Vec::new();
    let mut dropped = 0usize;
    for (&f, &p) in spectrum.freqs.iter().zip(&spectrum.power) {
        if f < f_lo || f > f_hi {
            continue;
        }
        if p > 0.0 {
            log_f.push(f.log10());
            log_p.push(p.log10());
        } else {
            dropped += 1;
        }
    }
    if log_f.len() < MIN_FIT_BINS {
        return Err(Error::TooFewBins {
            f_lo,
            f_hi,
            found: log_f.len(),
            min: MIN_FIT_BINS,
        });
    }
    let fit = match method {
        FitMethod::Ols => ols_line(&log_f, &log_p)?,
        FitMethod::Lad => lad_line(&log_f, &log_p)?,
    };
    Ok(BandFit {
        beta: -fit.slope,
        intercept: fit.intercept,
        f_lo,
        f_hi,
        r_squared: fit.r_squared,
        n_bins: log_f.len(),
        dropped_bins: dropped,
        method,
    })
}

/// `fit_beta` over the linear-decay region of a band annotation.
pub fn fit_beta_in_band(
    spectrum: &Spectrum,
    bands: &BandAnnotation,
    method: FitMethod,
) -> Result<BandFit> {
    fit_beta(spectrum, bands.f_lo, bands.f_hi, method)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(values: Vec<f64>, dt: f64) -> TimeSeries {
        TimeSeries::new(values, dt, None, "spec").unwrap()
    }

    #[test]
    fn too_short_is_rejected() {
        let x = series(vec![1.0; 15], 120.0);
        assert!(matches!(
            periodogram(&x),
            Err(Error::TooShort { len: 15, min: 16 })
        ));
    }

    #[test]
    fn frequency_layout_excludes_dc_and_ends_at_nyquist() {
        let x = series((0..32).map(|i| (i % 5) as f64).collect(), 120.0);
        let s = periodogram(&x).unwrap();
        assert_eq!(s.len(), 16);
        let fs = 1.0 / 120.0;
        for (k, &f) in s.freqs().iter().enumerate() {
            assert!((f - (k + 1) as f64 * fs / 32.0).abs() < 1e-18);
        }
        assert!((s.freqs()[15] - fs / 2.0).abs() < 1e-18);
    }

    #[test]
    fn constant_series_has_zero_spectrum() {
        let x = series(vec![3.25; 64], 120.0);
        let s = periodogram(&x).unwrap();
        assert!(s.power().iter().all(|&p| p == 0.0));
    }

    #[test]
    fn sinusoid_concentrates_in_one_bin() {
        let n = 1024;
        let fs = 1.0 / 120.0;
        let bin = 32;
        let amp = 1.5;
        let x: Vec<f64> = (0..n)
            .map(|j| amp * (std::f64::consts::TAU * bin as f64 * j as f64 / n as f64).sin())
            .collect();
        let s = periodogram(&series(x, 120.0)).unwrap();
        let peak_idx = bin - 1; // freqs[k] = (k+1) fs/n
        let expect = amp * amp * n as f64 / (4.0 * fs) * 2.0;
        let got = s.power()[peak_idx];
        assert!(
            (got - expect).abs() / expect < 1e-10,
            "peak {got} vs {expect}"
        );
        for (k, &p) in s.power().iter().enumerate() {
            if k != peak_idx {
                assert!(p < 1e-10 * got, "bin {k} leaked {p}");
            }
        }
    }

    #[test]
    fn parseval_holds_to_1e9_relative() {
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = move || {
            // xorshift is plenty for test fixtures
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        for trial in 0..20 {
            let n = 64 + trial * 37;
            let x: Vec<f64> = (0..n).map(|_| next() * 10.0).collect();
            let ts = series(x, 120.0);
            let s = periodogram(&ts).unwrap();
            let mean = ts.values().iter().sum::<f64>() / n as f64;
            let var = ts
                .values()
                .iter()
                .map(|v| (v - mean) * (v - mean))
                .sum::<f64>()
                / n as f64;
            let total: f64 = s.power().iter().sum::<f64>() * s.df();
            assert!(
                (total - var).abs() <= 1e-9 * var,
                "trial {trial}: parseval {total} vs variance {var}"
            );
        }
    }

    #[test]
    fn default_bands_on_an_88_day_record() {
        // 88 days at dt = 120 s; check the linear band covers periods
        // [1920 s, 1209600 s] inclusive.
        let n = 88 * 720;
        let x: Vec<f64> = (0..n).map(|i| ((i * 37) % 11) as f64).collect();
        let s = periodogram(&series(x, 120.0)).unwrap();
        let bands = segment_bands(&s, &BandPolicy::default()).unwrap();
        let f_lo = 1.0 / 1_209_600.0;
        let f_hi = 1.0 / 1_920.0;
        let first = bands.linear.start;
        let last = bands.linear.end - 1;
        assert!(s.freqs()[first] >= f_lo);
        assert!(first == 0 || s.freqs()[first - 1] < f_lo);
        assert!(s.freqs()[last] <= f_hi);
        assert!(last + 1 == s.len() || s.freqs()[last + 1] > f_hi);
    }

    #[test]
    fn fourteen_day_record_low_band() {
        let n = 14 * 720;
        let x: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64).collect();
        let s = periodogram(&series(x, 120.0)).unwrap();
        // Absolute policy: the fundamental sits exactly on the 14-day
        // boundary, which is inclusive to the linear region.
        let bands = segment_bands(&s, &BandPolicy::default()).unwrap();
        assert!(bands.low.is_empty());
        // Harmonics policy: exactly the first six bins.
        let bands = segment_bands(
            &s,
            &BandPolicy::Harmonics {
                count: 6,
                short_period_seconds: SHORT_PERIOD_SECONDS,
            },
        )
        .unwrap();
        assert_eq!(bands.low, 0..6);
        assert_eq!(bands.band_of(5), Band::LowFrequency);
        assert_eq!(bands.band_of(6), Band::LinearDecay);
    }

    #[test]
    fn short_record_needs_custom_bands() {
        let x: Vec<f64> = (0..720).map(|i| (i % 9) as f64).collect();
        let s = periodogram(&series(x, 120.0)).unwrap();
        assert!(matches!(
            segment_bands(&s, &BandPolicy::default()),
            Err(Error::RecordTooShortForBands { .. })
        ));
        let bands = segment_bands(&s, &BandPolicy::Full).unwrap();
        assert_eq!(bands.linear, 0..s.len());
        assert!(bands.low.is_empty() && bands.high.is_empty());
    }

    #[test]
    fn exact_power_law_recovers_beta_to_1e12() {
        let n = 4096;
        let fs = 1.0 / 120.0;
        let freqs: Vec<f64> = (0..n / 2).map(|k| (k + 1) as f64 * fs / n as f64).collect();
        let power: Vec<f64> = freqs.iter().map(|f| f.powf(-1.3)).collect();
        let s = Spectrum::from_parts(freqs, power, fs, n).unwrap();
        let fit = fit_beta(&s, 1e-6, 1e-2, FitMethod::Ols).unwrap();
        assert!(
            (fit.beta - 1.3).abs() < 1e-12,
            "beta {} off target",
            fit.beta
        );
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        // LAD agrees on exactly collinear points.
        let lad = fit_beta(&s, 1e-6, 1e-2, FitMethod::Lad).unwrap();
        assert!((lad.beta - 1.3).abs() < 1e-9);
    }

    #[test]
    fn zero_power_bins_are_dropped_and_counted() {
        let n = 64;
        let fs = 1.0;
        let freqs: Vec<f64> = (0..32).map(|k| (k + 1) as f64 * fs / n as f64).collect();
        let mut power: Vec<f64> = freqs.iter().map(|f| f.powf(-0.5)).collect();
        power[3] = 0.0;
        power[17] = 0.0;
        let s = Spectrum::from_parts(freqs, power, fs, n).unwrap();
        let fit = fit_beta(&s, 0.0, 1.0, FitMethod::Ols).unwrap();
        assert_eq!(fit.dropped_bins, 2);
        assert_eq!(fit.n_bins, 30);
        assert!((fit.beta - 0.5).abs() < 1e-12);
    }

    #[test]
    fn too_few_bins_is_an_error() {
        let freqs: Vec<f64> = (0..32).map(|k| (k + 1) as f64 / 64.0).collect();
        let power: Vec<f64> = freqs.iter().map(|f| f.powf(-1.0)).collect();
        let s = Spectrum::from_parts(freqs, power, 1.0, 64).unwrap();
        assert!(matches!(
            fit_beta(&s, 0.0, 0.1, FitMethod::Ols),
            Err(Error::TooFewBins { .. })
        ));
    }

    #[test]
    fn welch_reduces_bin_scatter_on_white_noise() {
        let spec = crate::synth::NoiseSpec::new(crate::synth::NoiseKind::White, 1 << 13, 3);
        let x = crate::synth::gen_white(&spec).unwrap();
        let raw = periodogram(&x).unwrap();
        let welch = welch_periodogram(&x, 512).unwrap();
        let cv = |p: &[f64]| {
            let m = p.iter().sum::<f64>() / p.len() as f64;
            let v = p.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / p.len() as f64;
            v.sqrt() / m
        };
        assert!(cv(welch.power()) < 0.5 * cv(raw.power()));
    }
}
