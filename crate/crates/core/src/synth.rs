//! Seeded synthetic-signal generators with known scaling exponents.
//!
//! These serve as ground truth for the spectral and DFA estimators: white
//! noise (β = 0, α = 0.5), power-law noise for any β in [0, 2], exact
//! fractional Gaussian noise (α ≈ H, β = 2H − 1) via circulant embedding,
//! its running sum (fractional Brownian motion, α ≈ H + 1), and a diurnal
//! synthetic-corridor queue generator for end-to-end runs.
//!
//! All generators are pure functions of their spec: the RNG is ChaCha8
//! seeded from the spec's `seed`, so identical specs produce bit-identical
//! output on any platform with IEEE-754 f64 semantics. (The FFT backend
//! may pick SIMD kernels per architecture; same-architecture runs are
//! always reproducible, and cross-architecture differences, if any, stay
//! within rounding.)

use chrono::{DateTime, FixedOffset};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Noise family selector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    /// Independent standard Gaussian samples.
    White,
    /// Spectral synthesis: Gaussian spectrum shaped by f^(−beta/2).
    Powerlaw { beta: f64 },
    /// Exact fractional Gaussian noise (stationary), Hurst in (0, 1).
    Fgn { hurst: f64 },
    /// Cumulative sum of fGn, first sample zero (nonstationary).
    Fbm { hurst: f64 },
}

/// Full description of a synthetic noise series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    #[serde(flatten)]
    pub kind: NoiseKind,
    pub length: usize,
    pub seed: u64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_dt")]
    pub dt_seconds: f64,
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_dt() -> f64 {
    120.0
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, length: usize, seed: u64) -> Self {
        Self {
            kind,
            length,
            seed,
            amplitude: default_amplitude(),
            dt_seconds: default_dt(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(Error::InvalidParameter(
                "amplitude must be a finite non-negative real".into(),
            ));
        }
        if !(self.dt_seconds > 0.0) {
            return Err(Error::InvalidParameter(
                "dt_seconds must be positive".into(),
            ));
        }
        match self.kind {
            NoiseKind::White => {
                if self.length == 0 {
                    return Err(Error::InvalidParameter("length must be positive".into()));
                }
            }
            NoiseKind::Powerlaw { beta } => {
                if !(0.0..=2.0).contains(&beta) {
                    return Err(Error::InvalidParameter(format!(
                        "powerlaw beta must lie in [0, 2], got {beta}"
                    )));
                }
                if self.length < 2 {
                    return Err(Error::InvalidParameter(
                        "powerlaw length must be at least 2".into(),
                    ));
                }
            }
            NoiseKind::Fgn { hurst } => {
                validate_hurst(hurst)?;
                if self.length < 2 {
                    return Err(Error::InvalidParameter(
                        "fgn length must be at least 2 for circulant embedding".into(),
                    ));
                }
            }
            NoiseKind::Fbm { hurst } => {
                validate_hurst(hurst)?;
                if self.length < 3 {
                    return Err(Error::InvalidParameter(
                        "fbm length must be at least 3 (its increments need length >= 2)".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    fn label(&self) -> String {
        match self.kind {
            NoiseKind::White => format!("white_seed{}", self.seed),
            NoiseKind::Powerlaw { beta } => format!("powerlaw{beta}_seed{}", self.seed),
            NoiseKind::Fgn { hurst } => format!("fgn{hurst}_seed{}", self.seed),
            NoiseKind::Fbm { hurst } => format!("fbm{hurst}_seed{}", self.seed),
        }
    }
}

fn validate_hurst(hurst: f64) -> Result<()> {
    if !(hurst > 0.0 && hurst < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "hurst must lie strictly inside (0, 1), got {hurst}"
        )));
    }
    Ok(())
}

/// Deterministic generator stream: `seed` selects the sequence, `stream`
/// splits it into independent substreams (one per intersection in
/// [`gen_corridor`], stream = intersection index).
fn rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(stream);
    r
}

/// Dispatch on `spec.kind`.
pub fn generate(spec: &NoiseSpec) -> Result<TimeSeries> {
    match spec.kind {
        NoiseKind::White => gen_white(spec),
        NoiseKind::Powerlaw { .. } => gen_powerlaw(spec),
        NoiseKind::Fgn { .. } => gen_fgn(spec),
        NoiseKind::Fbm { .. } => gen_fbm(spec),
    }
}

/// I.i.d. standard Gaussian samples scaled by `amplitude`.
pub fn gen_white(spec: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let mut r = rng(spec.seed, 0);
    let values: Vec<f64> = (0..spec.length)
        .map(|_| spec.amplitude * r.sample::<f64, _>(StandardNormal))
        .collect();
    TimeSeries::new(values, spec.dt_seconds, None, spec.label())
}

/// Exact fractional Gaussian noise by circulant embedding (Davies–Harte).
///
/// Unit variance before `amplitude` scaling, with autocovariance
/// γ(k) = ½(|k+1|^{2H} − 2|k|^{2H} + |k−1|^{2H}).
pub fn gen_fgn(spec: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let hurst = match spec.kind {
        NoiseKind::Fgn { hurst } => hurst,
        _ => {
            return Err(Error::InvalidParameter(
                "gen_fgn requires a spec with kind = fgn".into(),
            ))
        }
    };
    let mut r = rng(spec.seed, 0);
    let mut values = fgn_davies_harte(spec.length, hurst, &mut r)?;
    for v in &mut values {
        *v *= spec.amplitude;
    }
    TimeSeries::new(values, spec.dt_seconds, None, spec.label())
}

/// Fractional Brownian motion: zero followed by the running sum of the
/// fGn increment series of length `length − 1` drawn from the same seed.
/// Differencing the output therefore reproduces that increment series
/// exactly.
pub fn gen_fbm(spec: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let hurst = match spec.kind {
        NoiseKind::Fbm { hurst } => hurst,
        _ => {
            return Err(Error::InvalidParameter(
                "gen_fbm requires a spec with kind = fbm".into(),
            ))
        }
    };
    let incr_spec = NoiseSpec {
        kind: NoiseKind::Fgn { hurst },
        length: spec.length - 1,
        ..spec.clone()
    };
    let increments = gen_fgn(&incr_spec)?;
    let mut values = Vec::with_capacity(spec.length);
    let mut acc = 0.0;
    values.push(0.0);
    for g in increments.values() {
        acc += g;
        values.push(acc);
    }
    TimeSeries::new(values, spec.dt_seconds, None, spec.label())
}

/// Power-law noise via spectral synthesis: a Hermitian white Gaussian
/// spectrum shaped by k^(−beta/2) is inverse-transformed and mean-removed.
/// `amplitude` sets the overall scale.
pub fn gen_powerlaw(spec: &NoiseSpec) -> Result<TimeSeries> {
    spec.validate()?;
    let beta = match spec.kind {
        NoiseKind::Powerlaw { beta } => beta,
        _ => {
            return Err(Error::InvalidParameter(
                "gen_powerlaw requires a spec with kind = powerlaw".into(),
            ))
        }
    };
    let n = spec.length;
    let mut r = rng(spec.seed, 0);
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let half = n / 2;
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..=half {
        let mag = (k as f64).powf(-beta / 2.0);
        if n % 2 == 0 && k == half {
            // Nyquist bin must stay real for a real-valued series.
            let z: f64 = r.sample(StandardNormal);
            spectrum[k] = Complex::new(mag * z, 0.0);
        } else {
            let a: f64 = r.sample(StandardNormal);
            let b: f64 = r.sample(StandardNormal);
            spectrum[k] = Complex::new(mag * a * inv_sqrt2, mag * b * inv_sqrt2);
            spectrum[n - k] = spectrum[k].conj();
        }
    }
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(n).process(&mut spectrum);

    let scale = spec.amplitude / (n as f64).sqrt();
    let mut values: Vec<f64> = spectrum.iter().map(|c| c.re * scale).collect();
    let mean = values.iter().sum::<f64>() / n as f64;
    for v in &mut values {
        *v -= mean;
    }
    TimeSeries::new(values, spec.dt_seconds, None, spec.label())
}

/// Core Davies–Harte sampler: unit-variance fGn of length `n`.
fn fgn_davies_harte(n: usize, hurst: f64, r: &mut ChaCha8Rng) -> Result<Vec<f64>> {
    debug_assert!(n >= 2);
    let m = 2 * n;
    let two_h = 2.0 * hurst;
    let gamma = |k: f64| 0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).abs().powf(two_h));

    // First row of the circulant matrix: gamma(0..=n) then mirrored back.
    let mut row: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        row.push(Complex::new(gamma(k as f64), 0.0));
    }
    for k in (1..n).rev() {
        row.push(Complex::new(gamma(k as f64), 0.0));
    }

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(m);
    forward.process(&mut row);

    // Eigenvalues are real and non-negative for fGn; tolerate rounding
    // noise but fail loudly on anything structurally negative.
    let max_eig = row.iter().map(|c| c.re).fold(0.0f64, f64::max);
    let tol = -1e-9 * max_eig.max(1.0);
    let mut eig = Vec::with_capacity(m);
    for c in &row {
        if c.re < tol {
            return Err(Error::InvalidParameter(format!(
                "circulant embedding produced a negative eigenvalue ({}) for hurst {hurst}",
                c.re
            )));
        }
        eig.push(c.re.max(0.0));
    }

    // Hermitian Gaussian vector with the eigenvalue weights. Draw order is
    // fixed: z0, z_n, then (a_k, b_k) for k = 1..n-1.
    let mf = m as f64;
    let mut w = vec![Complex::new(0.0, 0.0); m];
    let z0: f64 = r.sample(StandardNormal);
    let zn: f64 = r.sample(StandardNormal);
    w[0] = Complex::new((eig[0] / mf).sqrt() * z0, 0.0);
    w[n] = Complex::new((eig[n] / mf).sqrt() * zn, 0.0);
    for k in 1..n {
        let a: f64 = r.sample(StandardNormal);
        let b: f64 = r.sample(StandardNormal);
        let s = (eig[k] / (2.0 * mf)).sqrt();
        w[k] = Complex::new(s * a, s * b);
        w[m - k] = w[k].conj();
    }

    forward.process(&mut w);
    Ok(w[..n].iter().map(|c| c.re).collect())
}

fn default_t0() -> DateTime<FixedOffset> {
    // A Monday, so day 0 of every corridor run starts a five-day work week.
    DateTime::parse_from_rfc3339("2018-01-01T00:00:00-05:00").unwrap()
}

/// Diurnal demand shape: two Gaussian peaks over the day, weekday peaks
/// taller than weekend peaks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemandProfile {
    pub morning_peak_hour: f64,
    pub morning_sigma_hours: f64,
    pub evening_peak_hour: f64,
    pub evening_sigma_hours: f64,
    /// Evening peak height relative to the morning peak.
    pub evening_scale: f64,
    /// Weekday peak demand as a fraction of capacity.
    pub weekday_peak_fraction: f64,
    /// Weekend amplitude relative to weekday amplitude.
    pub weekend_fraction: f64,
}

impl Default for DemandProfile {
    fn default() -> Self {
        Self {
            morning_peak_hour: 8.0,
            morning_sigma_hours: 1.5,
            evening_peak_hour: 17.5,
            evening_sigma_hours: 2.0,
            evening_scale: 0.9,
            weekday_peak_fraction: 0.85,
            weekend_fraction: 0.5,
        }
    }
}

impl DemandProfile {
    /// Unit-amplitude shape at an hour-of-day.
    fn shape(&self, hour: f64) -> f64 {
        let m = (hour - self.morning_peak_hour) / self.morning_sigma_hours;
        let e = (hour - self.evening_peak_hour) / self.evening_sigma_hours;
        (-0.5 * m * m).exp() + self.evening_scale * (-0.5 * e * e).exp()
    }
}

/// Synthetic corridor configuration: `n_intersections` independent queue
/// series over `n_days` starting Monday 00:00 at `t0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorridorSpec {
    pub n_days: usize,
    #[serde(default = "default_intersections")]
    pub n_intersections: usize,
    #[serde(default = "default_dt")]
    pub dt_seconds: f64,
    #[serde(default = "default_capacity")]
    pub capacity: f64,
    #[serde(default)]
    pub demand: DemandProfile,
    /// fGn noise riding on the demand profile. `noise.length` and
    /// `noise.seed` are derived from the corridor (record length and
    /// `seed` + per-intersection stream) and ignored if set.
    #[serde(default = "default_corridor_noise")]
    pub noise: NoiseSpec,
    /// Noise modulation floor: the fGn amplitude follows demand but never
    /// drops below this fraction of its peak value.
    #[serde(default = "default_noise_floor")]
    pub noise_floor_fraction: f64,
    pub seed: u64,
    #[serde(default = "default_t0")]
    pub t0: DateTime<FixedOffset>,
}

fn default_intersections() -> usize {
    3
}

fn default_capacity() -> f64 {
    40.0
}

fn default_noise_floor() -> f64 {
    0.25
}

fn default_corridor_noise() -> NoiseSpec {
    NoiseSpec {
        kind: NoiseKind::Fgn { hurst: 0.8 },
        length: 0,
        seed: 0,
        amplitude: 6.0,
        dt_seconds: default_dt(),
    }
}

impl CorridorSpec {
    pub fn new(n_days: usize, seed: u64) -> Self {
        Self {
            n_days,
            n_intersections: default_intersections(),
            dt_seconds: default_dt(),
            capacity: default_capacity(),
            demand: DemandProfile::default(),
            noise: default_corridor_noise(),
            noise_floor_fraction: default_noise_floor(),
            seed,
            t0: default_t0(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_days == 0 || self.n_intersections == 0 {
            return Err(Error::InvalidParameter(
                "corridor needs at least one day and one intersection".into(),
            ));
        }
        if !(self.dt_seconds > 0.0) {
            return Err(Error::InvalidParameter("dt_seconds must be positive".into()));
        }
        if !(self.capacity >= 0.0) || !self.capacity.is_finite() {
            return Err(Error::InvalidParameter(
                "capacity must be finite and non-negative".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.noise_floor_fraction) {
            return Err(Error::InvalidParameter(
                "noise_floor_fraction must lie in [0, 1]".into(),
            ));
        }
        match self.noise.kind {
            NoiseKind::Fgn { hurst } => validate_hurst(hurst)?,
            _ => {
                return Err(Error::InvalidParameter(
                    "corridor noise must be fgn".into(),
                ))
            }
        }
        if !(self.noise.amplitude >= 0.0) {
            return Err(Error::InvalidParameter(
                "noise amplitude must be non-negative".into(),
            ));
        }
        Ok(())
    }

    fn samples_per_day(&self) -> usize {
        (86_400.0 / self.dt_seconds).round() as usize
    }

    /// Deterministic demand value at sample `i` (no noise, already scaled
    /// to capacity units).
    pub fn demand_at(&self, i: usize) -> f64 {
        let spd = self.samples_per_day();
        let hour = (i % spd) as f64 * self.dt_seconds / 3600.0;
        // Day-of-week follows the wall-clock anchor (a Monday by default).
        let dow = crate::timeseries::day_type(self.t0, i, self.dt_seconds);
        let weekend = dow == crate::timeseries::DayType::Weekend;
        let amp = self.capacity
            * self.demand.weekday_peak_fraction
            * if weekend { self.demand.weekend_fraction } else { 1.0 };
        amp * self.demand.shape(hour)
    }
}

/// Generate one queue-length series per intersection:
/// `clip(demand + amplitude * modulation * fgn, 0, capacity)`, where the
/// modulation follows demand down to a configurable floor. Intersection
/// `i` draws from RNG stream `i` of the corridor seed.
pub fn gen_corridor(spec: &CorridorSpec) -> Result<Vec<TimeSeries>> {
    spec.validate()?;
    let n = spec.n_days * spec.samples_per_day();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "corridor record is too short".into(),
        ));
    }
    let hurst = match spec.noise.kind {
        NoiseKind::Fgn { hurst } => hurst,
        _ => unreachable!("validated above"),
    };

    let demand: Vec<f64> = (0..n).map(|i| spec.demand_at(i)).collect();
    let demand_peak = demand.iter().fold(0.0f64, |a, &b| a.max(b));

    let mut out = Vec::with_capacity(spec.n_intersections);
    for intersection in 0..spec.n_intersections {
        let mut r = rng(spec.seed, intersection as u64);
        let noise = if spec.noise.amplitude == 0.0 {
            vec![0.0; n]
        } else {
            fgn_davies_harte(n, hurst, &mut r)?
        };
        let values: Vec<f64> = demand
            .iter()
            .zip(&noise)
            .map(|(&d, &g)| {
                let modulation = if demand_peak > 0.0 {
                    spec.noise_floor_fraction
                        + (1.0 - spec.noise_floor_fraction) * d / demand_peak
                } else {
                    spec.noise_floor_fraction
                };
                (d + spec.noise.amplitude * modulation * g).clamp(0.0, spec.capacity)
            })
            .collect();
        out.push(TimeSeries::new(
            values,
            spec.dt_seconds,
            Some(spec.t0),
            format!("intersection_{:02}", intersection + 1),
        )?);
    }
    Ok(out)
}
