//! Small regression helpers shared by the spectral and DFA estimators.

use crate::error::{Error, Result};

/// Straight-line fit y = slope·x + intercept with an R² quality measure.
#[derive(Debug, Clone, Copy)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares on (x, y) pairs.
pub fn ols_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() {
        return Err(Error::InvalidParameter(format!(
            "mismatched fit inputs: {} x values vs {} y values",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::InvalidParameter(
            "line fit needs at least two points".into(),
        ));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        sxx += (xi - mx) * (xi - mx);
        sxy += (xi - mx) * (yi - my);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidParameter(
            "line fit is degenerate: all x values equal".into(),
        ));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    Ok(LineFit {
        slope,
        intercept,
        r_squared: r_squared(x, y, slope, intercept),
    })
}

/// Least-absolute-deviations line via iteratively reweighted least squares.
///
/// Used as the optional robust alternative to `ols_line` when fitting
/// through spectra with strong harmonic spikes.
pub fn lad_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let mut fit = ols_line(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|&xi| (xi - mx) * (xi - mx)).sum();
    // Residual floor keeps weights bounded once points land on the line.
    let eps = 1e-8 * (sxx / n).sqrt().max(1e-300);
    for _ in 0..100 {
        let mut sw = 0.0;
        let mut swx = 0.0;
        let mut swy = 0.0;
        let mut swxx = 0.0;
        let mut swxy = 0.0;
        for (&xi, &yi) in x.iter().zip(y) {
            let r = (yi - fit.slope * xi - fit.intercept).abs().max(eps);
            let w = 1.0 / r;
            sw += w;
            swx += w * xi;
            swy += w * yi;
            swxx += w * xi * xi;
            swxy += w * xi * yi;
        }
        let denom = sw * swxx - swx * swx;
        if denom.abs() < 1e-300 {
            break;
        }
        let slope = (sw * swxy - swx * swy) / denom;
        let intercept = (swy - slope * swx) / sw;
        let moved = (slope - fit.slope).abs() + (intercept - fit.intercept).abs();
        fit.slope = slope;
        fit.intercept = intercept;
        if moved < 1e-12 {
            break;
        }
    }
    fit.r_squared = r_squared(x, y, fit.slope, fit.intercept);
    Ok(fit)
}

fn r_squared(x: &[f64], y: &[f64], slope: f64, intercept: f64) -> f64 {
    let n = y.len() as f64;
    let my = y.iter().sum::<f64>() / n;
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        let r = yi - slope * xi - intercept;
        ss_res += r * r;
        ss_tot += (yi - my) * (yi - my);
    }
    if ss_tot == 0.0 {
        // All y equal: a flat line explains everything.
        return 1.0;
    }
    1.0 - ss_res / ss_tot
}

/// Replace `segment` by the residuals of its least-squares polynomial fit
/// of the given degree, evaluated against sample index.
///
/// The index is mapped to [-1, 1] before building the normal equations so
/// the system stays well conditioned for segments of several thousand
/// samples.
pub fn detrend_poly(segment: &mut [f64], degree: usize) {
    let n = segment.len();
    debug_assert!(n >= degree + 2, "segment shorter than degree + 2");
    let dim = degree + 1;
    let half = (n as f64 - 1.0) / 2.0;
    let scale = if half > 0.0 { 1.0 / half } else { 1.0 };

    // Normal equations G c = b over the scaled basis u^0 .. u^degree.
    let mut g = vec![0.0f64; dim * dim];
    let mut b = vec![0.0f64; dim];
    let mut powers = vec![0.0f64; 2 * dim - 1];
    for (i, &yi) in segment.iter().enumerate() {
        let u = (i as f64 - half) * scale;
        let mut p = 1.0;
        for item in powers.iter_mut() {
            *item += p;
            p *= u;
        }
        // `powers` accumulation above adds u^0..u^(2d); b needs u^k * y.
        let mut p = 1.0;
        for item in b.iter_mut() {
            *item += p * yi;
            p *= u;
        }
    }
    for r in 0..dim {
        for c in 0..dim {
            g[r * dim + c] = powers[r + c];
        }
    }
    let coeffs = solve_dense(&mut g, &mut b, dim);
    for (i, yi) in segment.iter_mut().enumerate() {
        let u = (i as f64 - half) * scale;
        let mut fitted = 0.0;
        let mut p = 1.0;
        for &c in &coeffs {
            fitted += c * p;
            p *= u;
        }
        *yi -= fitted;
    }
}

/// Gaussian elimination with partial pivoting for the tiny (degree+1)
/// normal systems produced by `detrend_poly`.
fn solve_dense(a: &mut [f64], b: &mut [f64], n: usize) -> Vec<f64> {
    for col in 0..n {
        let mut pivot = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[pivot * n + col].abs() {
                pivot = r;
            }
        }
        if pivot != col {
            for c in 0..n {
                a.swap(col * n + c, pivot * n + c);
            }
            b.swap(col, pivot);
        }
        let d = a[col * n + col];
        if d == 0.0 {
            continue; // singular in theory only for degenerate bases
        }
        for r in col + 1..n {
            let f = a[r * n + col] / d;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= f * a[col * n + c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0f64; n];
    for col in (0..n).rev() {
        let mut s = b[col];
        for c in col + 1..n {
            s -= a[col * n + c] * x[c];
        }
        let d = a[col * n + col];
        x[col] = if d == 0.0 { 0.0 } else { s / d };
    }
    x
}

/// Pearson correlation coefficient, or `None` when either side has zero
/// variance (the coefficient is undefined there, not zero).
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    let mut sab = 0.0;
    for (&ai, &bi) in a.iter().zip(b) {
        saa += (ai - ma) * (ai - ma);
        sbb += (bi - mb) * (bi - mb);
        sab += (ai - ma) * (bi - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ols_recovers_exact_line() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let fit = ols_line(&x, &y).unwrap();
        assert!((fit.slope - 2.5).abs() < 1e-12);
        assert!((fit.intercept + 1.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lad_matches_ols_on_collinear_points() {
        let x = [0.0, 1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -1.3 * v + 0.4).collect();
        let fit = lad_line(&x, &y).unwrap();
        assert!((fit.slope + 1.3).abs() < 1e-9);
    }

    #[test]
    fn lad_shrugs_off_one_gross_outlier() {
        let x: Vec<f64> = (0..21).map(|i| i as f64).collect();
        let mut y: Vec<f64> = x.iter().map(|v| 0.7 * v + 2.0).collect();
        y[10] += 1000.0;
        let fit = lad_line(&x, &y).unwrap();
        assert!((fit.slope - 0.7).abs() < 1e-6, "slope {}", fit.slope);
    }

    #[test]
    fn detrend_linear_removes_a_ramp() {
        let mut seg: Vec<f64> = (0..100).map(|i| 3.0 * i as f64 + 7.0).collect();
        detrend_poly(&mut seg, 1);
        for r in seg {
            assert!(r.abs() < 1e-9, "residual {r}");
        }
    }

    #[test]
    fn detrend_quadratic_removes_a_parabola() {
        let mut seg: Vec<f64> = (0..64)
            .map(|i| {
                let t = i as f64;
                0.5 * t * t - 4.0 * t + 11.0
            })
            .collect();
        detrend_poly(&mut seg, 2);
        for r in seg {
            assert!(r.abs() < 1e-7, "residual {r}");
        }
    }

    #[test]
    fn pearson_undefined_on_zero_variance() {
        assert!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_none());
        let got = pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap();
        assert!((got - 1.0).abs() < 1e-12);
    }
}
