//! Power-law exponent estimation in log-log space.
//!
//! The decay exponent of an eigenspectrum is the slope of `log(variance)`
//! against `log(index)`, fitted over a component window (by default indices
//! 10 through 50, 1-based inclusive) with Huber regression for robustness
//! to outliers. An OLS path is kept as the reference estimator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::stream_rng;
use crate::spectrum::EigenSpectrum;
use rand::Rng;

pub const DEFAULT_WINDOW: (usize, usize) = (10, 50);
/// 95%-efficiency Huber threshold.
pub const DEFAULT_DELTA: f64 = 1.345;

const IRLS_TOL: f64 = 1e-10;
const IRLS_MAX_ITER: usize = 100;

/// Result of a log-log slope fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Slope in log-log space; negative for decaying spectra.
    pub alpha: f64,
    /// Fitted log-variance at component index 1.
    pub intercept: f64,
    /// 1-based inclusive component window the points came from.
    pub window: (usize, usize),
    #[serde(rename = "delta")]
    pub huber_delta: f64,
    /// Root-mean-square residual in log space.
    pub rmse: f64,
    pub n_points: usize,
    pub ci95: Option<(f64, f64)>,
    /// False when IRLS hit its iteration budget.
    #[serde(default = "default_true")]
    pub converged: bool,
}

fn default_true() -> bool {
    true
}

/// Residual scale handling for the IRLS weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    /// Fixed scale of 1 (deterministic default).
    #[default]
    Fixed,
    /// Median-absolute-deviation rescaling, recomputed every iteration.
    Mad,
}

/// Log-log coordinates of a spectrum window, with clipping/filter flags.
#[derive(Debug, Clone)]
pub struct LogLogPoints {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub window: (usize, usize),
    /// True when the requested window exceeded the spectrum length.
    pub clipped: bool,
    /// Number of non-positive variances dropped from the window.
    pub dropped_zeros: usize,
}

impl LogLogPoints {
    pub fn from_xy(x: Vec<f64>, y: Vec<f64>, window: (usize, usize)) -> Self {
        LogLogPoints { x, y, window, clipped: false, dropped_zeros: 0 }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

/// Natural-log coordinates `(log i, log variance_i)` over `window`.
/// Windows longer than the spectrum are clipped; zero variances dropped.
pub fn loglog_points(spectrum: &EigenSpectrum, window: (usize, usize)) -> Result<LogLogPoints> {
    let (lo, hi) = window;
    if lo < 1 || lo >= hi {
        return Err(Error::value(format!("bad window [{lo}, {hi}]")));
    }
    let n = spectrum.variances.len();
    if lo > n {
        return Err(Error::value(format!(
            "window starts at {lo} but spectrum has {n} components"
        )));
    }
    let clipped = hi > n;
    let hi_eff = hi.min(n);
    let mut x = Vec::new();
    let mut y = Vec::new();
    let mut dropped = 0usize;
    for i in lo..=hi_eff {
        let v = spectrum.variances[i - 1];
        if v > 0.0 {
            x.push((i as f64).ln());
            y.push(v.ln());
        } else {
            dropped += 1;
        }
    }
    if x.is_empty() {
        return Err(Error::value("window empty after dropping zero variances"));
    }
    Ok(LogLogPoints { x, y, window: (lo, hi_eff), clipped, dropped_zeros: dropped })
}

/// Huber slope fit by iteratively reweighted least squares.
pub fn huber_fit(points: &LogLogPoints, delta: f64) -> Result<PowerLawFit> {
    huber_fit_with(points, delta, Scale::Fixed)
}

pub fn huber_fit_with(points: &LogLogPoints, delta: f64, scale: Scale) -> Result<PowerLawFit> {
    if points.len() < 3 {
        return Err(Error::value("huber fit needs at least 3 points"));
    }
    if !(delta > 0.0) {
        return Err(Error::value("delta must be positive"));
    }
    let (x, y) = (&points.x, &points.y);
    let n = x.len();

    let (mut a, mut b) = ols_slope_intercept(x, y)?;
    let mut converged = false;
    let mut weights = vec![1.0; n];
    for _ in 0..IRLS_MAX_ITER {
        let residuals: Vec<f64> = (0..n).map(|i| y[i] - a * x[i] - b).collect();
        let sigma = match scale {
            Scale::Fixed => 1.0,
            Scale::Mad => mad_scale(&residuals).max(1e-12),
        };
        for i in 0..n {
            let r = residuals[i].abs();
            weights[i] = if r <= delta * sigma { 1.0 } else { delta * sigma / r };
        }
        let (na, nb) = weighted_ols(x, y, &weights)?;
        let change = (na - a).abs().max((nb - b).abs());
        a = na;
        b = nb;
        if change < IRLS_TOL {
            converged = true;
            break;
        }
    }
    Ok(finish_fit(points, a, b, delta, converged))
}

/// Ordinary least squares, the reference estimator.
pub fn ols_fit(points: &LogLogPoints) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::value("ols fit needs at least 2 points"));
    }
    let (a, b) = ols_slope_intercept(&points.x, &points.y)?;
    Ok(finish_fit(points, a, b, f64::INFINITY, true))
}

fn finish_fit(points: &LogLogPoints, a: f64, b: f64, delta: f64, converged: bool) -> PowerLawFit {
    let n = points.len();
    let ss: f64 = (0..n).map(|i| (points.y[i] - a * points.x[i] - b).powi(2)).sum();
    PowerLawFit {
        alpha: a,
        intercept: b,
        window: points.window,
        huber_delta: delta,
        rmse: (ss / n as f64).sqrt(),
        n_points: n,
        ci95: None,
        converged,
    }
}

fn ols_slope_intercept(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    weighted_ols(x, y, &vec![1.0; x.len()])
}

fn weighted_ols(x: &[f64], y: &[f64], w: &[f64]) -> Result<(f64, f64)> {
    let sw: f64 = w.iter().sum();
    let sx: f64 = x.iter().zip(w).map(|(x, w)| w * x).sum();
    let sy: f64 = y.iter().zip(w).map(|(y, w)| w * y).sum();
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * x * x).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * x * y).sum();
    let det = sw * sxx - sx * sx;
    if det.abs() < 1e-300 {
        return Err(Error::value("degenerate design (all x equal)"));
    }
    let slope = (sw * sxy - sx * sy) / det;
    let intercept = (sxx * sy - sx * sxy) / det;
    Ok((slope, intercept))
}

fn mad_scale(residuals: &[f64]) -> f64 {
    let med = median(residuals);
    let devs: Vec<f64> = residuals.iter().map(|r| (r - med).abs()).collect();
    1.4826 * median(&devs)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Percentile bootstrap (2.5/97.5) of the Huber slope over resampled pairs.
/// Each replicate draws from its own counter-derived RNG stream.
pub fn bootstrap_ci(
    spectrum: &EigenSpectrum,
    window: (usize, usize),
    n_boot: usize,
    seed: u64,
    delta: f64,
) -> Result<(f64, f64)> {
    if n_boot == 0 {
        return Err(Error::value("n_boot must be positive"));
    }
    let points = loglog_points(spectrum, window)?;
    let n = points.len();
    if n < 3 {
        return Err(Error::value("too few points to bootstrap"));
    }
    let mut alphas = Vec::with_capacity(n_boot);
    for rep in 0..n_boot {
        let mut rng = stream_rng(seed, rep as u64 + 1);
        let mut x = Vec::with_capacity(n);
        let mut y = Vec::with_capacity(n);
        for _ in 0..n {
            let i = rng.random_range(0..n);
            x.push(points.x[i]);
            y.push(points.y[i]);
        }
        let resampled = LogLogPoints::from_xy(x, y, points.window);
        // Degenerate resamples (all same point) are skipped.
        if let Ok(fit) = huber_fit(&resampled, delta) {
            alphas.push(fit.alpha);
        }
    }
    if alphas.is_empty() {
        return Err(Error::value("all bootstrap replicates degenerate"));
    }
    alphas.sort_by(|a, b| a.partial_cmp(b).unwrap());
    Ok((percentile(&alphas, 2.5), percentile(&alphas, 97.5)))
}

/// Linear-interpolation percentile on sorted data.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let rank = p / 100.0 * (n - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    let frac = rank - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}
