//! Hurst exponent estimators: Peng (variance of residuals), periodogram and
//! boxed periodogram, plus the median-of-three combination.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Shortest series any estimator accepts.
pub const MIN_HURST_SAMPLES: usize = 256;

const H_FLOOR: f64 = 0.01;
const H_CEIL: f64 = 0.99;

/// Estimator settings. The defaults are the ones used throughout the crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstConfig {
    /// Smallest Peng block size.
    pub peng_min_block: usize,
    /// Number of log-spaced Peng block sizes between `peng_min_block` and n/4.
    pub peng_block_sizes: usize,
    /// Fraction of the nonzero Fourier frequencies used in the regressions.
    pub low_frequency_fraction: f64,
    /// Number of log-spaced boxes for the boxed periodogram.
    pub periodogram_boxes: usize,
}

impl Default for HurstConfig {
    fn default() -> Self {
        Self {
            peng_min_block: 16,
            peng_block_sizes: 10,
            low_frequency_fraction: 0.2,
            periodogram_boxes: 60,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HurstEstimates {
    pub peng: f64,
    pub periodogram: f64,
    pub boxed_periodogram: f64,
    pub median: f64,
}

fn check_series(series: &[f64]) -> Result<f64, StatsError> {
    if series.len() < MIN_HURST_SAMPLES {
        return Err(StatsError::TooFewSamples {
            needed: MIN_HURST_SAMPLES,
            found: series.len(),
        });
    }
    if series.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    if series.iter().all(|&v| v == series[0]) {
        return Err(StatsError::DegenerateSeries);
    }
    Ok(series.iter().sum::<f64>() / series.len() as f64)
}

/// Ordinary least squares slope of `y` on `x`.
pub(crate) fn ols_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    sxy / sxx
}

fn clamp_h(h: f64) -> f64 {
    h.clamp(H_FLOOR, H_CEIL)
}

fn log_spaced_sizes(lo: usize, hi: usize, count: usize) -> Vec<usize> {
    let (lo_f, hi_f) = (lo as f64, hi as f64);
    let mut sizes: Vec<usize> = (0..count)
        .map(|j| {
            let frac = if count > 1 { j as f64 / (count - 1) as f64 } else { 0.0 };
            (lo_f * (hi_f / lo_f).powf(frac)).round() as usize
        })
        .collect();
    sizes.dedup();
    sizes
}

pub fn hurst_peng(series: &[f64]) -> Result<f64, StatsError> {
    hurst_peng_with(series, &HurstConfig::default())
}

/// Variance-of-residuals estimator.
///
/// The centred series is integrated into a profile, cut into blocks of size
/// m, and a line is fitted inside every block. The mean squared residual
/// grows like m^(2H).
pub fn hurst_peng_with(series: &[f64], cfg: &HurstConfig) -> Result<f64, StatsError> {
    let mean = check_series(series)?;
    let n = series.len();
    let mut profile = Vec::with_capacity(n);
    let mut acc = 0.0;
    for v in series {
        acc += v - mean;
        profile.push(acc);
    }

    let max_block = (n / 4).max(cfg.peng_min_block + 1);
    let sizes = log_spaced_sizes(cfg.peng_min_block, max_block, cfg.peng_block_sizes);

    let mut log_m = Vec::with_capacity(sizes.len());
    let mut log_f = Vec::with_capacity(sizes.len());
    for &m in &sizes {
        // index moments for x = 0..m-1 are shared by all blocks
        let mf = m as f64;
        let x_mean = (mf - 1.0) / 2.0;
        let sxx = mf * (mf * mf - 1.0) / 12.0;
        let blocks = n / m;
        let mut total = 0.0;
        for b in 0..blocks {
            let block = &profile[b * m..(b + 1) * m];
            let y_mean = block.iter().sum::<f64>() / mf;
            let mut sxy = 0.0;
            let mut syy = 0.0;
            for (i, y) in block.iter().enumerate() {
                let dx = i as f64 - x_mean;
                let dy = y - y_mean;
                sxy += dx * dy;
                syy += dy * dy;
            }
            let ss_res = (syy - sxy * sxy / sxx).max(0.0);
            total += ss_res / mf;
        }
        let avg = total / blocks as f64;
        if avg > 0.0 {
            log_m.push(mf.ln());
            log_f.push(avg.ln());
        }
    }
    if log_m.len() < 2 {
        return Err(StatsError::DegenerateSeries);
    }
    Ok(clamp_h(ols_slope(&log_m, &log_f) / 2.0))
}

/// Periodogram ordinates `I(k/n) = |X_k|^2 / (2 pi n)` for `k = 1..=n/2`.
fn periodogram(series: &[f64], mean: f64) -> Vec<(f64, f64)> {
    let n = series.len();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let norm = 2.0 * std::f64::consts::PI * n as f64;
    (1..=n / 2)
        .map(|k| (k as f64 / n as f64, buf[k].norm_sqr() / norm))
        .collect()
}

fn low_band(series: &[f64], cfg: &HurstConfig) -> Result<Vec<(f64, f64)>, StatsError> {
    let mean = check_series(series)?;
    let pg = periodogram(series, mean);
    let keep = ((pg.len() as f64 * cfg.low_frequency_fraction).floor() as usize).clamp(2, pg.len());
    let band: Vec<(f64, f64)> = pg.into_iter().take(keep).filter(|&(_, p)| p > 0.0).collect();
    if band.len() < 2 {
        return Err(StatsError::DegenerateSeries);
    }
    Ok(band)
}

pub fn hurst_periodogram(series: &[f64]) -> Result<f64, StatsError> {
    hurst_periodogram_with(series, &HurstConfig::default())
}

/// Log-log regression of the periodogram over the lowest frequencies; the
/// spectral density behaves like f^(1-2H) near the origin.
pub fn hurst_periodogram_with(series: &[f64], cfg: &HurstConfig) -> Result<f64, StatsError> {
    let band = low_band(series, cfg)?;
    let (lf, lp): (Vec<f64>, Vec<f64>) = band.iter().map(|&(f, p)| (f.ln(), p.ln())).unzip();
    Ok(clamp_h((1.0 - ols_slope(&lf, &lp)) / 2.0))
}

pub fn hurst_boxed_periodogram(series: &[f64]) -> Result<f64, StatsError> {
    hurst_boxed_periodogram_with(series, &HurstConfig::default())
}

/// Like [`hurst_periodogram_with`], but ordinates are first averaged inside
/// log-spaced frequency boxes so the dense high end of the band does not
/// dominate the fit. The average is taken over log ordinates: the log of an
/// arithmetic box mean drifts with box occupancy (one-ordinate boxes sit
/// Euler's constant lower), which biases the slope.
pub fn hurst_boxed_periodogram_with(series: &[f64], cfg: &HurstConfig) -> Result<f64, StatsError> {
    let band = low_band(series, cfg)?;
    let (f_lo, f_hi) = (band[0].0, band[band.len() - 1].0);
    let boxes = cfg.periodogram_boxes.max(2);
    let log_span = (f_hi / f_lo).ln();

    let mut sums = vec![(0.0f64, 0.0f64, 0usize); boxes];
    for &(f, p) in &band {
        let pos = if log_span > 0.0 { (f / f_lo).ln() / log_span } else { 0.0 };
        let idx = ((pos * boxes as f64) as usize).min(boxes - 1);
        let s = &mut sums[idx];
        s.0 += f;
        s.1 += p.ln();
        s.2 += 1;
    }
    let (lf, lp): (Vec<f64>, Vec<f64>) = sums
        .iter()
        .filter(|s| s.2 > 0)
        .map(|&(f, lp, c)| ((f / c as f64).ln(), lp / c as f64))
        .unzip();
    if lf.len() < 2 {
        return Err(StatsError::DegenerateSeries);
    }
    Ok(clamp_h((1.0 - ols_slope(&lf, &lp)) / 2.0))
}

pub(crate) fn median3(a: f64, b: f64, c: f64) -> f64 {
    a.max(b).min(a.min(b).max(c))
}

pub fn hurst_median(series: &[f64]) -> Result<HurstEstimates, StatsError> {
    hurst_median_with(series, &HurstConfig::default())
}

/// Runs all three estimators and takes their median. The first failing
/// estimator is reported by name.
pub fn hurst_median_with(series: &[f64], cfg: &HurstConfig) -> Result<HurstEstimates, StatsError> {
    let named = |estimator: &'static str, r: Result<f64, StatsError>| {
        r.map_err(|e| StatsError::EstimatorFailed {
            estimator,
            reason: Box::new(e),
        })
    };
    let peng = named("peng", hurst_peng_with(series, cfg))?;
    let periodogram = named("periodogram", hurst_periodogram_with(series, cfg))?;
    let boxed_periodogram = named("boxed_periodogram", hurst_boxed_periodogram_with(series, cfg))?;
    Ok(HurstEstimates {
        peng,
        periodogram,
        boxed_periodogram,
        median: median3(peng, periodogram, boxed_periodogram),
    })
}

/// Median of already computed estimates, for callers that run the estimators
/// individually.
pub fn combine_estimates(
    estimates: [(&'static str, Result<f64, StatsError>); 3],
) -> Result<f64, StatsError> {
    let mut values = [0.0; 3];
    for (slot, (estimator, r)) in values.iter_mut().zip(estimates) {
        *slot = r.map_err(|e| StatsError::EstimatorFailed {
            estimator,
            reason: Box::new(e),
        })?;
    }
    Ok(median3(values[0], values[1], values[2]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_three() {
        assert_eq!(median3(0.52, 0.55, 0.70), 0.55);
        assert_eq!(median3(0.70, 0.52, 0.55), 0.55);
        assert_eq!(median3(0.55, 0.70, 0.52), 0.55);
        assert_eq!(median3(0.5, 0.5, 0.5), 0.5);
    }

    #[test]
    fn combine_surfaces_estimator_name() {
        let r = combine_estimates([
            ("peng", Ok(0.5)),
            ("periodogram", Err(StatsError::DegenerateSeries)),
            ("boxed_periodogram", Ok(0.6)),
        ]);
        match r {
            Err(StatsError::EstimatorFailed { estimator, .. }) => assert_eq!(estimator, "periodogram"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(
            combine_estimates([("a", Ok(0.52)), ("b", Ok(0.55)), ("c", Ok(0.70))]).unwrap(),
            0.55
        );
    }

    #[test]
    fn short_and_constant_series_rejected() {
        let short = vec![1.0; 100];
        assert!(matches!(
            hurst_periodogram(&short),
            Err(StatsError::TooFewSamples { found: 100, .. })
        ));
        assert!(matches!(hurst_boxed_periodogram(&short), Err(StatsError::TooFewSamples { .. })));
        let flat = vec![3.0; 1024];
        assert!(matches!(hurst_peng(&flat), Err(StatsError::DegenerateSeries)));
        assert!(matches!(
            hurst_median(&flat),
            Err(StatsError::EstimatorFailed { estimator: "peng", .. })
        ));
    }

    #[test]
    fn block_sizes_are_log_spaced() {
        let s = log_spaced_sizes(16, 2500, 10);
        assert_eq!(s.len(), 10);
        assert_eq!(s[0], 16);
        assert_eq!(*s.last().unwrap(), 2500);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }
}
