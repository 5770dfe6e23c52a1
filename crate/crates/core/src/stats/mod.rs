//! Traffic statistics of an inter-arrival series: mean, coefficient of
//! variation and Hurst exponent, and the regime classification that selects
//! how the MMPP(2) is fitted.

mod hurst;

pub use hurst::{
    combine_estimates, hurst_boxed_periodogram, hurst_boxed_periodogram_with, hurst_median,
    hurst_median_with, hurst_peng, hurst_peng_with, hurst_periodogram, hurst_periodogram_with,
    HurstConfig, HurstEstimates, MIN_HURST_SAMPLES,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::trace::IatSeries;

/// Below this many samples the Hurst estimate is flagged as low confidence.
pub const CONFIDENT_HURST_SAMPLES: usize = 7000;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("series has zero variance")]
    DegenerateSeries,
    #[error("series contains non-finite values")]
    NonFinite,
    #[error("{estimator} estimator failed: {reason}")]
    EstimatorFailed {
        estimator: &'static str,
        reason: Box<StatsError>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasicStats {
    pub m1_ms: f64,
    pub sigma_ms: f64,
    pub c: f64,
}

/// Mean, population standard deviation and coefficient of variation, in ms.
pub fn basic_stats(iats: &IatSeries) -> Result<BasicStats, StatsError> {
    basic_stats_ms(&iats.to_ms())
}

pub fn basic_stats_ms(values: &[f64]) -> Result<BasicStats, StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewSamples {
            needed: 2,
            found: values.len(),
        });
    }
    let n = values.len() as f64;
    let m1_ms = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - m1_ms).powi(2)).sum::<f64>() / n;
    let sigma_ms = var.sqrt();
    Ok(BasicStats {
        m1_ms,
        sigma_ms,
        c: sigma_ms / m1_ms,
    })
}

/// The (M1, C, H) summary of a trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrafficStats {
    pub m1_ms: f64,
    pub sigma_ms: f64,
    pub c: f64,
    pub h: f64,
    pub n_samples: usize,
    #[serde(default)]
    pub low_confidence: bool,
}

impl TrafficStats {
    /// Builds stats from known moments, e.g. published tables.
    pub fn from_moments(m1_ms: f64, c: f64, h: f64) -> Self {
        Self {
            m1_ms,
            sigma_ms: c * m1_ms,
            c,
            h,
            n_samples: 0,
            low_confidence: false,
        }
    }

    pub fn branch(&self) -> FitBranch {
        classify_branch(self)
    }
}

/// Computes basic statistics and the median-of-three Hurst estimate.
pub fn traffic_stats(iats: &IatSeries, cfg: &HurstConfig) -> Result<TrafficStats, StatsError> {
    let ms = iats.to_ms();
    let basic = basic_stats_ms(&ms)?;
    let h = hurst_median_with(&ms, cfg)?;
    let low_confidence = ms.len() < CONFIDENT_HURST_SAMPLES;
    if low_confidence {
        log::warn!(
            target: "stats",
            "only {} samples; Hurst estimate is low confidence",
            ms.len()
        );
    }
    Ok(TrafficStats {
        m1_ms: basic.m1_ms,
        sigma_ms: basic.sigma_ms,
        c: basic.c,
        h: h.median,
        n_samples: ms.len(),
        low_confidence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitBranch {
    Hyperexponential,
    Coxian,
    Unsupported,
}

/// Hyperexponential for self-similar, highly variable traffic
/// (0.5 < H < 1, C > 1); Coxian for 1/sqrt(2) <= C <= 1; otherwise
/// unsupported.
pub fn classify_branch(stats: &TrafficStats) -> FitBranch {
    let (c, h) = (stats.c, stats.h);
    if c > 1.0 && h > 0.5 && h < 1.0 {
        FitBranch::Hyperexponential
    } else if (std::f64::consts::FRAC_1_SQRT_2..=1.0).contains(&c) {
        FitBranch::Coxian
    } else {
        FitBranch::Unsupported
    }
}
