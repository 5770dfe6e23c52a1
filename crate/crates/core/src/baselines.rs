//! Comparison baselines: an i.i.d. Pareto inter-arrival model and the
//! 0.5-persistent random access predictor.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hmm::{ChannelState, PredictedState};
use crate::ms_to_us;
use crate::trace::{IatSeries, PacketRecord, PacketTrace, SYNTHETIC_CHANNEL};

/// Longest 802.15.4 frame airtime (127 bytes at 250 kbit/s plus preamble),
/// the default Pareto scale.
pub const WSN_MAX_PACKET_MS: f64 = 4.256;

/// Minimum number of tail samples for a shape estimate.
pub const MIN_TAIL_SAMPLES: usize = 100;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("only {found} inter-arrival times at or above the scale, need {MIN_TAIL_SAMPLES}")]
    InsufficientTail { found: usize },
    #[error("all tail samples equal the scale; shape estimate diverges")]
    DegenerateFit,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParetoParams {
    pub scale_ms: f64,
    pub shape: f64,
    #[serde(default)]
    pub n_used: usize,
    #[serde(default)]
    pub n_excluded: usize,
}

impl ParetoParams {
    pub fn new(scale_ms: f64, shape: f64) -> Result<Self, BaselineError> {
        if !(scale_ms > 0.0 && scale_ms.is_finite() && shape > 0.0 && shape.is_finite()) {
            return Err(BaselineError::InvalidParameter(format!(
                "scale {scale_ms} and shape {shape} must be positive"
            )));
        }
        Ok(Self {
            scale_ms,
            shape,
            n_used: 0,
            n_excluded: 0,
        })
    }

    /// `scale·shape/(shape-1)`, infinite for shape <= 1.
    pub fn mean_ms(&self) -> f64 {
        if self.shape > 1.0 {
            self.scale_ms * self.shape / (self.shape - 1.0)
        } else {
            f64::INFINITY
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        // 1 - [0, 1) keeps u away from zero
        let u = 1.0 - rng.random::<f64>();
        self.scale_ms * u.powf(-1.0 / self.shape)
    }
}

/// Maximum-likelihood shape with the scale held fixed. Samples below the
/// scale lie outside the Pareto support and are excluded.
pub fn fit_pareto(iats: &IatSeries, scale_ms: f64) -> Result<ParetoParams, BaselineError> {
    if !(scale_ms > 0.0 && scale_ms.is_finite()) {
        return Err(BaselineError::InvalidParameter(format!("scale {scale_ms} must be positive")));
    }
    let ms = iats.to_ms();
    let tail: Vec<f64> = ms.iter().copied().filter(|&x| x >= scale_ms).collect();
    let n_excluded = ms.len() - tail.len();
    if tail.len() < MIN_TAIL_SAMPLES {
        return Err(BaselineError::InsufficientTail { found: tail.len() });
    }
    let log_sum: f64 = tail.iter().map(|x| (x / scale_ms).ln()).sum();
    if log_sum <= 0.0 {
        return Err(BaselineError::DegenerateFit);
    }
    if n_excluded > 0 {
        log::info!(target: "baselines", "pareto fit excluded {n_excluded} samples below {scale_ms} ms");
    }
    Ok(ParetoParams {
        scale_ms,
        shape: tail.len() as f64 / log_sum,
        n_used: tail.len(),
        n_excluded,
    })
}

/// `n` i.i.d. inter-arrival times by inverse-CDF sampling.
pub fn pareto_iats_ms(params: &ParetoParams, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = crate::seeded_rng(seed);
    (0..n).map(|_| params.sample(&mut rng)).collect()
}

/// Renewal trace with Pareto gaps covering `[0, duration_ms)`; the first
/// arrival is at t = 0.
pub fn generate_pareto_trace(params: &ParetoParams, duration_ms: f64, seed: u64) -> PacketTrace {
    let mut rng = crate::seeded_rng(seed);
    let mut records = Vec::new();
    let mut t = 0.0;
    while t < duration_ms {
        records.push(PacketRecord::new(ms_to_us(t), SYNTHETIC_CHANNEL));
        t += params.sample(&mut rng);
    }
    PacketTrace::new(records).expect("synthetic channel is valid")
}

/// Each slot independently predicted Free with probability 0.5. `p_free`
/// carries the realised decision (1 or 0).
pub fn random_access_predict(n_slots: usize, seed: u64) -> Vec<PredictedState> {
    let mut rng = crate::seeded_rng(seed);
    (0..n_slots)
        .map(|_| {
            let free = rng.random_bool(0.5);
            PredictedState {
                state: if free { ChannelState::Free } else { ChannelState::Busy },
                p_free: if free { 1.0 } else { 0.0 },
                slot_start_us: 0,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_and_degenerate_errors() {
        let below = IatSeries::from_ms(&[1.0; 500]);
        assert_eq!(
            fit_pareto(&below, WSN_MAX_PACKET_MS),
            Err(BaselineError::InsufficientTail { found: 0 })
        );
        let flat = IatSeries::from_ms(&[WSN_MAX_PACKET_MS; 500]);
        assert_eq!(fit_pareto(&flat, WSN_MAX_PACKET_MS), Err(BaselineError::DegenerateFit));
    }

    #[test]
    fn exclusion_counts() {
        let mut v = vec![1.0; 50];
        v.extend((0..200).map(|i| 5.0 + i as f64));
        let p = fit_pareto(&IatSeries::from_ms(&v), WSN_MAX_PACKET_MS).unwrap();
        assert_eq!((p.n_used, p.n_excluded), (200, 50));
        let json = serde_json::to_value(p).unwrap();
        let mut keys: Vec<_> = json.as_object().unwrap().keys().cloned().collect();
        keys.sort();
        assert_eq!(keys, ["n_excluded", "n_used", "scale_ms", "shape"]);
    }

    #[test]
    fn huge_shape_concentrates_at_scale() {
        let p = ParetoParams::new(WSN_MAX_PACKET_MS, 1e6).unwrap();
        let v = pareto_iats_ms(&p, 10_000, 1);
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        assert!(((mean - WSN_MAX_PACKET_MS) / WSN_MAX_PACKET_MS).abs() < 1e-3);
    }

    #[test]
    fn generators_are_deterministic() {
        let p = ParetoParams::new(WSN_MAX_PACKET_MS, 1.5).unwrap();
        assert_eq!(generate_pareto_trace(&p, 10_000.0, 5), generate_pareto_trace(&p, 10_000.0, 5));
        assert_eq!(random_access_predict(100, 5), random_access_predict(100, 5));
        let one = random_access_predict(1, 0);
        assert_eq!(one.len(), 1);
        assert!(matches!(one[0].state, ChannelState::Free | ChannelState::Busy));
    }

    #[test]
    fn random_access_is_fair() {
        let v = random_access_predict(100_000, 11);
        let free = v.iter().filter(|p| p.state == ChannelState::Free).count() as f64 / 1e5;
        // 3 sigma of Binomial(1e5, 0.5) is 0.0047
        assert!((0.494..=0.506).contains(&free), "{free}");
    }
}
