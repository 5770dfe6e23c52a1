//! Scoring and calibration.
//!
//! Traffic models are compared by the RMSE between quantile functions of
//! inter-arrival times. Predictors are scored on a confusion matrix whose
//! positive class is Free:
//!
//! | actual \ predicted | Free | Busy |
//! |--------------------|------|------|
//! | Free               | TP   | FN   |
//! | Busy               | FP   | TN   |
//!
//! `hit rate = TP/(TP+FN)`, `FDR = FP/(TP+FP)`, `precision = 1 - FDR` and
//! F1 is the harmonic mean of precision and hit rate. A metric whose
//! denominator is zero is `None` (`null` in JSON).

use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hmm::{
    baum_welch, init_model, observations_on_grid, predict_sequence, training_threshold,
    BaumWelchConfig, ChannelState, HmmError, Observation, PredictedState, SlotGrid,
    ThresholdPolicy, ThresholdRule,
};
use crate::mmpp::{fit_from_stats, generate_trace, Mmpp2Params};
use crate::stats::{traffic_stats, HurstConfig, TrafficStats};
use crate::trace::{extract_iats, window_trace, IatSeries, PacketTrace};
use crate::{derive_seed, seconds_to_us};

/// Minimum sample count on each side of a quantile comparison.
pub const MIN_RMSE_SAMPLES: usize = 200;

/// Default T, the low-power radio's reporting period.
pub const DEFAULT_SLOT_S: f64 = 5.0;

/// Exponential grid from one minute up to 40 minutes.
pub const DEFAULT_X_GRID_S: [f64; 7] = [60.0, 120.0, 240.0, 480.0, 960.0, 1920.0, 2400.0];
pub const DEFAULT_Z_GRID_S: [f64; 5] = [60.0, 120.0, 300.0, 600.0, 960.0];

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("need at least {needed} samples, found {found}")]
    TooFewSamples { needed: usize, found: usize },
    #[error("prediction and truth lengths differ ({predictions} vs {truth})")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("nothing to score")]
    Empty,
    #[error("trace spans {have_s:.1} s but {need_s:.1} s are required")]
    TraceTooShort { need_s: f64, have_s: f64 },
    #[error("model produced fewer than {needed} inter-arrival times")]
    ModelTooSparse { needed: usize },
    #[error(transparent)]
    Hmm(#[from] HmmError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl ConfusionMatrix {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        Self { tp, fp, fn_, tn }
    }

    pub fn from_states(predicted: &[ChannelState], truth: &[ChannelState]) -> Self {
        let mut cm = Self::default();
        for (p, t) in predicted.iter().zip(truth) {
            match (t, p) {
                (ChannelState::Free, ChannelState::Free) => cm.tp += 1,
                (ChannelState::Free, ChannelState::Busy) => cm.fn_ += 1,
                (ChannelState::Busy, ChannelState::Free) => cm.fp += 1,
                (ChannelState::Busy, ChannelState::Busy) => cm.tn += 1,
            }
        }
        cm
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn hit_rate(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fdr(&self) -> Option<f64> {
        ratio(self.fp, self.tp + self.fp)
    }

    pub fn precision(&self) -> Option<f64> {
        self.fdr().map(|f| 1.0 - f)
    }

    pub fn f1(&self) -> Option<f64> {
        let (p, r) = (self.precision()?, self.hit_rate()?);
        (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
    }

    pub fn report(&self) -> EvalReport {
        EvalReport {
            rmse_ms: None,
            rmse_pct: None,
            hit_rate: self.hit_rate(),
            fdr: self.fdr(),
            precision: self.precision(),
            f1: self.f1(),
            confusion: *self,
            config: None,
        }
    }
}

/// Parameters a report was produced with.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub x_s: f64,
    pub k: f64,
    pub y_ms: f64,
    pub z_s: f64,
    pub t_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rmse_ms: Option<f64>,
    pub rmse_pct: Option<f64>,
    pub hit_rate: Option<f64>,
    pub fdr: Option<f64>,
    pub precision: Option<f64>,
    pub f1: Option<f64>,
    pub confusion: ConfusionMatrix,
    pub config: Option<RunEcho>,
}

impl EvalReport {
    pub fn with_rmse(mut self, rmse: Rmse) -> Self {
        self.rmse_ms = Some(rmse.rmse_ms);
        self.rmse_pct = Some(rmse.rmse_pct);
        self
    }

    pub fn with_config(mut self, config: RunEcho) -> Self {
        self.config = Some(config);
        self
    }
}

pub fn score(predictions: &[PredictedState], truth: &[ChannelState]) -> Result<EvalReport, EvalError> {
    if predictions.len() != truth.len() {
        return Err(EvalError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(EvalError::Empty);
    }
    let states: Vec<ChannelState> = predictions.iter().map(|p| p.state).collect();
    Ok(ConfusionMatrix::from_states(&states, truth).report())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rmse {
    pub rmse_ms: f64,
    pub rmse_pct: f64,
}

/// The 100 mid-bin probabilities 0.005, 0.015, ..., 0.995.
pub fn quantile_grid() -> impl Iterator<Item = f64> {
    (0..100).map(|i| 0.005 + 0.01 * i as f64)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn sorted(v: &[f64]) -> Vec<f64> {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    s
}

pub fn quantile_rmse(model_iats: &IatSeries, test_iats: &IatSeries) -> Result<Rmse, EvalError> {
    quantile_rmse_ms(&model_iats.to_ms(), &test_iats.to_ms())
}

/// RMSE between the quantile functions of two samples over
/// [`quantile_grid`], absolute (ms) and relative to the test mean (%).
pub fn quantile_rmse_ms(model_ms: &[f64], test_ms: &[f64]) -> Result<Rmse, EvalError> {
    for v in [model_ms, test_ms] {
        if v.len() < MIN_RMSE_SAMPLES {
            return Err(EvalError::TooFewSamples {
                needed: MIN_RMSE_SAMPLES,
                found: v.len(),
            });
        }
    }
    let (m, t) = (sorted(model_ms), sorted(test_ms));
    let (sum, n) = quantile_grid().fold((0.0, 0usize), |(s, n), q| {
        let d = quantile_sorted(&m, q) - quantile_sorted(&t, q);
        (s + d * d, n + 1)
    });
    let rmse_ms = (sum / n as f64).sqrt();
    let test_mean = test_ms.iter().sum::<f64>() / test_ms.len() as f64;
    Ok(Rmse {
        rmse_ms,
        rmse_pct: 100.0 * rmse_ms / test_mean,
    })
}

/// Inter-arrival times of modelled traffic: independent runs of `y_ms`
/// each, pooled until at least `min_samples` gaps are collected.
pub fn modeled_iats(
    params: &Mmpp2Params,
    y_ms: f64,
    min_samples: usize,
    seed: u64,
) -> Result<IatSeries, EvalError> {
    const MAX_RUNS: u64 = 2_000_000;
    let mut out = IatSeries::default();
    for run in 0..MAX_RUNS {
        if out.count() >= min_samples {
            return Ok(out);
        }
        let trace = generate_trace(params, y_ms, derive_seed(seed, run));
        if let Ok(iats) = extract_iats(&trace) {
            out.iats_us.extend(iats.iats_us);
            out.merged_zeros += iats.merged_zeros;
        }
    }
    Err(EvalError::ModelTooSparse { needed: min_samples })
}

/// Ground truth per slot: Busy iff the window's mean IAT is below the
/// threshold (the observation rule with `IAT_small` read as Busy). Empty
/// windows are Free.
pub fn label_ground_truth(
    trace: &PacketTrace,
    y_ms: f64,
    t_s: f64,
    rule: ThresholdRule,
) -> Result<Vec<ChannelState>, EvalError> {
    let grid = SlotGrid::covering(trace, y_ms, t_s)?;
    Ok(labels_on_grid(trace, &grid, rule))
}

pub fn labels_on_grid(trace: &PacketTrace, grid: &SlotGrid, rule: ThresholdRule) -> Vec<ChannelState> {
    truth_from_observations(&observations_on_grid(trace, grid, rule))
}

pub fn truth_from_observations(obs: &[Observation]) -> Vec<ChannelState> {
    obs.iter().map(|o| o.label.implied_state()).collect()
}

fn span_s(trace: &PacketTrace) -> f64 {
    trace.span_us() as f64 / 1e6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XCalibrationRow {
    pub x_s: f64,
    pub stats: Option<TrafficStats>,
    pub y_ms: Option<f64>,
    pub rmse_ms: Option<f64>,
    pub rmse_pct: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XCalibration {
    pub k: f64,
    pub holdout_s: f64,
    pub holdout_samples: usize,
    pub rows: Vec<XCalibrationRow>,
    pub best_x_s: Option<f64>,
}

/// Sweeps the MMPP training length x.
///
/// For every x the model is fitted on the first x seconds, `k·y_lb` of
/// traffic is generated (pooled over runs until it matches the holdout
/// size), and compared with the holdout `[max x, max x + holdout)`. Every
/// grid point reuses the same generation seed.
pub fn calibrate_x(
    trace: &PacketTrace,
    candidate_x_s: &[f64],
    k: f64,
    holdout_s: f64,
    seed: u64,
    hurst: &HurstConfig,
) -> Result<XCalibration, EvalError> {
    let max_x = candidate_x_s.iter().copied().fold(0.0, f64::max);
    let need_s = max_x + holdout_s;
    if candidate_x_s.is_empty() || span_s(trace) < need_s {
        return Err(EvalError::TraceTooShort {
            need_s,
            have_s: span_s(trace),
        });
    }
    let t0 = trace.first_timestamp().unwrap_or(0);
    let holdout = window_trace(trace, t0 + seconds_to_us(max_x), seconds_to_us(holdout_s))
        .expect("holdout duration is positive");
    let holdout_iats = extract_iats(&holdout).unwrap_or_default();
    if holdout_iats.count() < MIN_RMSE_SAMPLES {
        return Err(EvalError::TooFewSamples {
            needed: MIN_RMSE_SAMPLES,
            found: holdout_iats.count(),
        });
    }
    let gen_seed = derive_seed(seed, 0);

    let rows: Vec<XCalibrationRow> = candidate_x_s
        .iter()
        .map(|&x_s| {
            let mut row = XCalibrationRow {
                x_s,
                stats: None,
                y_ms: None,
                rmse_ms: None,
                rmse_pct: None,
                error: None,
            };
            let attempt = || -> Result<(TrafficStats, f64, Rmse), String> {
                let training = window_trace(trace, t0, seconds_to_us(x_s)).map_err(|e| e.to_string())?;
                let iats = extract_iats(&training).map_err(|e| format!("trace_io: {e}"))?;
                let stats = traffic_stats(&iats, hurst).map_err(|e| format!("stats: {e}"))?;
                let params = fit_from_stats(&stats).map_err(|e| format!("mmpp: {e}"))?;
                let y_ms = k * params.y_lower_bound_ms();
                let need = holdout_iats.count().max(MIN_RMSE_SAMPLES);
                let model = modeled_iats(&params, y_ms, need, gen_seed).map_err(|e| format!("eval: {e}"))?;
                let rmse = quantile_rmse(&model, &holdout_iats).map_err(|e| format!("eval: {e}"))?;
                Ok((stats, y_ms, rmse))
            };
            match attempt() {
                Ok((stats, y_ms, rmse)) => {
                    row.stats = Some(stats);
                    row.y_ms = Some(y_ms);
                    row.rmse_ms = Some(rmse.rmse_ms);
                    row.rmse_pct = Some(rmse.rmse_pct);
                }
                Err(e) => {
                    log::warn!(target: "eval", "calibrate_x: x = {x_s} s failed: {e}");
                    row.error = Some(e);
                }
            }
            row
        })
        .collect();

    let best_x_s = rows
        .iter()
        .filter_map(|r| r.rmse_ms.map(|v| (r.x_s, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.total_cmp(&b.0)))
        .map(|(x, _)| x);
    Ok(XCalibration {
        k,
        holdout_s,
        holdout_samples: holdout_iats.count(),
        rows,
        best_x_s,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZCalibrationRow {
    pub z_s: f64,
    pub training_slots: usize,
    pub hit_rate: Option<f64>,
    pub precision: Option<f64>,
    pub fdr: Option<f64>,
    pub f1: Option<f64>,
    pub confusion: Option<ConfusionMatrix>,
    pub degenerate: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZCalibration {
    pub y_ms: f64,
    pub t_s: f64,
    pub scoring_slots: usize,
    pub rows: Vec<ZCalibrationRow>,
    pub best_z_s: Option<f64>,
}

/// Sweeps the HMM training length z.
///
/// Each z trains on the slots starting in the first z seconds of `trace`
/// and is scored on the common span after the largest z. The selected z
/// maximises F1 (ties go to the shorter z).
pub fn calibrate_z(
    trace: &PacketTrace,
    candidate_z_s: &[f64],
    mmpp: &Mmpp2Params,
    y_ms: f64,
    t_s: f64,
    policy: ThresholdPolicy,
    bw: &BaumWelchConfig,
) -> Result<ZCalibration, EvalError> {
    let max_z = candidate_z_s.iter().copied().fold(0.0, f64::max);
    let (t0, last) = match (trace.first_timestamp(), trace.last_timestamp()) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(EvalError::TraceTooShort {
                need_s: max_z,
                have_s: 0.0,
            })
        }
    };
    let probe = SlotGrid::new(t0, 0, y_ms, t_s)?;
    let max_slots = (seconds_to_us(max_z) / probe.slot_us) as usize;
    let score_start = probe.slot_start(max_slots);
    let too_short = || EvalError::TraceTooShort {
        need_s: max_z + y_ms / 1e3,
        have_s: span_s(trace),
    };
    if candidate_z_s.is_empty() || score_start > last {
        return Err(too_short());
    }
    let score_grid = SlotGrid::within(score_start, last, y_ms, t_s).map_err(|_| too_short())?;

    let rows = candidate_z_s
        .iter()
        .map(|&z_s| {
            let n_train = (seconds_to_us(z_s) / probe.slot_us) as usize;
            let mut row = ZCalibrationRow {
                z_s,
                training_slots: n_train,
                hit_rate: None,
                precision: None,
                fdr: None,
                f1: None,
                confusion: None,
                degenerate: false,
                error: None,
            };
            let train_grid = SlotGrid { n_slots: n_train, ..probe };
            let train_obs = observations_on_grid(trace, &train_grid, ThresholdRule::AverageOfWindows);
            let mut model = init_model(mmpp).with_policy(policy);
            model.threshold_value_ms = training_threshold(&train_obs);
            model.window_ms = Some(y_ms);
            model.slot_s = Some(t_s);
            match baum_welch(&model, &train_obs, bw) {
                Ok(trained) => {
                    row.degenerate = trained.degenerate;
                    let obs = observations_on_grid(trace, &score_grid, trained.model.prediction_rule());
                    let preds = predict_sequence(&trained.model, &obs);
                    let states: Vec<ChannelState> = preds.iter().map(|p| p.state).collect();
                    let cm = ConfusionMatrix::from_states(&states, &truth_from_observations(&obs));
                    row.hit_rate = cm.hit_rate();
                    row.precision = cm.precision();
                    row.fdr = cm.fdr();
                    row.f1 = cm.f1();
                    row.confusion = Some(cm);
                }
                Err(e) => row.error = Some(format!("hmm: {e}")),
            }
            row
        })
        .collect::<Vec<_>>();

    let best_z_s = rows
        .iter()
        .filter_map(|r| r.f1.map(|f| (r.z_s, f)))
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.total_cmp(&a.0)))
        .map(|(z, _)| z);
    Ok(ZCalibration {
        y_ms,
        t_s,
        scoring_slots: score_grid.n_slots,
        rows,
        best_z_s,
    })
}

/// One row of the per-slot export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlotRecord {
    pub slot_start_us: u64,
    pub window_mean_iat_ms: Option<f64>,
    pub threshold_ms: Option<f64>,
    pub observation: &'static str,
    pub prediction: &'static str,
    pub p_free: f64,
    pub truth: &'static str,
    pub random_prediction: Option<&'static str>,
}

pub fn write_slot_csv<W: Write>(rows: &[SlotRecord], writer: W) -> std::io::Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for r in rows {
        wtr.serialize(r).map_err(std::io::Error::other)?;
    }
    wtr.flush()
}
