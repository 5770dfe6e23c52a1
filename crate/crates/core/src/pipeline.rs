//! End-to-end run over one aggregated trace.
//!
//! The trace is cut into three consecutive segments measured from its first
//! packet:
//!
//! ```text
//! [t0, t0+x)        MMPP(2) statistics and fit
//! [t0+x, t0+x+z)    HMM training slots
//! [t0+x+z, end]     prediction, scoring and RMSE holdout
//! ```
//!
//! Stochastic stages draw from `derive_seed(seed, stage)` with the stage
//! indices in [`Stage`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{fit_pareto, pareto_iats_ms, random_access_predict, BaselineError, ParetoParams, WSN_MAX_PACKET_MS};
use crate::eval::{
    modeled_iats, quantile_rmse, quantile_rmse_ms, score, truth_from_observations, EvalError, EvalReport,
    Rmse, RunEcho, SlotRecord, MIN_RMSE_SAMPLES,
};
use crate::hmm::{
    baum_welch, init_model, observations_on_grid, predict_sequence, training_threshold, BaumWelchConfig,
    HmmError, HmmModel, Observation, PredictedState, SlotGrid, ThresholdPolicy, ThresholdRule, TrainedHmm,
};
use crate::mmpp::{fit_from_stats, Mmpp2Params, MmppError};
use crate::stats::{traffic_stats, HurstConfig, StatsError, TrafficStats};
use crate::trace::{extract_iats, window_trace, IatSeries, PacketTrace, TraceError};
use crate::{derive_seed, seconds_to_us};

/// Seed streams of the stochastic stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stage {
    MmppGeneration = 0,
    ParetoGeneration = 1,
    RandomAccess = 2,
}

impl Stage {
    pub fn seed(self, seed: u64) -> u64 {
        derive_seed(seed, self as u64)
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("trace_io: {0}")]
    Trace(#[from] TraceError),
    #[error("stats: {0}")]
    Stats(#[from] StatsError),
    #[error("mmpp: {0}")]
    Mmpp(#[from] MmppError),
    #[error("baselines: {0}")]
    Baseline(#[from] BaselineError),
    #[error("hmm: {0}")]
    Hmm(#[from] HmmError),
    #[error("eval: {0}")]
    Eval(#[from] EvalError),
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl PipelineError {
    /// 3 for numerical failures, 2 for everything caused by inputs or flags.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Mmpp(MmppError::UnsupportedRegime { .. } | MmppError::NumericalFailure { .. })
            | PipelineError::Stats(StatsError::DegenerateSeries | StatsError::NonFinite)
            | PipelineError::Baseline(BaselineError::DegenerateFit)
            | PipelineError::Eval(EvalError::ModelTooSparse { .. }) => 3,
            PipelineError::Stats(StatsError::EstimatorFailed { reason, .. })
                if matches!(**reason, StatsError::DegenerateSeries | StatsError::NonFinite) =>
            {
                3
            }
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub x_s: f64,
    pub k: f64,
    pub z_s: f64,
    pub t_s: f64,
    /// Replaces `k·y_lb` when set.
    pub y_override_ms: Option<f64>,
    pub seed: u64,
    pub threshold_policy: ThresholdPolicy,
    pub pareto_scale_ms: f64,
    #[serde(skip)]
    pub hurst: HurstConfig,
    #[serde(skip)]
    pub baum_welch: BaumWelchConfig,
}

impl Default for PipelineConfig {
    /// The office settings: x = 300 s, y = y_lb, z = 300 s, T = 5 s.
    fn default() -> Self {
        Self {
            x_s: 300.0,
            k: 1.0,
            z_s: 300.0,
            t_s: 5.0,
            y_override_ms: None,
            seed: 0,
            threshold_policy: ThresholdPolicy::default(),
            pareto_scale_ms: WSN_MAX_PACKET_MS,
            hurst: HurstConfig::default(),
            baum_welch: BaumWelchConfig::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(PipelineError::Config(format!("{name} must be positive, got {v}")))
            }
        };
        positive("x", self.x_s)?;
        positive("z", self.z_s)?;
        positive("t", self.t_s)?;
        positive("pareto scale", self.pareto_scale_ms)?;
        if !(self.k >= 1.0 && self.k.is_finite()) {
            return Err(PipelineError::Config(format!("k must be at least 1, got {}", self.k)));
        }
        if let Some(y) = self.y_override_ms {
            positive("y", y)?;
        }
        Ok(())
    }

    /// `y_override_ms`, else `k·y_lb`.
    pub fn window_ms(&self, mmpp: &Mmpp2Params) -> f64 {
        self.y_override_ms.unwrap_or(self.k * mmpp.y_lower_bound_ms())
    }

    pub fn echo(&self, y_ms: f64) -> RunEcho {
        RunEcho {
            x_s: self.x_s,
            k: self.k,
            y_ms,
            z_s: self.z_s,
            t_s: self.t_s,
        }
    }
}

/// Segment boundaries in trace microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segments {
    pub start_us: u64,
    pub hmm_start_us: u64,
    pub eval_start_us: u64,
    pub end_us: u64,
}

impl Segments {
    pub fn new(trace: &PacketTrace, x_s: f64, z_s: f64) -> Result<Self, PipelineError> {
        let (start_us, end_us) = match (trace.first_timestamp(), trace.last_timestamp()) {
            (Some(a), Some(b)) => (a, b),
            _ => return Err(TraceError::EmptyTrace.into()),
        };
        let hmm_start_us = start_us + seconds_to_us(x_s);
        let eval_start_us = hmm_start_us + seconds_to_us(z_s);
        if eval_start_us >= end_us {
            return Err(EvalError::TraceTooShort {
                need_s: x_s + z_s,
                have_s: trace.span_us() as f64 / 1e6,
            }
            .into());
        }
        Ok(Self {
            start_us,
            hmm_start_us,
            eval_start_us,
            end_us,
        })
    }

    pub fn mmpp_training(&self, trace: &PacketTrace) -> PacketTrace {
        window_trace(trace, self.start_us, self.hmm_start_us - self.start_us).expect("x > 0")
    }

    pub fn holdout(&self, trace: &PacketTrace) -> PacketTrace {
        window_trace(trace, self.eval_start_us, self.end_us - self.eval_start_us + 1).expect("non-empty")
    }

    pub fn hmm_grid(&self, y_ms: f64, t_s: f64) -> Result<SlotGrid, HmmError> {
        let probe = SlotGrid::new(self.hmm_start_us, 0, y_ms, t_s)?;
        let n = ((self.eval_start_us - self.hmm_start_us) / probe.slot_us) as usize;
        Ok(SlotGrid { n_slots: n, ..probe })
    }

    pub fn eval_grid(&self, y_ms: f64, t_s: f64) -> Result<SlotGrid, HmmError> {
        SlotGrid::within(self.eval_start_us, self.end_us, y_ms, t_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitStage {
    pub stats: TrafficStats,
    pub mmpp: Mmpp2Params,
    pub y_ms: f64,
}

pub fn fit_stage(training: &PacketTrace, cfg: &PipelineConfig) -> Result<FitStage, PipelineError> {
    let iats = extract_iats(training)?;
    let stats = traffic_stats(&iats, &cfg.hurst)?;
    if stats.low_confidence {
        log::warn!(
            target: "stats",
            "Hurst estimate from {} samples is low confidence",
            stats.n_samples
        );
    }
    let mmpp = fit_from_stats(&stats)?;
    let y_ms = cfg.window_ms(&mmpp);
    Ok(FitStage { stats, mmpp, y_ms })
}

/// Trains on `grid` with the training-average threshold and stores `y`
/// and `T` in the model.
pub fn train_stage(
    trace: &PacketTrace,
    grid: &SlotGrid,
    mmpp: &Mmpp2Params,
    y_ms: f64,
    t_s: f64,
    policy: ThresholdPolicy,
    bw: &BaumWelchConfig,
) -> Result<TrainedHmm, PipelineError> {
    let obs = observations_on_grid(trace, grid, ThresholdRule::AverageOfWindows);
    let mut model = init_model(mmpp).with_policy(policy);
    model.threshold_value_ms = training_threshold(&obs);
    model.window_ms = Some(y_ms);
    model.slot_s = Some(t_s);
    let trained = baum_welch(&model, &obs, bw)?;
    if trained.degenerate {
        log::warn!(target: "hmm", "all training observations carry the same label");
    }
    if !trained.converged {
        log::warn!(target: "hmm", "Baum-Welch stopped after {} iterations without converging", trained.iterations);
    }
    Ok(trained)
}

/// Predictions of the HMM and of random access on one grid, scored
/// against the threshold ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub observations: Vec<Observation>,
    pub hmm: Vec<PredictedState>,
    pub random: Vec<PredictedState>,
    pub truth: Vec<crate::hmm::ChannelState>,
}

impl Prediction {
    pub fn slot_records(&self) -> Vec<SlotRecord> {
        self.observations
            .iter()
            .zip(&self.hmm)
            .zip(&self.truth)
            .enumerate()
            .map(|(i, ((o, p), t))| SlotRecord {
                slot_start_us: o.window_start_us,
                window_mean_iat_ms: o.window_mean_iat_ms,
                threshold_ms: o.threshold_ms,
                observation: o.label.as_str(),
                prediction: p.state.as_str(),
                p_free: p.p_free,
                truth: t.as_str(),
                random_prediction: self.random.get(i).map(|r| r.state.as_str()),
            })
            .collect()
    }
}

pub fn predict_stage(trace: &PacketTrace, grid: &SlotGrid, model: &HmmModel, seed: u64) -> Prediction {
    let observations = observations_on_grid(trace, grid, model.prediction_rule());
    let hmm = predict_sequence(model, &observations);
    let random = random_access_predict(observations.len(), Stage::RandomAccess.seed(seed))
        .into_iter()
        .zip(&observations)
        .map(|(mut p, o)| {
            p.slot_start_us = o.window_start_us;
            p
        })
        .collect();
    let truth = truth_from_observations(&observations);
    Prediction {
        observations,
        hmm,
        random,
        truth,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelComparison {
    pub holdout_samples: usize,
    pub mmpp: Rmse,
    pub pareto: Option<Rmse>,
    pub pareto_params: Option<ParetoParams>,
    pub pareto_error: Option<String>,
}

/// Quantile RMSE of MMPP(2) traffic (pooled `y`-length runs) and of
/// i.i.d. Pareto gaps fitted on the same training IATs, both against
/// `holdout`.
pub fn compare_models(
    training_iats: &IatSeries,
    holdout: &IatSeries,
    mmpp: &Mmpp2Params,
    y_ms: f64,
    pareto_scale_ms: f64,
    seed: u64,
) -> Result<ModelComparison, PipelineError> {
    let need = holdout.count().max(MIN_RMSE_SAMPLES);
    let model = modeled_iats(mmpp, y_ms, need, Stage::MmppGeneration.seed(seed))?;
    let mmpp_rmse = quantile_rmse(&model, holdout)?;
    let (pareto, pareto_params, pareto_error) = match fit_pareto(training_iats, pareto_scale_ms) {
        Ok(params) => {
            let sample = pareto_iats_ms(&params, need, Stage::ParetoGeneration.seed(seed));
            (Some(quantile_rmse_ms(&sample, &holdout.to_ms())?), Some(params), None)
        }
        Err(e) => {
            log::warn!(target: "baselines", "pareto fit failed: {e}");
            (None, None, Some(format!("baselines: {e}")))
        }
    };
    Ok(ModelComparison {
        holdout_samples: holdout.count(),
        mmpp: mmpp_rmse,
        pareto,
        pareto_params,
        pareto_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HmmSummary {
    pub model: HmmModel,
    pub iterations: usize,
    pub converged: bool,
    pub degenerate: bool,
    pub final_log_likelihood: Option<f64>,
    pub training_slots: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineReport {
    pub segments: Segments,
    pub stats: TrafficStats,
    pub mmpp: Mmpp2Params,
    pub y_ms: f64,
    pub hmm: HmmSummary,
    #[serde(flatten)]
    pub evaluation: EvalReport,
    pub random_access: EvalReport,
    pub models: ModelComparison,
    pub ground_truth_rule: String,
    pub seed: u64,
}

/// Result of [`run_pipeline`], with the per-slot rows for CSV export.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineRun {
    pub report: PipelineReport,
    pub slots: Vec<SlotRecord>,
}

pub const GROUND_TRUTH_RULE: &str =
    "slot is Busy iff its window mean IAT is below the threshold in force (same rule as the observations); empty windows are Free";

pub fn run_pipeline(trace: &PacketTrace, cfg: &PipelineConfig) -> Result<PipelineRun, PipelineError> {
    cfg.validate()?;
    let segments = Segments::new(trace, cfg.x_s, cfg.z_s)?;
    let training = segments.mmpp_training(trace);
    let fit = fit_stage(&training, cfg)?;
    log::info!(
        target: "mmpp",
        "fitted {:?} branch, y = {:.1} ms",
        fit.stats.branch(),
        fit.y_ms
    );

    let hmm_grid = segments.hmm_grid(fit.y_ms, cfg.t_s)?;
    let trained = train_stage(
        trace,
        &hmm_grid,
        &fit.mmpp,
        fit.y_ms,
        cfg.t_s,
        cfg.threshold_policy,
        &cfg.baum_welch,
    )?;

    let eval_grid = segments.eval_grid(fit.y_ms, cfg.t_s)?;
    let prediction = predict_stage(trace, &eval_grid, &trained.model, cfg.seed);

    let training_iats = extract_iats(&training)?;
    let holdout_iats = extract_iats(&segments.holdout(trace))?;
    let models = compare_models(
        &training_iats,
        &holdout_iats,
        &fit.mmpp,
        fit.y_ms,
        cfg.pareto_scale_ms,
        cfg.seed,
    )?;

    let echo = cfg.echo(fit.y_ms);
    let evaluation = score(&prediction.hmm, &prediction.truth)?
        .with_rmse(models.mmpp)
        .with_config(echo);
    let random_access = score(&prediction.random, &prediction.truth)?.with_config(echo);

    let report = PipelineReport {
        segments,
        stats: fit.stats,
        mmpp: fit.mmpp,
        y_ms: fit.y_ms,
        hmm: HmmSummary {
            final_log_likelihood: trained.final_log_likelihood(),
            model: trained.model,
            iterations: trained.iterations,
            converged: trained.converged,
            degenerate: trained.degenerate,
            training_slots: hmm_grid.n_slots,
        },
        evaluation,
        random_access,
        models,
        ground_truth_rule: GROUND_TRUTH_RULE.to_string(),
        seed: cfg.seed,
    };
    Ok(PipelineRun {
        slots: prediction.slot_records(),
        report,
    })
}
