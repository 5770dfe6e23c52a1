//! Two-state (Free/Busy) hidden Markov model over windowed mean-IAT
//! observations.
//!
//! Every T seconds a window of y ms is cut from the trace and its mean
//! inter-arrival time compared to a threshold: below it the window is
//! `IatSmall` (dense traffic), otherwise `IatLarge`. Empty windows are
//! `IatLarge`. The model's initial distribution comes from the MMPP(2)
//! steady state, A and B are re-estimated with Baum-Welch, and predictions
//! are made causally by forward filtering plus one transition step.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mmpp::Mmpp2Params;
use crate::{ms_to_us, seconds_to_us};
use crate::trace::PacketTrace;

pub const FREE: usize = 0;
pub const BUSY: usize = 1;
pub const SMALL: usize = 0;
pub const LARGE: usize = 1;

/// Default moving-average length for the prediction threshold, in slots.
pub const DEFAULT_WINDOW_COUNT: usize = 20;

#[derive(Debug, Error, PartialEq)]
pub enum HmmError {
    #[error("trace does not span a single observation window")]
    EmptySpan,
    #[error("need at least {needed} observations, found {found}")]
    TooFewObservations { needed: usize, found: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelState {
    Free,
    Busy,
}

impl ChannelState {
    pub fn index(self) -> usize {
        match self {
            ChannelState::Free => FREE,
            ChannelState::Busy => BUSY,
        }
    }

    pub fn from_index(i: usize) -> Self {
        if i == FREE {
            ChannelState::Free
        } else {
            ChannelState::Busy
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelState::Free => "free",
            ChannelState::Busy => "busy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservationLabel {
    #[serde(rename = "IAT_small")]
    IatSmall,
    #[serde(rename = "IAT_large")]
    IatLarge,
}

impl ObservationLabel {
    pub fn symbol(self) -> usize {
        match self {
            ObservationLabel::IatSmall => SMALL,
            ObservationLabel::IatLarge => LARGE,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ObservationLabel::IatSmall => "IAT_small",
            ObservationLabel::IatLarge => "IAT_large",
        }
    }

    /// Dense traffic means the channel is occupied.
    pub fn implied_state(self) -> ChannelState {
        match self {
            ObservationLabel::IatSmall => ChannelState::Busy,
            ObservationLabel::IatLarge => ChannelState::Free,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub label: ObservationLabel,
    pub window_mean_iat_ms: Option<f64>,
    pub window_start_us: u64,
    pub threshold_ms: Option<f64>,
}

/// How the model thresholds observations once trained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ThresholdPolicy {
    /// Keep the threshold learnt on the training windows.
    FixedTrainingAverage,
    /// Trailing mean over the last `window_count` window means.
    MovingAverage { window_count: usize },
}

impl Default for ThresholdPolicy {
    fn default() -> Self {
        ThresholdPolicy::MovingAverage {
            window_count: DEFAULT_WINDOW_COUNT,
        }
    }
}

impl ThresholdPolicy {
    /// Rule for labelling prediction-phase windows.
    pub fn prediction_rule(self, training_threshold_ms: Option<f64>) -> ThresholdRule {
        match (self, training_threshold_ms) {
            (ThresholdPolicy::FixedTrainingAverage, Some(v)) => ThresholdRule::Fixed(v),
            (ThresholdPolicy::FixedTrainingAverage, None) => ThresholdRule::AverageOfWindows,
            (ThresholdPolicy::MovingAverage { window_count }, _) => {
                ThresholdRule::MovingAverage(window_count)
            }
        }
    }
}

/// Concrete thresholding applied to a run of windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThresholdRule {
    Fixed(f64),
    /// Mean over all non-empty window means (training phase).
    AverageOfWindows,
    /// Mean of the non-empty window means among the current and previous
    /// `n - 1` slots.
    MovingAverage(usize),
}

/// Regular observation slots: window i covers
/// `[start + i·slot, start + i·slot + window)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotGrid {
    pub start_us: u64,
    pub slot_us: u64,
    pub window_us: u64,
    pub n_slots: usize,
}

impl SlotGrid {
    pub fn new(start_us: u64, n_slots: usize, y_ms: f64, t_s: f64) -> Result<Self, HmmError> {
        if !(y_ms > 0.0 && t_s > 0.0) {
            return Err(HmmError::InvalidParameter(format!(
                "window {y_ms} ms and slot {t_s} s must be positive"
            )));
        }
        Ok(Self {
            start_us,
            slot_us: seconds_to_us(t_s).max(1),
            window_us: ms_to_us(y_ms).max(1),
            n_slots,
        })
    }

    /// Slots whose windows lie inside `[start_us, end_us]`.
    pub fn within(start_us: u64, end_us: u64, y_ms: f64, t_s: f64) -> Result<Self, HmmError> {
        let mut grid = Self::new(start_us, 0, y_ms, t_s)?;
        let span = end_us.saturating_sub(start_us) + 1;
        if span < grid.window_us {
            return Err(HmmError::EmptySpan);
        }
        grid.n_slots = ((span - grid.window_us) / grid.slot_us) as usize + 1;
        Ok(grid)
    }

    /// Slots covering a whole trace, anchored at its first packet.
    pub fn covering(trace: &PacketTrace, y_ms: f64, t_s: f64) -> Result<Self, HmmError> {
        match (trace.first_timestamp(), trace.last_timestamp()) {
            (Some(a), Some(b)) => Self::within(a, b, y_ms, t_s),
            _ => Err(HmmError::EmptySpan),
        }
    }

    pub fn slot_start(&self, i: usize) -> u64 {
        self.start_us + i as u64 * self.slot_us
    }

    pub fn end_us(&self) -> u64 {
        self.slot_start(self.n_slots)
    }
}

/// Mean gap between distinct arrival times inside each window, `None` when
/// the window holds fewer than two distinct arrivals.
pub fn window_means(trace: &PacketTrace, grid: &SlotGrid) -> Vec<Option<f64>> {
    (0..grid.n_slots)
        .map(|i| {
            let recs = trace.window_slice(grid.slot_start(i), grid.window_us);
            let (first, last) = (recs.first()?.timestamp_us, recs.last()?.timestamp_us);
            let distinct = 1 + recs.windows(2).filter(|w| w[1].timestamp_us > w[0].timestamp_us).count();
            (distinct >= 2).then(|| (last - first) as f64 / 1e3 / (distinct - 1) as f64)
        })
        .collect()
}

/// Threshold in force at each slot.
pub fn thresholds(means: &[Option<f64>], rule: ThresholdRule) -> Vec<Option<f64>> {
    match rule {
        ThresholdRule::Fixed(v) => vec![Some(v); means.len()],
        ThresholdRule::AverageOfWindows => {
            let (sum, n) = means.iter().flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
            vec![(n > 0).then(|| sum / n as f64); means.len()]
        }
        ThresholdRule::MovingAverage(count) => {
            let count = count.max(1);
            let (mut sum, mut n) = (0.0, 0usize);
            let mut out = Vec::with_capacity(means.len());
            for i in 0..means.len() {
                if let Some(v) = means[i] {
                    sum += v;
                    n += 1;
                }
                if i >= count {
                    if let Some(v) = means[i - count] {
                        sum -= v;
                        n -= 1;
                    }
                }
                out.push((n > 0).then(|| sum / n as f64));
            }
            out
        }
    }
}

/// Windowed observations over an explicit slot grid.
pub fn observations_on_grid(trace: &PacketTrace, grid: &SlotGrid, rule: ThresholdRule) -> Vec<Observation> {
    let means = window_means(trace, grid);
    let ths = thresholds(&means, rule);
    means
        .iter()
        .zip(&ths)
        .enumerate()
        .map(|(i, (&mean, &th))| {
            let small = matches!((mean, th), (Some(m), Some(t)) if m < t);
            Observation {
                label: if small { ObservationLabel::IatSmall } else { ObservationLabel::IatLarge },
                window_mean_iat_ms: mean,
                window_start_us: grid.slot_start(i),
                threshold_ms: th,
            }
        })
        .collect()
}

/// One observation per T-second slot of the whole trace.
pub fn extract_observations(
    trace: &PacketTrace,
    y_ms: f64,
    t_s: f64,
    rule: ThresholdRule,
) -> Result<Vec<Observation>, HmmError> {
    let grid = SlotGrid::covering(trace, y_ms, t_s)?;
    Ok(observations_on_grid(trace, &grid, rule))
}

/// Training threshold: the mean of all non-empty window means.
pub fn training_threshold(obs: &[Observation]) -> Option<f64> {
    let (sum, n) = obs
        .iter()
        .filter_map(|o| o.window_mean_iat_ms)
        .fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub type Matrix2 = [[f64; 2]; 2];

const UNIFORM: Matrix2 = [[0.5, 0.5], [0.5, 0.5]];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "HmmJson", try_from = "HmmJson")]
pub struct HmmModel {
    /// Over (Free, Busy).
    pub initial: [f64; 2],
    /// `transition[i][j]` = P(next = j | current = i).
    pub transition: Matrix2,
    /// `emission[state][symbol]`, symbols (IAT_small, IAT_large).
    pub emission: Matrix2,
    pub threshold_policy: ThresholdPolicy,
    /// Threshold learnt on the training windows.
    pub threshold_value_ms: Option<f64>,
    /// Observation window y, when known.
    pub window_ms: Option<f64>,
    /// Slot length T, when known.
    pub slot_s: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct HmmJson {
    initial: [f64; 2],
    #[serde(rename = "A")]
    a: Matrix2,
    #[serde(rename = "B")]
    b: Matrix2,
    threshold_policy: String,
    threshold_value_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    window_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    window_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    slot_s: Option<f64>,
}

impl From<HmmModel> for HmmJson {
    fn from(m: HmmModel) -> Self {
        let (threshold_policy, window_count) = match m.threshold_policy {
            ThresholdPolicy::FixedTrainingAverage => ("fixed_training_average".to_string(), None),
            ThresholdPolicy::MovingAverage { window_count } => {
                ("moving_average".to_string(), Some(window_count))
            }
        };
        Self {
            initial: m.initial,
            a: m.transition,
            b: m.emission,
            threshold_policy,
            threshold_value_ms: m.threshold_value_ms,
            window_count,
            window_ms: m.window_ms,
            slot_s: m.slot_s,
        }
    }
}

impl TryFrom<HmmJson> for HmmModel {
    type Error = HmmError;

    fn try_from(j: HmmJson) -> Result<Self, HmmError> {
        let threshold_policy = match j.threshold_policy.as_str() {
            "fixed_training_average" => ThresholdPolicy::FixedTrainingAverage,
            "moving_average" => ThresholdPolicy::MovingAverage {
                window_count: j.window_count.unwrap_or(DEFAULT_WINDOW_COUNT),
            },
            other => {
                return Err(HmmError::InvalidParameter(format!("unknown threshold policy {other:?}")))
            }
        };
        let model = HmmModel {
            initial: j.initial,
            transition: j.a,
            emission: j.b,
            threshold_policy,
            threshold_value_ms: j.threshold_value_ms,
            window_ms: j.window_ms,
            slot_s: j.slot_s,
        };
        model.validate()?;
        Ok(model)
    }
}

fn stochastic(v: &[f64; 2]) -> bool {
    v.iter().all(|p| (0.0..=1.0).contains(p)) && (v[0] + v[1] - 1.0).abs() <= 1e-9
}

impl HmmModel {
    pub fn new(initial: [f64; 2], transition: Matrix2, emission: Matrix2) -> Result<Self, HmmError> {
        let m = Self {
            initial,
            transition,
            emission,
            threshold_policy: ThresholdPolicy::default(),
            threshold_value_ms: None,
            window_ms: None,
            slot_s: None,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), HmmError> {
        let ok = stochastic(&self.initial)
            && self.transition.iter().all(stochastic)
            && self.emission.iter().all(stochastic);
        if ok {
            Ok(())
        } else {
            Err(HmmError::InvalidParameter(
                "initial, A and B rows must be probability vectors".into(),
            ))
        }
    }

    pub fn with_policy(mut self, policy: ThresholdPolicy) -> Self {
        self.threshold_policy = policy;
        self
    }

    /// Threshold rule for prediction-phase windows.
    pub fn prediction_rule(&self) -> ThresholdRule {
        self.threshold_policy.prediction_rule(self.threshold_value_ms)
    }

    fn step(&self, dist: [f64; 2]) -> [f64; 2] {
        let a = &self.transition;
        [
            dist[0] * a[0][0] + dist[1] * a[1][0],
            dist[0] * a[0][1] + dist[1] * a[1][1],
        ]
    }
}

/// Uniform A and B; the initial distribution is the MMPP(2) steady state with
/// the higher-rate MMPP state mapped to Busy.
pub fn init_model(mmpp: &Mmpp2Params) -> HmmModel {
    let busy = mmpp.busy_state().unwrap_or_else(|| {
        log::warn!(target: "hmm", "MMPP states have equal rates; mapping state 1 to Free by index");
        BUSY
    });
    let mut initial = [0.0; 2];
    initial[BUSY] = mmpp.pi[busy];
    initial[FREE] = mmpp.pi[1 - busy];
    HmmModel {
        initial,
        transition: UNIFORM,
        emission: UNIFORM,
        threshold_policy: ThresholdPolicy::default(),
        threshold_value_ms: None,
        window_ms: None,
        slot_s: None,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaumWelchConfig {
    pub max_iters: usize,
    /// Stop once the log-likelihood changes by less than this.
    pub tol: f64,
    /// Lower bound on every emission probability.
    pub emission_floor: f64,
    /// Keep the initial distribution at its MMPP-derived value.
    pub fix_initial: bool,
    /// Offset applied to identical emission rows before the first E-step:
    /// Free leans towards `IAT_large`, Busy towards `IAT_small`.
    pub symmetry_break: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            emission_floor: 1e-6,
            fix_initial: true,
            symmetry_break: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedHmm {
    pub model: HmmModel,
    /// Log-likelihood of the parameters entering each iteration.
    pub log_likelihoods: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Every observation carried the same label; B is not identifiable.
    pub degenerate: bool,
}

impl TrainedHmm {
    pub fn final_log_likelihood(&self) -> Option<f64> {
        self.log_likelihoods.last().copied()
    }
}

/// Scaled forward-backward pass. Returns (gamma, xi sums, log-likelihood).
struct EStep {
    gamma: Vec<[f64; 2]>,
    xi_sum: Matrix2,
    log_likelihood: f64,
}

fn forward_backward(model: &HmmModel, symbols: &[usize]) -> EStep {
    let n = symbols.len();
    let b = &model.emission;
    let a = &model.transition;
    let mut alpha = vec![[0.0; 2]; n];
    let mut scale = vec![0.0; n];

    let mut prior = model.initial;
    for t in 0..n {
        if t > 0 {
            prior = model.step(alpha[t - 1]);
        }
        let o = symbols[t];
        let raw = [prior[0] * b[0][o], prior[1] * b[1][o]];
        let c = raw[0] + raw[1];
        scale[t] = c;
        alpha[t] = [raw[0] / c, raw[1] / c];
    }

    let mut beta = vec![[1.0; 2]; n];
    for t in (0..n.saturating_sub(1)).rev() {
        let o = symbols[t + 1];
        for i in 0..2 {
            beta[t][i] = (0..2)
                .map(|j| a[i][j] * b[j][o] * beta[t + 1][j])
                .sum::<f64>()
                / scale[t + 1];
        }
    }

    let gamma: Vec<[f64; 2]> = alpha
        .iter()
        .zip(&beta)
        .map(|(al, be)| {
            let g = [al[0] * be[0], al[1] * be[1]];
            let s = g[0] + g[1];
            [g[0] / s, g[1] / s]
        })
        .collect();

    let mut xi_sum = [[0.0; 2]; 2];
    for t in 0..n.saturating_sub(1) {
        let o = symbols[t + 1];
        for i in 0..2 {
            for j in 0..2 {
                xi_sum[i][j] += alpha[t][i] * a[i][j] * b[j][o] * beta[t + 1][j] / scale[t + 1];
            }
        }
    }

    EStep {
        gamma,
        xi_sum,
        log_likelihood: scale.iter().map(|c| c.ln()).sum(),
    }
}

fn rows_identical(m: &Matrix2) -> bool {
    (m[0][0] - m[1][0]).abs() < 1e-12 && (m[0][1] - m[1][1]).abs() < 1e-12
}

/// Re-estimates A and B by expectation-maximisation.
///
/// Each iteration's log-likelihood is recorded before the M-step, so the
/// recorded sequence is non-decreasing. With two symbols the floored
/// emission update is the exact constrained maximiser, which keeps that
/// guarantee.
pub fn baum_welch(
    model: &HmmModel,
    obs: &[Observation],
    cfg: &BaumWelchConfig,
) -> Result<TrainedHmm, HmmError> {
    let symbols: Vec<usize> = obs.iter().map(|o| o.label.symbol()).collect();
    baum_welch_symbols(model, &symbols, cfg)
}

pub fn baum_welch_symbols(
    model: &HmmModel,
    symbols: &[usize],
    cfg: &BaumWelchConfig,
) -> Result<TrainedHmm, HmmError> {
    const MIN_OBS: usize = 10;
    if symbols.len() < MIN_OBS {
        return Err(HmmError::TooFewObservations {
            needed: MIN_OBS,
            found: symbols.len(),
        });
    }
    if symbols.iter().any(|&s| s > 1) {
        return Err(HmmError::InvalidParameter("observation symbols must be 0 or 1".into()));
    }
    model.validate()?;
    let degenerate = symbols.iter().all(|&s| s == symbols[0]);
    if degenerate {
        log::warn!(target: "hmm", "all {} training observations identical; emissions not identifiable", symbols.len());
    }

    let floor = cfg.emission_floor.clamp(0.0, 0.5);
    let mut current = model.clone();
    if rows_identical(&current.emission) && cfg.symmetry_break > 0.0 {
        let e = cfg.symmetry_break.min(0.49);
        current.emission[FREE] = [0.5 - e, 0.5 + e];
        current.emission[BUSY] = [0.5 + e, 0.5 - e];
    }

    let mut lls: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    loop {
        let e = forward_backward(&current, symbols);
        if let Some(&prev) = lls.last() {
            if (e.log_likelihood - prev).abs() < cfg.tol {
                lls.push(e.log_likelihood);
                converged = true;
                break;
            }
        }
        lls.push(e.log_likelihood);
        if iterations == cfg.max_iters {
            break;
        }
        iterations += 1;

        let n = symbols.len();
        let mut next = current.clone();
        for i in 0..2 {
            let occupancy: f64 = e.gamma[..n - 1].iter().map(|g| g[i]).sum();
            if occupancy > 0.0 {
                next.transition[i] = [e.xi_sum[i][0] / occupancy, e.xi_sum[i][1] / occupancy];
                let s = next.transition[i][0] + next.transition[i][1];
                next.transition[i] = [next.transition[i][0] / s, next.transition[i][1] / s];
            }
            let total: f64 = e.gamma.iter().map(|g| g[i]).sum();
            if total > 0.0 {
                let small: f64 = e
                    .gamma
                    .iter()
                    .zip(symbols)
                    .filter(|(_, &s)| s == SMALL)
                    .map(|(g, _)| g[i])
                    .sum();
                let p_small = (small / total).clamp(floor, 1.0 - floor);
                next.emission[i] = [p_small, 1.0 - p_small];
            }
        }
        if !cfg.fix_initial {
            next.initial = e.gamma[0];
        }
        current = next;
    }

    Ok(TrainedHmm {
        model: current,
        log_likelihoods: lls,
        iterations,
        converged,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedState {
    pub state: ChannelState,
    pub p_free: f64,
    pub slot_start_us: u64,
}

impl PredictedState {
    /// Free only when strictly more likely than Busy.
    pub fn from_p_free(p_free: f64, slot_start_us: u64) -> Self {
        Self {
            state: if p_free > 0.5 { ChannelState::Free } else { ChannelState::Busy },
            p_free,
            slot_start_us,
        }
    }
}

/// Online forward filter holding the normalised state posterior.
#[derive(Debug, Clone)]
pub struct ForwardFilter<'a> {
    model: &'a HmmModel,
    posterior: Option<[f64; 2]>,
}

impl<'a> ForwardFilter<'a> {
    pub fn new(model: &'a HmmModel) -> Self {
        Self {
            model,
            posterior: None,
        }
    }

    pub fn posterior(&self) -> Option<[f64; 2]> {
        self.posterior
    }

    /// Distribution of the state at the next slot.
    pub fn next_distribution(&self) -> [f64; 2] {
        match self.posterior {
            Some(p) => self.model.step(p),
            None => self.model.initial,
        }
    }

    pub fn update(&mut self, symbol: usize) {
        let prior = self.next_distribution();
        let b = &self.model.emission;
        let raw = [prior[0] * b[0][symbol], prior[1] * b[1][symbol]];
        let s = raw[0] + raw[1];
        self.posterior = Some(if s > 0.0 && s.is_finite() {
            [raw[0] / s, raw[1] / s]
        } else {
            [0.5, 0.5]
        });
    }

    pub fn predict(&self, slot_start_us: u64) -> PredictedState {
        PredictedState::from_p_free(self.next_distribution()[FREE], slot_start_us)
    }
}

/// Predicts the slot after `obs_so_far`. With no history the prediction is
/// the initial distribution.
pub fn predict_next(model: &HmmModel, obs_so_far: &[Observation], slot_start_us: u64) -> PredictedState {
    let mut f = ForwardFilter::new(model);
    for o in obs_so_far {
        f.update(o.label.symbol());
    }
    f.predict(slot_start_us)
}

/// Causal prediction for every slot: slot i is predicted from observations
/// `0..i`.
pub fn predict_sequence(model: &HmmModel, obs: &[Observation]) -> Vec<PredictedState> {
    let mut f = ForwardFilter::new(model);
    obs.iter()
        .map(|o| {
            let p = f.predict(o.window_start_us);
            f.update(o.label.symbol());
            p
        })
        .collect()
}

/// Most likely state path (diagnostic only; predictions use filtering).
pub fn viterbi(model: &HmmModel, obs: &[Observation]) -> Vec<ChannelState> {
    if obs.is_empty() {
        return Vec::new();
    }
    let ln = |p: f64| if p > 0.0 { p.ln() } else { f64::NEG_INFINITY };
    let la = model.transition.map(|r| r.map(ln));
    let lb = model.emission.map(|r| r.map(ln));
    let sym: Vec<usize> = obs.iter().map(|o| o.label.symbol()).collect();

    let mut delta = [ln(model.initial[0]) + lb[0][sym[0]], ln(model.initial[1]) + lb[1][sym[0]]];
    let mut back = Vec::with_capacity(sym.len());
    for &o in &sym[1..] {
        let mut next = [0.0; 2];
        let mut from = [0usize; 2];
        for j in 0..2 {
            let (a, b) = (delta[0] + la[0][j], delta[1] + la[1][j]);
            (next[j], from[j]) = if a >= b { (a, 0) } else { (b, 1) };
            next[j] += lb[j][o];
        }
        back.push(from);
        delta = next;
    }
    let mut state = if delta[0] >= delta[1] { 0 } else { 1 };
    let mut path = vec![state];
    for from in back.iter().rev() {
        state = from[state];
        path.push(state);
    }
    path.reverse();
    path.into_iter().map(ChannelState::from_index).collect()
}
