//! Two-state Markov-modulated Poisson process: moment-based fitting from
//! traffic statistics, steady state, and trace generation.
//!
//! The fit first matches a two-phase distribution to (M1, C):
//!
//! - C > 1 and 0.5 < H < 1: hyperexponential by balanced means,
//!   `p = (1 + sqrt((C²-1)/(C²+1)))/2`, `mu1 = 2p/M1`, `mu2 = 2(1-p)/M1`;
//! - 1/sqrt(2) <= C <= 1: Coxian-derived triple, `p = 1/(2C²)`,
//!   `mu1 = (2/M1)·p/(1+p)`, `mu2 = 2/M1`.
//!
//! The triple `(p, mu1, mu2)` is then mapped to the MMPP rates together with
//! `beta = 2 - 2H`:
//!
//! ```text
//! xi  = [p(1-beta)(mu1-mu2) + beta·mu1 + mu2]² - 4·beta·mu1·mu2
//! l1  = [p(1-beta)(mu1-mu2) + beta·mu1 + mu2 + sqrt(xi)] / 2
//! l2  = mu1·mu2·[l1 - p(mu1-mu2) - mu2] / [l1·mu1 - l1·p(mu1-mu2) - mu1·mu2]
//! r1  = (mu1-l1)(mu2-l1) / (l2-l1)
//! r2  = (l2-mu1)(l1+r1-mu1) / (mu1-l1)
//! ```
//!
//! All rates are per millisecond.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::stats::{classify_branch, FitBranch, TrafficStats};
use crate::ms_to_us;
use crate::trace::{PacketRecord, PacketTrace, SYNTHETIC_CHANNEL};

#[derive(Debug, Error, PartialEq)]
pub enum MmppError {
    #[error("classify_branch: traffic with C = {c:.3}, H = {h:.3} is outside the supported regimes")]
    UnsupportedRegime { c: f64, h: f64 },
    #[error("numerical failure in {stage}: {detail}")]
    NumericalFailure { stage: &'static str, detail: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn numerical(stage: &'static str, detail: impl Into<String>) -> MmppError {
    MmppError::NumericalFailure {
        stage,
        detail: detail.into(),
    }
}

/// Two-phase distribution matched to (M1, C).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseParams {
    pub p: f64,
    pub mu1_per_ms: f64,
    pub mu2_per_ms: f64,
    pub branch: FitBranch,
}

impl PhaseParams {
    /// Mean of the mixture "rate mu1 with probability p, rate mu2 otherwise".
    pub fn mixture_mean_ms(&self) -> f64 {
        self.p / self.mu1_per_ms + (1.0 - self.p) / self.mu2_per_ms
    }
}

/// Balanced-means hyperexponential fit.
pub fn hyperexponential_phase(m1_ms: f64, c: f64) -> PhaseParams {
    let c2 = c * c;
    let p = 0.5 * (1.0 + ((c2 - 1.0) / (c2 + 1.0)).sqrt());
    PhaseParams {
        p,
        mu1_per_ms: 2.0 * p / m1_ms,
        mu2_per_ms: 2.0 * (1.0 - p) / m1_ms,
        branch: FitBranch::Hyperexponential,
    }
}

pub fn coxian_phase(m1_ms: f64, c: f64) -> PhaseParams {
    let p = 1.0 / (2.0 * c * c);
    let mu2 = 2.0 / m1_ms;
    PhaseParams {
        p,
        mu1_per_ms: mu2 * (p / (1.0 + p)),
        mu2_per_ms: mu2,
        branch: FitBranch::Coxian,
    }
}

pub fn fit_phase(stats: &TrafficStats) -> Result<PhaseParams, MmppError> {
    if !(stats.m1_ms.is_finite() && stats.m1_ms > 0.0) {
        return Err(MmppError::InvalidParameter(format!(
            "mean inter-arrival time must be positive, got {}",
            stats.m1_ms
        )));
    }
    match classify_branch(stats) {
        FitBranch::Hyperexponential => Ok(hyperexponential_phase(stats.m1_ms, stats.c)),
        FitBranch::Coxian => Ok(coxian_phase(stats.m1_ms, stats.c)),
        FitBranch::Unsupported => Err(MmppError::UnsupportedRegime {
            c: stats.c,
            h: stats.h,
        }),
    }
}

/// MMPP(2) rates plus the intermediates of the fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "Mmpp2Json", try_from = "Mmpp2Json")]
pub struct Mmpp2Params {
    pub lambda1_per_ms: f64,
    pub lambda2_per_ms: f64,
    pub r1_per_ms: f64,
    pub r2_per_ms: f64,
    pub pi: [f64; 2],
    pub beta: Option<f64>,
    pub xi: Option<f64>,
    pub branch: Option<FitBranch>,
}

impl Mmpp2Params {
    /// Builds a process from known rates (no fit intermediates).
    pub fn new(lambda1: f64, lambda2: f64, r1: f64, r2: f64) -> Result<Self, MmppError> {
        for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("r1", r1), ("r2", r2)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(MmppError::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            lambda1_per_ms: lambda1,
            lambda2_per_ms: lambda2,
            r1_per_ms: r1,
            r2_per_ms: r2,
            pi: steady_state(r1, r2),
            beta: None,
            xi: None,
            branch: None,
        })
    }

    pub fn lambdas(&self) -> [f64; 2] {
        [self.lambda1_per_ms, self.lambda2_per_ms]
    }

    pub fn switch_rates(&self) -> [f64; 2] {
        [self.r1_per_ms, self.r2_per_ms]
    }

    /// Infinitesimal generator of the modulating chain.
    pub fn generator(&self) -> [[f64; 2]; 2] {
        let (r1, r2) = (self.r1_per_ms, self.r2_per_ms);
        [[-r1, r1], [r2, -r2]]
    }

    /// Long-run arrival rate `pi1·l1 + pi2·l2`.
    pub fn mean_rate_per_ms(&self) -> f64 {
        self.pi[0] * self.lambda1_per_ms + self.pi[1] * self.lambda2_per_ms
    }

    pub fn y_lower_bound_ms(&self) -> f64 {
        y_lower_bound(self)
    }

    /// Index of the state with the larger arrival rate, `None` on a tie.
    pub fn busy_state(&self) -> Option<usize> {
        use std::cmp::Ordering::*;
        match self.lambda1_per_ms.partial_cmp(&self.lambda2_per_ms) {
            Some(Greater) => Some(0),
            Some(Less) => Some(1),
            _ => None,
        }
    }

    /// Mean and coefficient of variation of the stationary inter-arrival
    /// time, from the phase-type representation `(phi, D0 = Q - Lambda)`.
    pub fn interarrival_moments(&self) -> IatMoments {
        let [l1, l2] = self.lambdas();
        let (r1, r2) = (self.r1_per_ms, self.r2_per_ms);
        let rate = self.mean_rate_per_ms();
        let phi = [self.pi[0] * l1 / rate, self.pi[1] * l2 / rate];
        // (-D0)^-1 for -D0 = [[r1 + l1, -r1], [-r2, r2 + l2]]
        let (a, b, c, d) = (r1 + l1, -r1, -r2, r2 + l2);
        let det = a * d - b * c;
        let inv = [[d / det, -b / det], [-c / det, a / det]];
        let apply = |v: [f64; 2]| {
            [
                inv[0][0] * v[0] + inv[0][1] * v[1],
                inv[1][0] * v[0] + inv[1][1] * v[1],
            ]
        };
        let m1v = apply([1.0, 1.0]);
        let m2v = apply(m1v);
        let mean = phi[0] * m1v[0] + phi[1] * m1v[1];
        let second = 2.0 * (phi[0] * m2v[0] + phi[1] * m2v[1]);
        IatMoments {
            mean_ms: mean,
            c: (second - mean * mean).max(0.0).sqrt() / mean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IatMoments {
    pub mean_ms: f64,
    pub c: f64,
}

#[derive(Serialize, Deserialize)]
struct Mmpp2Json {
    lambda1: f64,
    lambda2: f64,
    r1: f64,
    r2: f64,
    pi: [f64; 2],
    branch: Option<FitBranch>,
    beta: Option<f64>,
    xi: Option<f64>,
    y_lb_ms: f64,
}

impl From<Mmpp2Params> for Mmpp2Json {
    fn from(p: Mmpp2Params) -> Self {
        Self {
            lambda1: p.lambda1_per_ms,
            lambda2: p.lambda2_per_ms,
            r1: p.r1_per_ms,
            r2: p.r2_per_ms,
            pi: p.pi,
            branch: p.branch,
            beta: p.beta,
            xi: p.xi,
            y_lb_ms: y_lower_bound(&p),
        }
    }
}

impl TryFrom<Mmpp2Json> for Mmpp2Params {
    type Error = MmppError;

    fn try_from(j: Mmpp2Json) -> Result<Self, Self::Error> {
        let mut p = Mmpp2Params::new(j.lambda1, j.lambda2, j.r1, j.r2)?;
        p.beta = j.beta;
        p.xi = j.xi;
        p.branch = j.branch;
        Ok(p)
    }
}

/// `(r2, r1) / (r1 + r2)`.
pub fn steady_state(r1: f64, r2: f64) -> [f64; 2] {
    let s = r1 + r2;
    [r2 / s, r1 / s]
}

fn nonzero(stage: &'static str, what: &str, value: f64, scale: f64) -> Result<f64, MmppError> {
    if !value.is_finite() || value.abs() <= 1e-12 * scale.abs().max(f64::MIN_POSITIVE) {
        Err(numerical(stage, format!("{what} denominator is zero ({value:e})")))
    } else {
        Ok(value)
    }
}

/// Switching rates from the phase triple and the two arrival rates.
pub fn transition_rates(
    phase: &PhaseParams,
    lambda1: f64,
    lambda2: f64,
) -> Result<(f64, f64), MmppError> {
    let (mu1, mu2) = (phase.mu1_per_ms, phase.mu2_per_ms);
    let scale = lambda1.abs().max(lambda2.abs()).max(mu1).max(mu2);
    let d1 = nonzero("r1", "lambda2 - lambda1", lambda2 - lambda1, scale)?;
    let r1 = (mu1 - lambda1) * (mu2 - lambda1) / d1;
    let d2 = nonzero("r2", "mu1 - lambda1", mu1 - lambda1, scale)?;
    let r2 = (lambda2 - mu1) * (lambda1 + r1 - mu1) / d2;
    Ok((r1, r2))
}

/// Maps a phase fit and Hurst exponent to MMPP(2) rates. Fails rather than
/// clamping when the statistics fall outside the approximation's region.
pub fn fit_mmpp2(phase: &PhaseParams, h: f64) -> Result<Mmpp2Params, MmppError> {
    if !(h > 0.0 && h < 1.0) {
        return Err(MmppError::InvalidParameter(format!("Hurst exponent {h} not in (0, 1)")));
    }
    let PhaseParams {
        p,
        mu1_per_ms: mu1,
        mu2_per_ms: mu2,
        ..
    } = *phase;
    if !(p > 0.0 && p <= 1.0 && mu1 > 0.0 && mu2 > 0.0) {
        return Err(MmppError::InvalidParameter(format!(
            "phase parameters out of range: p={p}, mu1={mu1}, mu2={mu2}"
        )));
    }
    let beta = 2.0 - 2.0 * h;
    let base = p * (1.0 - beta) * (mu1 - mu2) + beta * mu1 + mu2;
    let xi = base * base - 4.0 * beta * mu1 * mu2;
    if !(xi >= 0.0) {
        return Err(numerical("xi", format!("negative discriminant {xi:e}")));
    }
    let lambda1 = 0.5 * (base + xi.sqrt());

    let num2 = mu1 * mu2 * (lambda1 - p * (mu1 - mu2) - mu2);
    let den2 = lambda1 * mu1 - lambda1 * p * (mu1 - mu2) - mu1 * mu2;
    let scale2 = (lambda1 * mu1).abs().max(mu1 * mu2);
    let lambda2 = num2 / nonzero("lambda2", "lambda2", den2, scale2)?;

    let (r1, r2) = transition_rates(phase, lambda1, lambda2)?;
    for (name, v) in [("lambda1", lambda1), ("lambda2", lambda2), ("r1", r1), ("r2", r2)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(numerical("rates", format!("{name} = {v:e} is not a positive rate")));
        }
    }
    Ok(Mmpp2Params {
        lambda1_per_ms: lambda1,
        lambda2_per_ms: lambda2,
        r1_per_ms: r1,
        r2_per_ms: r2,
        pi: steady_state(r1, r2),
        beta: Some(beta),
        xi: Some(xi),
        branch: Some(phase.branch),
    })
}

/// Classify, fit the phase distribution, then the MMPP(2).
pub fn fit_from_stats(stats: &TrafficStats) -> Result<Mmpp2Params, MmppError> {
    fit_mmpp2(&fit_phase(stats)?, stats.h)
}

/// Shortest modelled duration that visits both states in expectation,
/// `1/r1 + 1/r2` (ms).
pub fn y_lower_bound(params: &Mmpp2Params) -> f64 {
    1.0 / params.r1_per_ms + 1.0 / params.r2_per_ms
}

/// Arrival-time iterator of an MMPP(2) started from its steady state.
///
/// In state i the next event is either an arrival (rate lambda_i) or the end
/// of the sojourn (rate r_i); both clocks are memoryless, so the arrival gap
/// is redrawn after every state switch.
pub struct MmppArrivals {
    rng: ChaCha8Rng,
    arrival: [Exp<f64>; 2],
    sojourn: [Exp<f64>; 2],
    state: usize,
    now_ms: f64,
    sojourn_end_ms: f64,
}

impl MmppArrivals {
    pub fn new(params: &Mmpp2Params, seed: u64) -> Self {
        let mut rng = crate::seeded_rng(seed);
        let state = if rng.random::<f64>() < params.pi[0] { 0 } else { 1 };
        let exp = |rate: f64| Exp::new(rate).expect("rates validated positive");
        let arrival = [exp(params.lambda1_per_ms), exp(params.lambda2_per_ms)];
        let sojourn = [exp(params.r1_per_ms), exp(params.r2_per_ms)];
        let sojourn_end_ms = sojourn[state].sample(&mut rng);
        Self {
            rng,
            arrival,
            sojourn,
            state,
            now_ms: 0.0,
            sojourn_end_ms,
        }
    }

    pub fn state(&self) -> usize {
        self.state
    }
}

impl Iterator for MmppArrivals {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        loop {
            let candidate = self.now_ms + self.arrival[self.state].sample(&mut self.rng);
            if candidate < self.sojourn_end_ms {
                self.now_ms = candidate;
                return Some(candidate);
            }
            self.now_ms = self.sojourn_end_ms;
            self.state = 1 - self.state;
            self.sojourn_end_ms = self.now_ms + self.sojourn[self.state].sample(&mut self.rng);
        }
    }
}

fn synthetic_trace(times_ms: impl Iterator<Item = f64>) -> PacketTrace {
    let records = times_ms
        .map(|t| PacketRecord::new(ms_to_us(t), SYNTHETIC_CHANNEL))
        .collect();
    PacketTrace::new(records).expect("synthetic channel is valid")
}

/// Arrivals in `[0, duration_ms)` on the synthetic channel. Deterministic
/// for a given seed.
pub fn generate_trace(params: &Mmpp2Params, duration_ms: f64, seed: u64) -> PacketTrace {
    if !(duration_ms > 0.0) {
        return PacketTrace::default();
    }
    synthetic_trace(MmppArrivals::new(params, seed).take_while(|&t| t < duration_ms))
}

/// Exactly `n_arrivals` arrivals.
pub fn generate_arrivals(params: &Mmpp2Params, n_arrivals: usize, seed: u64) -> PacketTrace {
    synthetic_trace(MmppArrivals::new(params, seed).take(n_arrivals))
}
