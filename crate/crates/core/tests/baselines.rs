mod common;

use whitespace_kit::baselines::{
    fit_pareto, generate_pareto_trace, pareto_iats_ms, random_access_predict, ParetoParams, WSN_MAX_PACKET_MS,
};
use whitespace_kit::eval::score;
use whitespace_kit::hmm::ChannelState;
use whitespace_kit::trace::{extract_iats, IatSeries};

#[test]
fn shape_mle_recovers_generating_shape() {
    let truth = ParetoParams::new(WSN_MAX_PACKET_MS, 1.5).unwrap();
    for seed in 0..3 {
        let fit = fit_pareto(&IatSeries::from_ms(&pareto_iats_ms(&truth, 100_000, seed)), WSN_MAX_PACKET_MS).unwrap();
        assert!((fit.shape - 1.5).abs() <= 0.05, "seed {seed}: {}", fit.shape);
    }
}

#[test]
fn closed_form_mean() {
    let p = ParetoParams::new(WSN_MAX_PACKET_MS, 1.5).unwrap();
    assert!((p.mean_ms() - 12.768).abs() < 1e-9);
    // The variance is infinite at shape 1.5, so pool several seeds.
    let means: Vec<f64> = (0..5).map(|s| common::mean(&pareto_iats_ms(&p, 1_000_000, s))).collect();
    let m = common::mean(&means);
    assert!((m / 12.768 - 1.0).abs() < 0.02, "{m}");
}

#[test]
fn renewal_trace_gaps_respect_scale() {
    let p = ParetoParams::new(WSN_MAX_PACKET_MS, 2.0).unwrap();
    let trace = generate_pareto_trace(&p, 100_000.0, 4);
    let iats = extract_iats(&trace).unwrap();
    // microsecond rounding may shave half a microsecond
    assert!(iats.to_ms().iter().all(|&g| g >= WSN_MAX_PACKET_MS - 0.001));
    assert_eq!(trace, generate_pareto_trace(&p, 100_000.0, 4));
}

#[test]
fn random_access_is_independent_of_truth() {
    // Long Free and Busy runs; the predictor ignores them entirely.
    let truth: Vec<ChannelState> = (0..20_000)
        .map(|i| if (i / 37) % 3 == 0 { ChannelState::Busy } else { ChannelState::Free })
        .collect();
    for seed in 0..5 {
        let r = score(&random_access_predict(truth.len(), seed), &truth).unwrap();
        assert!((r.hit_rate.unwrap() - 0.5).abs() <= 0.03);
    }
}
