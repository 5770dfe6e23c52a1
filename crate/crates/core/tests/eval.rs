mod common;

use whitespace_kit::eval::{
    calibrate_x, calibrate_z, label_ground_truth, write_slot_csv, EvalError, DEFAULT_X_GRID_S,
};
use whitespace_kit::hmm::{BaumWelchConfig, ChannelState, ThresholdPolicy, ThresholdRule};
use whitespace_kit::mmpp::{generate_trace, Mmpp2Params};
use whitespace_kit::pipeline::{run_pipeline, PipelineConfig};
use whitespace_kit::stats::HurstConfig;
use whitespace_kit::trace::PacketTrace;

#[test]
fn truth_flips_at_regime_boundary() {
    let ts = common::alternating_trace(5.0, 80.0, 50.0, 2);
    let trace = PacketTrace::from_timestamps(&ts, 3).unwrap();
    let truth = label_ground_truth(&trace, 1_000.0, 5.0, ThresholdRule::Fixed(20.0)).unwrap();
    let busy = truth.iter().take_while(|&&s| s == ChannelState::Busy).count();
    assert_eq!(busy, 10);
    assert!(truth[busy..].iter().all(|&s| s == ChannelState::Free));
}

#[test]
fn x_sweep_improves_then_levels() {
    let source = Mmpp2Params::new(0.2, 0.01, 1.0 / 30_000.0, 1.0 / 30_000.0).unwrap();
    let grid = [60.0, 240.0, 960.0, 1920.0];
    let (mut first, mut last) = (0.0, 0.0);
    for seed in 0..4 {
        let trace = generate_trace(&source, 3_000_000.0, 100 + seed);
        let t = calibrate_x(&trace, &grid, 1.0, 900.0, seed, &HurstConfig::default()).unwrap();
        assert_eq!(t.rows.len(), grid.len());
        first += t.rows[0].rmse_ms.unwrap();
        last += t.rows[grid.len() - 1].rmse_ms.unwrap();
    }
    // Averaged over seeds the longest training span is no worse than the shortest.
    assert!(last <= first, "x = 60 s: {first}, x = 1920 s: {last}");
}

#[test]
fn x_sweep_needs_enough_trace() {
    let source = Mmpp2Params::new(0.2, 0.01, 0.001, 0.001).unwrap();
    let trace = generate_trace(&source, 600_000.0, 1);
    assert!(matches!(
        calibrate_x(&trace, &DEFAULT_X_GRID_S, 1.0, 300.0, 0, &HurstConfig::default()),
        Err(EvalError::TraceTooShort { .. })
    ));
}

#[test]
fn z_sweep_table_shape_and_monotone_case() {
    let source = Mmpp2Params::new(0.5, 0.005, 1.0 / 60_000.0, 1.0 / 60_000.0).unwrap();
    let trace = generate_trace(&source, 3_600_000.0, 12);
    let grid = [60.0, 120.0, 300.0, 600.0, 960.0];
    let t = calibrate_z(&trace, &grid, &source, 1_000.0, 5.0, ThresholdPolicy::FixedTrainingAverage, &BaumWelchConfig::default())
        .unwrap();
    assert_eq!(t.rows.len(), grid.len());
    for r in &t.rows {
        for v in [r.hit_rate, r.precision, r.fdr, r.f1].into_iter().flatten() {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    // Only the longest span sees both regimes: the first 600 s are one
    // uniform burst, then sparse and dense minutes alternate. A moving-average
    // prediction threshold makes the ground truth the same for every z.
    let mut ts: Vec<u64> = (0..600_000u64).step_by(3).map(|ms| ms * 1_000).collect();
    ts.extend(common::alternating_trace(150.0, 3.0, 60.0, 60).iter().map(|t| t + 600_000_000));
    let trace = PacketTrace::from_timestamps(&ts, 1).unwrap();
    let policy = ThresholdPolicy::MovingAverage { window_count: 40 };
    let t = calibrate_z(&trace, &grid, &source, 1_000.0, 5.0, policy, &BaumWelchConfig::default()).unwrap();
    assert!(t.rows[..4].iter().all(|r| r.degenerate));
    assert_eq!(t.best_z_s, Some(960.0), "{:#?}", t.rows);
}

#[test]
fn z_longer_than_trace_rejected() {
    let source = Mmpp2Params::new(0.2, 0.01, 0.001, 0.001).unwrap();
    let trace = generate_trace(&source, 100_000.0, 1);
    assert!(matches!(
        calibrate_z(&trace, &[960.0], &source, 500.0, 5.0, ThresholdPolicy::default(), &BaumWelchConfig::default()),
        Err(EvalError::TraceTooShort { .. })
    ));
}

#[test]
fn mmpp_beats_pareto_on_self_generated_traffic() {
    let source = Mmpp2Params::new(0.05, 0.004, 1.0 / 5_000.0, 1.0 / 20_000.0).unwrap();
    let trace = generate_trace(&source, 3_600_000.0, 31);
    let run = run_pipeline(&trace, &PipelineConfig { x_s: 1_200.0, seed: 31, ..PipelineConfig::default() }).unwrap();
    let m = &run.report.models;
    assert!(m.mmpp.rmse_pct < m.pareto.unwrap().rmse_pct, "{m:?}");
}

#[test]
fn slot_csv_columns() {
    let source = Mmpp2Params::new(0.5, 0.005, 1.0 / 60_000.0, 1.0 / 60_000.0).unwrap();
    let trace = generate_trace(&source, 1_200_000.0, 2);
    let run = run_pipeline(&trace, &PipelineConfig { seed: 2, ..PipelineConfig::default() }).unwrap();
    let mut out = Vec::new();
    write_slot_csv(&run.slots, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "slot_start_us,window_mean_iat_ms,threshold_ms,observation,prediction,p_free,truth,random_prediction"
    );
    assert_eq!(lines.count(), run.slots.len());
}
