//! Every example runs to completion and produces a sensible result.

#[allow(dead_code)]
#[path = "../examples/load_and_merge_traces.rs"]
mod load_and_merge_traces;
#[allow(dead_code)]
#[path = "../examples/traffic_statistics.rs"]
mod traffic_statistics;
#[allow(dead_code)]
#[path = "../examples/fit_mmpp.rs"]
mod fit_mmpp;
#[allow(dead_code)]
#[path = "../examples/generate_traffic.rs"]
mod generate_traffic;
#[allow(dead_code)]
#[path = "../examples/pareto_baseline.rs"]
mod pareto_baseline;
#[allow(dead_code)]
#[path = "../examples/train_hmm.rs"]
mod train_hmm;
#[allow(dead_code)]
#[path = "../examples/evaluate_predictions.rs"]
mod evaluate_predictions;
#[allow(dead_code)]
#[path = "../examples/calibrate.rs"]
mod calibrate;
#[allow(dead_code)]
#[path = "../examples/end_to_end_pipeline.rs"]
mod end_to_end_pipeline;

#[test]
fn load_and_merge() {
    // 1000 + 1000 packets minus the 91 instants where both channels fire
    assert_eq!(load_and_merge_traces::run_example().unwrap(), 1908);
}

#[test]
fn statistics() {
    let s = traffic_statistics::run_example().unwrap();
    assert!(s.c > 1.0 && s.h > 0.5 && s.h < 1.0);
}

#[test]
fn mmpp_fit() {
    let m = fit_mmpp::run_example().unwrap();
    assert!((m.y_lower_bound_ms() - 1628.1).abs() < 0.1);
}

#[test]
fn generation() {
    let (mmpp, pareto) = generate_traffic::run_example().unwrap();
    assert!(mmpp > 0 && pareto > 0);
}

#[test]
fn pareto_comparison() {
    let (mmpp, pareto) = pareto_baseline::run_example().unwrap();
    assert!(mmpp < pareto);
}

#[test]
fn hmm_training() {
    assert!(train_hmm::run_example().unwrap() > 0.8);
}

#[test]
fn scoring() {
    let r = evaluate_predictions::run_example().unwrap();
    assert_eq!(r.confusion.tp, 970);
}

#[test]
fn calibration() {
    let (x, z) = calibrate::run_example().unwrap();
    assert_eq!(x.rows.len(), 5);
    assert_eq!(z.rows.len(), 5);
    assert!(x.best_x_s.is_some() && z.best_z_s.is_some());
}

#[test]
fn pipeline() {
    let r = end_to_end_pipeline::run_example().unwrap();
    assert!(r.evaluation.hit_rate.unwrap() > r.random_access.hit_rate.unwrap());
}
