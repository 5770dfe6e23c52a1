//! Windowed observations, Baum-Welch training and slot-by-slot prediction
//! of Free and Busy periods.

use whitespace_kit::hmm::{
    baum_welch, extract_observations, init_model, predict_next, predict_sequence, training_threshold,
    BaumWelchConfig, ThresholdPolicy, ThresholdRule,
};
use whitespace_kit::mmpp::{generate_trace, Mmpp2Params};

pub fn run_example() -> anyhow::Result<f64> {
    let source = Mmpp2Params::new(0.5, 0.005, 1.0 / 60_000.0, 1.0 / 60_000.0)?;
    let trace = generate_trace(&source, 1_800_000.0, 11);
    let (y_ms, t_s) = (1_000.0, 5.0);

    let obs = extract_observations(&trace, y_ms, t_s, ThresholdRule::AverageOfWindows)?;
    let (train, test) = obs.split_at(obs.len() / 2);

    let mut model = init_model(&source).with_policy(ThresholdPolicy::FixedTrainingAverage);
    model.threshold_value_ms = training_threshold(train);
    let trained = baum_welch(&model, train, &BaumWelchConfig::default())?;
    println!(
        "{} iterations, log-likelihood {:.2}, A = {:?}, B = {:?}",
        trained.iterations,
        trained.final_log_likelihood().unwrap_or(f64::NAN),
        trained.model.transition,
        trained.model.emission
    );

    let preds = predict_sequence(&trained.model, test);
    let agree = preds
        .iter()
        .zip(test)
        .filter(|(p, o)| p.state == o.label.implied_state())
        .count() as f64
        / test.len() as f64;
    let next = predict_next(&trained.model, test, test.last().map_or(0, |o| o.window_start_us) + 5_000_000);
    println!("{:.1}% of test slots predicted correctly; next slot: {:?}", 100.0 * agree, next);
    Ok(agree)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
