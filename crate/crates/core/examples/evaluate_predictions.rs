//! Confusion-matrix scoring, including the undefined-metric cases.

use whitespace_kit::baselines::random_access_predict;
use whitespace_kit::eval::{score, ConfusionMatrix, EvalReport};
use whitespace_kit::hmm::ChannelState;

pub fn run_example() -> anyhow::Result<EvalReport> {
    // A busy office channel: 970 hits, 289 false Free calls.
    let office = ConfusionMatrix::new(970, 289, 98, 23).report();
    println!(
        "hit {:.1}%, FDR {:.1}%, F1 {:.1}%",
        100.0 * office.hit_rate.unwrap_or(f64::NAN),
        100.0 * office.fdr.unwrap_or(f64::NAN),
        100.0 * office.f1.unwrap_or(f64::NAN)
    );

    // With no Free slots at all, hit rate is undefined and reported as null.
    let truth = vec![ChannelState::Busy; 1_000];
    let random = score(&random_access_predict(truth.len(), 0), &truth)?;
    println!("{}", serde_json::to_string(&random)?);
    Ok(office)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
