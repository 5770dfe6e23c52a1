//! Full run on synthetic two-regime traffic: fit on the first x seconds,
//! train on the next z, then predict and score every T seconds.

use whitespace_kit::mmpp::{generate_trace, Mmpp2Params};
use whitespace_kit::pipeline::{run_pipeline, PipelineConfig, PipelineReport};

pub fn run_example() -> anyhow::Result<PipelineReport> {
    // Bursts at 0.5 packets/ms against a 200 ms background, each regime
    // lasting about a minute.
    let truth = Mmpp2Params::new(0.5, 0.005, 1.0 / 60_000.0, 1.0 / 60_000.0)?;
    let trace = generate_trace(&truth, 3_600_000.0, 7);

    let cfg = PipelineConfig {
        x_s: 600.0,
        z_s: 900.0,
        seed: 7,
        ..PipelineConfig::default()
    };
    let run = run_pipeline(&trace, &cfg)?;
    let r = &run.report;
    println!("stats: M1 = {:.2} ms, C = {:.2}, H = {:.2}", r.stats.m1_ms, r.stats.c, r.stats.h);
    println!("y = {:.0} ms over {} scored slots", r.y_ms, run.slots.len());
    println!("HMM:    {:?}", r.evaluation.confusion);
    println!("random: {:?}", r.random_access.confusion);
    println!("{}", serde_json::to_string_pretty(r)?);
    Ok(run.report)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
