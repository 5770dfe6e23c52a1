//! Fit an MMPP(2) to measured channel statistics and check the fitted
//! process against its own simulation.

use whitespace_kit::mmpp::{fit_from_stats, fit_phase, generate_arrivals, Mmpp2Params};
use whitespace_kit::stats::{basic_stats, TrafficStats};
use whitespace_kit::trace::extract_iats;

pub fn run_example() -> anyhow::Result<Mmpp2Params> {
    // A lightly loaded home channel: 141.5 ms mean gap, C = 0.90, H = 0.63.
    let stats = TrafficStats::from_moments(141.5, 0.90, 0.63);
    let phase = fit_phase(&stats)?;
    println!(
        "{:?} phase: p = {:.5}, mu1 = {:.6}/ms, mu2 = {:.6}/ms",
        phase.branch, phase.p, phase.mu1_per_ms, phase.mu2_per_ms
    );

    let mmpp = fit_from_stats(&stats)?;
    println!(
        "lambda = ({:.6}, {:.6})/ms, r = ({:.6}, {:.6})/ms, pi = ({:.3}, {:.3}), y_lb = {:.0} ms",
        mmpp.lambda1_per_ms,
        mmpp.lambda2_per_ms,
        mmpp.r1_per_ms,
        mmpp.r2_per_ms,
        mmpp.pi[0],
        mmpp.pi[1],
        mmpp.y_lower_bound_ms()
    );

    let simulated = basic_stats(&extract_iats(&generate_arrivals(&mmpp, 200_000, 3))?)?;
    println!("simulated mean gap {:.1} ms (target {:.1})", simulated.m1_ms, stats.m1_ms);
    println!("{}", serde_json::to_string_pretty(&mmpp)?);
    Ok(mmpp)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
