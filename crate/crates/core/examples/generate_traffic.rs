//! Synthetic traces from an MMPP(2) and from a Pareto renewal process,
//! written as CSV that the command-line tool reads back.

use whitespace_kit::baselines::{generate_pareto_trace, ParetoParams, WSN_MAX_PACKET_MS};
use whitespace_kit::mmpp::{generate_trace, Mmpp2Params};
use whitespace_kit::trace::write_trace_csv;

pub fn run_example() -> anyhow::Result<(usize, usize)> {
    let mmpp = Mmpp2Params::new(0.1, 0.01, 0.0005, 0.0005)?;
    let a = generate_trace(&mmpp, 60_000.0, 42);
    // Same seed, same trace.
    assert_eq!(a, generate_trace(&mmpp, 60_000.0, 42));

    let pareto = ParetoParams::new(WSN_MAX_PACKET_MS, 1.4)?;
    let b = generate_pareto_trace(&pareto, 60_000.0, 42);
    println!(
        "one minute: {} MMPP(2) packets (expected {:.0}), {} Pareto packets",
        a.len(),
        60_000.0 * mmpp.mean_rate_per_ms(),
        b.len()
    );

    let mut csv = Vec::new();
    write_trace_csv(&a, &mut csv)?;
    print!("{}", String::from_utf8_lossy(&csv).lines().take(4).collect::<Vec<_>>().join("\n"));
    println!();
    Ok((a.len(), b.len()))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
