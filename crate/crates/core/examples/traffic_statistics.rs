//! Mean, coefficient of variation and Hurst exponent of bursty traffic,
//! with the three Hurst estimators shown separately.

use whitespace_kit::mmpp::{generate_arrivals, Mmpp2Params};
use whitespace_kit::stats::{hurst_median, traffic_stats, HurstConfig, TrafficStats};
use whitespace_kit::trace::extract_iats;

pub fn run_example() -> anyhow::Result<TrafficStats> {
    let source = Mmpp2Params::new(0.2, 0.02, 0.001, 0.002)?;
    let iats = extract_iats(&generate_arrivals(&source, 50_000, 1))?;

    let stats = traffic_stats(&iats, &HurstConfig::default())?;
    println!(
        "M1 = {:.2} ms, sigma = {:.2} ms, C = {:.2}, H = {:.2} ({:?} branch)",
        stats.m1_ms,
        stats.sigma_ms,
        stats.c,
        stats.h,
        stats.branch()
    );

    let h = hurst_median(&iats.to_ms())?;
    println!(
        "Peng {:.3}, periodogram {:.3}, boxed periodogram {:.3} -> median {:.3}",
        h.peng, h.periodogram, h.boxed_periodogram, h.median
    );
    Ok(stats)
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
