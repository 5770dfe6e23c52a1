//! MMPP(2) against the heavy-tailed Pareto baseline: both fitted on one
//! hour of traffic and compared with the next hour by quantile RMSE.

use whitespace_kit::baselines::{fit_pareto, pareto_iats_ms, WSN_MAX_PACKET_MS};
use whitespace_kit::eval::{modeled_iats, quantile_rmse, quantile_rmse_ms};
use whitespace_kit::mmpp::{fit_from_stats, generate_trace, Mmpp2Params};
use whitespace_kit::stats::{traffic_stats, HurstConfig};
use whitespace_kit::trace::{extract_iats, window_trace};

pub fn run_example() -> anyhow::Result<(f64, f64)> {
    let source = Mmpp2Params::new(0.05, 0.004, 1.0 / 5_000.0, 1.0 / 20_000.0)?;
    let trace = generate_trace(&source, 7_200_000.0, 5);
    let hour = 3_600_000_000;
    let train = extract_iats(&window_trace(&trace, 0, hour)?)?;
    let test = extract_iats(&window_trace(&trace, hour, hour)?)?;

    let mmpp = fit_from_stats(&traffic_stats(&train, &HurstConfig::default())?)?;
    let modeled = modeled_iats(&mmpp, mmpp.y_lower_bound_ms(), test.count(), 1)?;
    let mmpp_rmse = quantile_rmse(&modeled, &test)?;

    let pareto = fit_pareto(&train, WSN_MAX_PACKET_MS)?;
    let pareto_rmse = quantile_rmse_ms(&pareto_iats_ms(&pareto, test.count(), 2), &test.to_ms())?;

    println!("Pareto shape {:.3} (scale {} ms)", pareto.shape, pareto.scale_ms);
    println!(
        "RMSE: MMPP(2) {:.1} ms ({:.0}%), Pareto {:.1} ms ({:.0}%)",
        mmpp_rmse.rmse_ms, mmpp_rmse.rmse_pct, pareto_rmse.rmse_ms, pareto_rmse.rmse_pct
    );
    Ok((mmpp_rmse.rmse_ms, pareto_rmse.rmse_ms))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
