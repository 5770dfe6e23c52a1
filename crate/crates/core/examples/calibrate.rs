//! Sweeps over the MMPP(2) training length x and the HMM training length z.

use whitespace_kit::eval::{calibrate_x, calibrate_z, XCalibration, ZCalibration};
use whitespace_kit::hmm::{BaumWelchConfig, ThresholdPolicy};
use whitespace_kit::mmpp::{fit_from_stats, generate_trace, Mmpp2Params};
use whitespace_kit::stats::{traffic_stats, HurstConfig};
use whitespace_kit::trace::{extract_iats, window_trace};

pub fn run_example() -> anyhow::Result<(XCalibration, ZCalibration)> {
    let source = Mmpp2Params::new(0.2, 0.01, 1.0 / 30_000.0, 1.0 / 30_000.0)?;
    let trace = generate_trace(&source, 5_400_000.0, 3);

    let x = calibrate_x(&trace, &[60.0, 120.0, 240.0, 480.0, 960.0], 1.0, 1_200.0, 3, &HurstConfig::default())?;
    for row in &x.rows {
        println!("x = {:>5} s: RMSE {:?} ms {}", row.x_s, row.rmse_ms, row.error.as_deref().unwrap_or(""));
    }
    println!("best x = {:?} s", x.best_x_s);

    let fitted = fit_from_stats(&traffic_stats(&extract_iats(&window_trace(&trace, 0, 600_000_000)?)?, &HurstConfig::default())?)?;
    let z = calibrate_z(
        &trace,
        &[60.0, 120.0, 300.0, 600.0, 960.0],
        &fitted,
        1_000.0,
        5.0,
        ThresholdPolicy::FixedTrainingAverage,
        &BaumWelchConfig::default(),
    )?;
    for row in &z.rows {
        println!("z = {:>4} s: hit {:?}, precision {:?}", row.z_s, row.hit_rate, row.precision);
    }
    println!("best z = {:?} s over {} scored slots", z.best_z_s, z.scoring_slots);
    Ok((x, z))
}

#[allow(dead_code)]
fn main() -> anyhow::Result<()> {
    run_example().map(|_| ())
}
