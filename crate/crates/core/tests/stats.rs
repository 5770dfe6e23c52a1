mod common;

use rand_distr::{Distribution, Exp};
use whitespace_kit::stats::{
    basic_stats_ms, classify_branch, hurst_boxed_periodogram, hurst_median, hurst_peng, hurst_periodogram,
    FitBranch, StatsError, TrafficStats,
};

fn exponential(n: usize, seed: u64) -> Vec<f64> {
    let exp = Exp::new(1.0 / 20.0).unwrap();
    let mut rng = whitespace_kit::seeded_rng(seed);
    (0..n).map(|_| exp.sample(&mut rng)).collect()
}

#[test]
fn fgn_oracle_matches_its_autocovariance() {
    // Pooled sample autocovariance over 40 independent paths.
    let (n, h) = (4096, 0.8);
    let mut acc = [0.0; 4];
    let paths = 40;
    for seed in 0..paths {
        let x = common::fgn_davies_harte(n, h, seed);
        for (lag, a) in acc.iter_mut().enumerate() {
            *a += (0..n - lag).map(|i| x[i] * x[i + lag]).sum::<f64>() / (n - lag) as f64;
        }
    }
    for (lag, a) in acc.iter().enumerate() {
        let want = common::fgn_autocov(h, lag);
        let got = a / paths as f64;
        assert!((got - want).abs() < 0.03, "lag {lag}: {got} vs {want}");
    }
}

#[test]
fn exponential_spread_per_estimator() {
    let mut peng_in = 0;
    let mut pg_in = 0;
    let mut box_in = 0;
    for seed in 0..50 {
        let x = exponential(10_000, seed);
        peng_in += usize::from((0.43..=0.57).contains(&hurst_peng(&x).unwrap()));
        pg_in += usize::from((0.40..=0.60).contains(&hurst_periodogram(&x).unwrap()));
        box_in += usize::from((0.40..=0.60).contains(&hurst_boxed_periodogram(&x).unwrap()));
    }
    assert!(peng_in >= 45, "Peng {peng_in}/50");
    assert!(pg_in >= 45, "periodogram {pg_in}/50");
    assert!(box_in >= 45, "boxed periodogram {box_in}/50");
}

#[test]
fn fgn_estimates_near_truth() {
    for h in [0.7, 0.8, 0.9] {
        let x = common::fgn_davies_harte(1 << 15, h, 5);
        for (name, est) in [
            ("peng", hurst_peng(&x).unwrap()),
            ("periodogram", hurst_periodogram(&x).unwrap()),
            ("boxed", hurst_boxed_periodogram(&x).unwrap()),
        ] {
            assert!((est - h).abs() <= 0.1, "{name} at H = {h}: {est}");
        }
    }
}

#[test]
fn median_lies_between_estimates() {
    for seed in 0..10 {
        let x = common::fgn_davies_harte(4096, 0.6 + 0.03 * seed as f64, seed);
        let e = hurst_median(&x).unwrap();
        let lo = e.peng.min(e.periodogram).min(e.boxed_periodogram);
        let hi = e.peng.max(e.periodogram).max(e.boxed_periodogram);
        assert!(lo <= e.median && e.median <= hi);
    }
}

#[test]
fn estimators_are_scale_invariant() {
    let x = exponential(5_000, 9);
    let y: Vec<f64> = x.iter().map(|v| v * 37.5).collect();
    for f in [hurst_peng, hurst_periodogram, hurst_boxed_periodogram] {
        assert!((f(&x).unwrap() - f(&y).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn length_precondition() {
    assert!(matches!(
        hurst_periodogram(&[1.0; 100]),
        Err(StatsError::TooFewSamples { needed: 256, found: 100 })
    ));
}

#[test]
fn basic_stats_scale() {
    let x = exponential(1_000, 2);
    let a = basic_stats_ms(&x).unwrap();
    let b = basic_stats_ms(&x.iter().map(|v| v * 3.0).collect::<Vec<_>>()).unwrap();
    assert!((b.m1_ms - 3.0 * a.m1_ms).abs() < 1e-9 * b.m1_ms);
    assert!((b.sigma_ms - 3.0 * a.sigma_ms).abs() < 1e-9 * b.sigma_ms);
    assert!((b.c - a.c).abs() < 1e-12);
}

#[test]
fn published_channels_are_coxian() {
    for (c, h) in [(0.80, 0.54), (0.87, 0.51), (0.90, 0.63), (0.92, 0.71)] {
        assert_eq!(classify_branch(&TrafficStats::from_moments(10.0, c, h)), FitBranch::Coxian);
    }
    assert_eq!(classify_branch(&TrafficStats::from_moments(10.0, 1.3, 0.7)), FitBranch::Hyperexponential);
    assert_eq!(classify_branch(&TrafficStats::from_moments(10.0, 0.5, 0.4)), FitBranch::Unsupported);
    assert_eq!(classify_branch(&TrafficStats::from_moments(10.0, 1.0, 0.4)), FitBranch::Coxian);
}
