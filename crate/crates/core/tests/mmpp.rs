use whitespace_kit::mmpp::{
    coxian_phase, fit_from_stats, generate_arrivals, generate_trace, Mmpp2Params, MmppArrivals, MmppError,
};
use whitespace_kit::stats::{basic_stats, TrafficStats};
use whitespace_kit::trace::extract_iats;

fn simulated_mean(params: &Mmpp2Params, n: usize, seed: u64) -> f64 {
    let t: Vec<f64> = MmppArrivals::new(params, seed).take(n + 1).collect();
    (t[n] - t[0]) / n as f64
}

#[test]
fn coxian_mixture_mean_by_simulation() {
    use rand::Rng;
    use rand_distr::{Distribution, Exp};
    let ph = coxian_phase(18.6, 0.80);
    assert!((ph.p - 0.78125).abs() < 1e-12);
    assert!((ph.mu1_per_ms - 0.047161).abs() < 1e-6);
    let (e1, e2) = (Exp::new(ph.mu1_per_ms).unwrap(), Exp::new(ph.mu2_per_ms).unwrap());
    let mut rng = whitespace_kit::seeded_rng(8);
    let n = 1_000_000;
    let sum: f64 = (0..n)
        .map(|_| if rng.random::<f64>() < ph.p { e1.sample(&mut rng) } else { e2.sample(&mut rng) })
        .sum();
    assert!((sum / n as f64 / 18.6 - 1.0).abs() < 0.01);
}

#[test]
fn channel_20_fit_reproduces_mean() {
    let fit = fit_from_stats(&TrafficStats::from_moments(141.5, 0.90, 0.63)).unwrap();
    for r in [fit.lambda1_per_ms, fit.lambda2_per_ms, fit.r1_per_ms, fit.r2_per_ms] {
        assert!(r > 0.0 && r.is_finite());
    }
    let pi = [fit.r2_per_ms, fit.r1_per_ms].map(|v| v / (fit.r1_per_ms + fit.r2_per_ms));
    assert!((fit.pi[0] - pi[0]).abs() < 1e-15 && (fit.pi[1] - pi[1]).abs() < 1e-15);
    assert!((simulated_mean(&fit, 1_000_000, 1) / 141.5 - 1.0).abs() < 0.02);
    assert!(fit.y_lower_bound_ms() >= (1.0 / fit.r1_per_ms).max(1.0 / fit.r2_per_ms));
}

#[test]
fn equal_rates_collapse_to_poisson() {
    let p = Mmpp2Params::new(0.1, 0.1, 0.01, 0.003).unwrap();
    let iats = extract_iats(&generate_arrivals(&p, 1_000_000, 2)).unwrap();
    let s = basic_stats(&iats).unwrap();
    assert!((s.m1_ms / 10.0 - 1.0).abs() < 0.01, "{}", s.m1_ms);
    assert!((s.c - 1.0).abs() < 0.02, "{}", s.c);
    assert!(matches!(
        whitespace_kit::mmpp::transition_rates(&coxian_phase(10.0, 0.9), 0.1, 0.1),
        Err(MmppError::NumericalFailure { stage: "r1", .. })
    ));
}

#[test]
fn arrival_count_concentrates() {
    // Count variance of an MMPP over [0, t] with s = r1 + r2.
    let p = Mmpp2Params::new(0.2, 0.02, 0.001, 0.002).unwrap();
    let t = 2_000_000.0;
    let s = p.r1_per_ms + p.r2_per_ms;
    let mean_rate = p.mean_rate_per_ms();
    let var = mean_rate * t
        + 2.0 * (p.lambda1_per_ms - p.lambda2_per_ms).powi(2) * p.r1_per_ms * p.r2_per_ms / s.powi(3)
            * (t - (1.0 - (-s * t).exp()) / s);
    for seed in 0..5 {
        let n = generate_trace(&p, t, seed).len() as f64;
        assert!((n - mean_rate * t).abs() < 3.0 * var.sqrt(), "seed {seed}: {n}");
    }
}

#[test]
fn hyperexponential_round_trip() {
    let fit = fit_from_stats(&TrafficStats::from_moments(25.0, 1.8, 0.75)).unwrap();
    let iats = extract_iats(&generate_arrivals(&fit, 1_000_000, 6)).unwrap();
    let s = basic_stats(&iats).unwrap();
    assert!((s.m1_ms / 25.0 - 1.0).abs() < 0.02);
    assert!((s.c / 1.8 - 1.0).abs() < 0.05);
}

#[test]
fn generation_is_reproducible() {
    let p = Mmpp2Params::new(0.3, 0.03, 0.002, 0.002).unwrap();
    assert_eq!(generate_trace(&p, 50_000.0, 9), generate_trace(&p, 50_000.0, 9));
    assert_ne!(generate_trace(&p, 50_000.0, 9), generate_trace(&p, 50_000.0, 10));
}
