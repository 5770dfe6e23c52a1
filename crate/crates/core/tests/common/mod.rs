//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use whitespace_kit::seeded_rng;

/// Autocovariance of unit-variance fractional Gaussian noise at lag `k`.
pub fn fgn_autocov(h: f64, k: usize) -> f64 {
    let k = k as f64;
    let e = 2.0 * h;
    0.5 * ((k + 1.0).powf(e) - 2.0 * k.powf(e) + (k - 1.0).abs().powf(e))
}

/// Davies-Harte circulant embedding: `n` samples of unit-variance fGn.
pub fn fgn_davies_harte(n: usize, h: f64, seed: u64) -> Vec<f64> {
    let m = 2 * n;
    let mut row: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let lag = if j <= n { j } else { m - j };
            Complex::new(fgn_autocov(h, lag), 0.0)
        })
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(m).process(&mut row);
    let eig: Vec<f64> = row.iter().map(|c| c.re.max(0.0)).collect();

    let mut rng = seeded_rng(seed);
    let mut w: Vec<Complex<f64>> = (0..m)
        .map(|j| {
            let s = (eig[j] / m as f64).sqrt();
            let (a, b): (f64, f64) = (StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
            Complex::new(s * a, s * b)
        })
        .collect();
    planner.plan_fft_forward(m).process(&mut w);
    w[..n].iter().map(|c| c.re).collect()
}

/// States and symbols drawn from a 2-state, 2-symbol HMM.
pub fn sample_hmm(
    initial: [f64; 2],
    a: [[f64; 2]; 2],
    b: [[f64; 2]; 2],
    n: usize,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    let mut rng = seeded_rng(seed);
    let draw = |p: [f64; 2], rng: &mut rand_chacha::ChaCha8Rng| usize::from(rng.random::<f64>() >= p[0]);
    let mut states = Vec::with_capacity(n);
    let mut symbols = Vec::with_capacity(n);
    let mut s = draw(initial, &mut rng);
    for _ in 0..n {
        states.push(s);
        symbols.push(draw(b[s], &mut rng));
        s = draw(a[s], &mut rng);
    }
    (states, symbols)
}

/// Two-regime timestamps: `dense_ms` gaps for `block_s`, then `sparse_ms`
/// gaps for `block_s`, repeated `blocks` times. Deterministic.
pub fn alternating_trace(dense_ms: f64, sparse_ms: f64, block_s: f64, blocks: usize) -> Vec<u64> {
    let mut ts = Vec::new();
    let mut t = 0.0;
    for b in 0..blocks {
        let gap = if b % 2 == 0 { dense_ms } else { sparse_ms };
        let end = (b + 1) as f64 * block_s * 1e3;
        while t < end {
            ts.push((t * 1e3).round() as u64);
            t += gap;
        }
    }
    ts
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
