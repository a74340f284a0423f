//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use bcp_core::mc::chunk_rng;
use bcp_core::normal::phi;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

/// Probability that Brownian motion from 0 stays in `(a, b)` up to `t`, by the
/// method of images.
pub fn two_barrier_series(a: f64, b: f64, t: f64) -> f64 {
    let delta = b - a;
    let sd = t.sqrt();
    let mut p = 0.0;
    for k in -50i32..=50 {
        let shift = 2.0 * k as f64 * delta;
        p += phi((b - shift) / sd) - phi((a - shift) / sd);
        p -= phi((2.0 * b - a - shift) / sd) - phi((b - shift) / sd);
    }
    p
}

/// Same quantity for the symmetric band `(-1, 1)`, from the eigenfunction expansion.
pub fn symmetric_unit_band(t: f64) -> f64 {
    let pi = std::f64::consts::PI;
    (0..200)
        .map(|m| {
            let k = (2 * m + 1) as f64;
            let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
            sign / k * (-k * k * pi * pi * t / 8.0).exp()
        })
        .sum::<f64>()
        * 4.0
        / pi
}

/// `E f(X)` for `X ~ N(0, sd²)` restricted to `[lo, hi]`, composite Simpson with `intervals` (even) cells.
pub fn gaussian_expectation<F: Fn(f64) -> f64>(f: F, sd: f64, lo: f64, hi: f64, intervals: usize) -> f64 {
    assert!(intervals % 2 == 0);
    let h = (hi - lo) / intervals as f64;
    let w = |x: f64| f(x) * (-0.5 * (x / sd).powi(2)).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let mut acc = w(lo) + w(hi);
    for i in 1..intervals {
        let x = lo + i as f64 * h;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * w(x);
    }
    acc * h / 3.0
}

/// A scalar SDE `dX = μ(t, X) dt + σ(t, X) dW` with a band `(a(t), b(t))`.
pub struct SdeProblem<'a> {
    pub drift: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub diffusion: &'a (dyn Fn(f64, f64) -> f64 + Sync),
    pub lower: &'a (dyn Fn(f64) -> f64 + Sync),
    pub upper: &'a (dyn Fn(f64) -> f64 + Sync),
    pub x0: f64,
    pub horizon: f64,
}

/// Euler-Maruyama estimate of the probability of staying inside the band.
///
/// The band is checked at every step; between steps each path is weighted by
/// the Brownian-bridge survival probability with the diffusion coefficient
/// frozen at the left end, which removes the leading discrete-monitoring bias.
/// Returns `(mean, std_error)`.
pub fn euler_maruyama_bcp(p: &SdeProblem<'_>, steps: usize, paths: u64, seed: u64) -> (f64, f64) {
    let dt = p.horizon / steps as f64;
    let sqrt_dt = dt.sqrt();
    let times: Vec<f64> = (0..=steps).map(|k| p.horizon * k as f64 / steps as f64).collect();
    let lows: Vec<f64> = times.iter().map(|&t| (p.lower)(t)).collect();
    let ups: Vec<f64> = times.iter().map(|&t| (p.upper)(t)).collect();
    let chunk = 1000u64;
    let chunks = paths.div_ceil(chunk);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let count = chunk.min(paths - c * chunk);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut x = p.x0;
                let mut weight = 1.0;
                for k in 0..steps {
                    let t = times[k];
                    let sig = (p.diffusion)(t, x);
                    let z: f64 = rng.sample(StandardNormal);
                    let next = x + (p.drift)(t, x) * dt + sig * sqrt_dt * z;
                    let (a1, b1) = (lows[k + 1], ups[k + 1]);
                    if !(next > a1 && next < b1) {
                        weight = 0.0;
                        break;
                    }
                    let var = sig * sig * dt;
                    let up = 2.0 * (ups[k] - x) * (b1 - next) / var;
                    let lo = 2.0 * (x - lows[k]) * (next - a1) / var;
                    let mut cross = 0.0;
                    if up < 40.0 {
                        cross += (-up).exp();
                    }
                    if lo < 40.0 {
                        cross += (-lo).exp();
                    }
                    weight *= (1.0 - cross).max(0.0);
                    x = next;
                }
                s += weight;
                s2 += weight * weight;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    let n = paths as f64;
    let mean = s / n;
    let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Daniels' boundary; its value at `t = 0` is the limit `1/2`.
pub fn daniels(t: f64) -> f64 {
    if t == 0.0 {
        return 0.5;
    }
    0.5 - t * (0.25 + 0.25 * (1.0 + 8.0 * (-1.0 / t).exp()).sqrt()).ln()
}
