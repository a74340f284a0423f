mod common;

use std::sync::Arc;

use bcp_core::transforms::{reduce_ou_td, CoefFn};
use bcp_core::{GeneralBoundary, McConfig, OuTdParams, ReducedProblem, Side};
use common::{euler_maruyama_bcp, SdeProblem};

// dX = 2(1 + t - X) dt + dW, X_0 = 0, band (-0.8, 0.9 + 0.5t) on [0, 1].
const KAPPA: f64 = 2.0;
const X0: f64 = 0.0;

fn lower(_t: f64) -> f64 {
    -0.8
}

fn upper(t: f64) -> f64 {
    0.9 + 0.5 * t
}

/// The reduction assembled by hand around a given centring function.
fn reduced_with_centre(centre: fn(f64) -> f64) -> ReducedProblem {
    let var_scale = 2.0 * KAPPA;
    let s_horizon = (var_scale * 1.0).exp_m1() / var_scale;
    let time_map: CoefFn = Arc::new(move |s: f64| (var_scale * s).ln_1p() / var_scale);
    let clock: CoefFn = Arc::new(move |t: f64| (var_scale * t).exp_m1() / var_scale);
    let map = move |t: f64, v: f64| centre(0.0) - X0 + (v - centre(t)) * (KAPPA * t).exp();
    let tm = time_map.clone();
    let c = GeneralBoundary::new(Side::Lower, s_horizon, move |s| {
        let t = tm(s);
        map(t, lower(t))
    })
    .unwrap();
    let tm = time_map.clone();
    let d = GeneralBoundary::new(Side::Upper, s_horizon, move |s| {
        let t = tm(s);
        map(t, upper(t))
    })
    .unwrap();
    ReducedProblem::new(c, d, s_horizon, time_map, clock, None).unwrap()
}

#[test]
fn centring_must_follow_the_rate_function() {
    let (em_mean, em_se) = euler_maruyama_bcp(
        &SdeProblem {
            drift: &|t, x| KAPPA * (1.0 + t - x),
            diffusion: &|_, _| 1.0,
            lower: &lower,
            upper: &upper,
            x0: X0,
            horizon: 1.0,
        },
        10_000,
        40_000,
        5,
    );
    let cfg = McConfig::new(200_000, 6);

    let td = OuTdParams {
        kappa: Arc::new(|_| KAPPA),
        alpha: Arc::new(|t| 1.0 + t),
        sigma: Arc::new(|_| 1.0),
        x0: X0,
    };
    let a = GeneralBoundary::new(Side::Lower, 1.0, lower).unwrap();
    let b = GeneralBoundary::new(Side::Upper, 1.0, upper).unwrap();
    let library = reduce_ou_td(&td, &a, &b, 1.0).unwrap().estimate(64, 30, &cfg).unwrap();

    // γ' = κ(α - γ), γ(0) = α(0): γ(t) = 1/2 + t + e^{-2t}/2.
    let solved = reduced_with_centre(|t| 0.5 + t + 0.5 * (-2.0 * t).exp())
        .estimate(64, 30, &cfg)
        .unwrap();
    // Unit-rate form e^{-t}α(0) + e^{-t}∫₀ᵗ e^u α(u) du = e^{-t} + t.
    let unit_rate = reduced_with_centre(|t| (-t).exp() + t).estimate(64, 30, &cfg).unwrap();

    println!(
        "EM {em_mean:.5} ± {em_se:.5}, solved centring {:.5}, unit-rate centring {:.5}",
        solved.mean, unit_rate.mean
    );
    let tol = |se: f64| 3.0 * (em_se.powi(2) + se.powi(2)).sqrt() + 0.005;
    assert!((library.mean - solved.mean).abs() < 1e-6, "{} vs {}", library.mean, solved.mean);
    assert!(
        (solved.mean - em_mean).abs() <= tol(solved.std_error),
        "solved centring {} vs EM {em_mean}",
        solved.mean
    );
    assert!(
        (unit_rate.mean - em_mean).abs() > 5.0 * tol(unit_rate.std_error),
        "unit-rate centring {} unexpectedly close to EM {em_mean}",
        unit_rate.mean
    );
}
