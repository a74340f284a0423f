mod common;

use std::sync::Arc;

use bcp_core::boundary::{chord_boundary, envelopes, uniform_partition};
use bcp_core::kernel::{g, Kernel};
use bcp_core::mc::{envelope_bands, estimate_bcp, estimate_bcp_bracketed, sample_nodes};
use bcp_core::transforms::{reduce_gbm, reduce_growth, reduce_ou, reduce_ou_td};
use bcp_core::{
    GbmParams, GeneralBoundary, GrowthParams, McConfig, NodeSamples, OuParams, OuTdParams,
    Partition, PiecewiseLinearBand, PiecewiseLinearBoundary, Rate, SeriesConfig, Side,
};
use proptest::prelude::*;

fn band_strategy() -> impl Strategy<Value = (Partition, Vec<f64>, Vec<f64>, Vec<f64>)> {
    (1usize..7, 0.1f64..3.0).prop_flat_map(|(n, t)| {
        (
            Just(Partition::uniform(t, n).unwrap()),
            prop::collection::vec(0.05f64..2.5, n + 1),
            prop::collection::vec(-2.5f64..-0.05, n + 1),
            prop::collection::vec(-3.0f64..3.0, n),
        )
    })
}

fn band(p: &Partition, lows: &[f64], ups: &[f64]) -> PiecewiseLinearBand {
    PiecewiseLinearBand::new(
        PiecewiseLinearBoundary::continuous(p.clone(), Side::Lower, lows).unwrap(),
        PiecewiseLinearBoundary::continuous(p.clone(), Side::Upper, ups).unwrap(),
    )
    .unwrap()
}

proptest! {
    #[test]
    fn kernel_is_a_probability((p, ups, lows, x) in band_strategy()) {
        let x = NodeSamples::new(x).unwrap();
        let v = g(&band(&p, &lows, &ups), &x, &SeriesConfig::default()).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
    }

    #[test]
    fn kernel_vanishes_outside_band((p, ups, lows, x) in band_strategy(), k in 0usize..7) {
        let k = k % x.len();
        let mut x = x;
        x[k] = ups[k + 1] + 0.01;
        let v = g(&band(&p, &lows, &ups), &NodeSamples::new(x).unwrap(), &SeriesConfig::default()).unwrap();
        prop_assert_eq!(v, 0.0);
    }

    #[test]
    fn widening_never_decreases_kernel(
        (p, ups, lows, x) in band_strategy(),
        grow in prop::collection::vec(0.0f64..1.0, 14),
    ) {
        let x = NodeSamples::new(x).unwrap();
        let cfg = SeriesConfig::default();
        let narrow = g(&band(&p, &lows, &ups), &x, &cfg).unwrap();
        let wide_up: Vec<f64> = ups.iter().zip(&grow).map(|(u, d)| u + d).collect();
        let wide_lo: Vec<f64> = lows.iter().zip(grow.iter().rev()).map(|(l, d)| l - d).collect();
        let wide = g(&band(&p, &wide_lo, &wide_up), &x, &cfg).unwrap();
        prop_assert!(wide >= narrow - 1e-12, "narrow {narrow} wide {wide}");
    }

    #[test]
    fn distant_lower_boundary_matches_one_sided((p, ups, _lows, x) in band_strategy()) {
        let x = NodeSamples::new(x).unwrap();
        let far = vec![-20.0 * p.horizon().sqrt() - 4.0; p.len() + 1];
        let cfg = SeriesConfig::default();
        let two = g(&band(&p, &far, &ups), &x, &cfg).unwrap();
        let up = PiecewiseLinearBoundary::continuous(p.clone(), Side::Upper, &ups).unwrap();
        let one = g(&PiecewiseLinearBand::upper_only(up).unwrap(), &x, &cfg).unwrap();
        prop_assert!((two - one).abs() <= 1e-9);
    }

    #[test]
    fn series_truncation_is_accurate_for_wide_steps(
        half in 0.5f64..2.0,
        dt in 0.05f64..1.0,
        x in -0.9f64..0.9,
    ) {
        // Only bands with δ²/Δt ≥ 1 are covered by the six-term claim.
        prop_assume!((2.0 * half).powi(2) / dt >= 1.0);
        let p = Partition::uniform(dt, 1).unwrap();
        let b = band(&p, &[-half, -half], &[half, half]);
        let x = NodeSamples::new(vec![x * half]).unwrap();
        let six = g(&b, &x, &SeriesConfig::fixed(6)).unwrap();
        let forty = g(&b, &x, &SeriesConfig::fixed(40)).unwrap();
        prop_assert!((six - forty).abs() < 1e-8);
    }

    #[test]
    fn chord_of_affine_is_exact(c in -2.0f64..2.0, m in -3.0f64..3.0, n in 1usize..20) {
        let gb = GeneralBoundary::new(Side::Upper, 1.5, move |t| c + m * t).unwrap();
        let p = uniform_partition(1.5, n).unwrap();
        let chord = chord_boundary(&gb, &p).unwrap();
        for k in 0..=200 {
            let t = 1.5 * k as f64 / 200.0;
            prop_assert!((chord.eval(t) - (c + m * t)).abs() <= 1e-12);
        }
    }

    #[test]
    fn envelopes_sandwich_boundary(
        amp in 0.0f64..1.0,
        freq in 0.5f64..8.0,
        curve in -1.0f64..1.0,
        n in 1usize..12,
        lower in any::<bool>(),
    ) {
        let side = if lower { Side::Lower } else { Side::Upper };
        let sign = if lower { -1.0 } else { 1.0 };
        let gb = GeneralBoundary::new(side, 1.0, move |t: f64| sign * (1.0 + amp * (freq * t).sin() + curve * t * t)).unwrap();
        let p = uniform_partition(1.0, n).unwrap();
        let m = 20;
        let (inner, outer) = envelopes(&gb, &p, m).unwrap();
        for i in 1..=n {
            let (t0, t1) = (p.nodes()[i - 1], p.nodes()[i]);
            for k in 0..=10 * m {
                let t = t0 + (t1 - t0) * k as f64 / (10 * m) as f64;
                let v = gb.eval(t).unwrap();
                prop_assert!(sign * (inner.eval(t) - v) <= 0.0, "i {i} k {k} t {t} inner {} v {v}", inner.eval(t));
                prop_assert!(sign * (outer.eval(t) - v) >= 0.0, "i {i} k {k} t {t} outer {} v {v}", outer.eval(t));
            }
        }
    }

    #[test]
    fn envelope_bracket_is_ordered_per_path(seed in any::<u64>(), amp in 0.0f64..0.8) {
        let lo = GeneralBoundary::new(Side::Lower, 1.0, move |t: f64| -1.0 + amp * (5.0 * t).sin()).unwrap();
        let up = GeneralBoundary::new(Side::Upper, 1.0, move |t: f64| 1.0 + amp * t * t).unwrap();
        let p = uniform_partition(1.0, 8).unwrap();
        let (inner, outer) = envelope_bands(&lo, &up, &p, 30).unwrap();
        let cfg = SeriesConfig::default();
        let (ki, ko) = (Kernel::new(&inner, cfg).unwrap(), Kernel::new(&outer, cfg).unwrap());
        let mut rng = bcp_core::mc::chunk_rng(seed, 0);
        for _ in 0..50 {
            let x = sample_nodes(&p, &mut rng);
            prop_assert!(ki.eval(x.as_slice()).value <= ko.eval(x.as_slice()).value);
        }
    }

    #[test]
    fn ou_reduction_preserves_order(
        kappa in 0.1f64..2.0,
        alpha in -1.0f64..1.0,
        sigma in 0.2f64..2.0,
        gap in 0.1f64..2.0,
    ) {
        let p = OuParams { kappa, alpha, sigma, x0: 0.0 };
        let a = GeneralBoundary::new(Side::Lower, 1.0, |t: f64| -1.0 + 0.3 * t).unwrap();
        let b = GeneralBoundary::new(Side::Upper, 1.0, move |t: f64| -1.0 + 0.3 * t + gap + 1.0 * (1.0 - t)).unwrap();
        let r = reduce_ou(&p, &a, &b, 1.0).unwrap();
        for k in 1..=50 {
            let s = r.horizon * k as f64 / 50.0;
            prop_assert!(r.lower.eval(s).unwrap() < r.upper.eval(s).unwrap());
        }
    }

    #[test]
    fn growth_reduction_preserves_order(
        alpha in 0.1f64..1.0,
        beta in 0.1f64..1.0,
        sigma in 0.2f64..1.0,
        ratio in 1.05f64..3.0,
    ) {
        let p = GrowthParams { alpha, beta, sigma, x0: 1.0 };
        let a = GeneralBoundary::new(Side::Lower, 1.0, |t: f64| 0.5 + 0.2 * t).unwrap();
        let b = GeneralBoundary::new(Side::Upper, 1.0, move |t: f64| (0.5 + 0.2 * t) * ratio + 0.6).unwrap();
        let r = reduce_growth(&p, &a, &b, 1.0).unwrap();
        for k in 1..=50 {
            let s = r.horizon * k as f64 / 50.0;
            prop_assert!(r.lower.eval(s).unwrap() < r.upper.eval(s).unwrap());
        }
    }
}

#[test]
fn estimates_are_reproducible_and_thread_independent() {
    let lo = GeneralBoundary::new(Side::Lower, 1.0, |t: f64| -1.0 - 0.3 * t).unwrap();
    let up = GeneralBoundary::new(Side::Upper, 1.0, |t: f64| (1.0 + t).sqrt()).unwrap();
    let p = uniform_partition(1.0, 32).unwrap();
    let cfg = McConfig { chunk_size: 777, ..McConfig::new(20_000, 31) };
    let base = estimate_bcp_bracketed(&lo, &up, &p, 20, &cfg).unwrap();
    for threads in [1, 2, 4] {
        let again = estimate_bcp_bracketed(&lo, &up, &p, 20, &McConfig { threads, ..cfg }).unwrap();
        assert_eq!(base, again);
    }
    let other = estimate_bcp_bracketed(&lo, &up, &p, 20, &McConfig { seed: 32, ..cfg }).unwrap();
    assert_ne!(base.mean, other.mean);
}

#[test]
fn repeated_seeds_are_unbiased_at_one_interval() {
    // Mean of independent estimates against the exact single-interval value.
    let p = Partition::uniform(1.0, 1).unwrap();
    let b = band(&p, &[-1.0, -1.0], &[1.0, 1.0]);
    let exact = common::two_barrier_series(-1.0, 1.0, 1.0);
    let runs = 40;
    let (mut sum, mut se) = (0.0, 0.0);
    for seed in 0..runs {
        let est = estimate_bcp(&b, &McConfig::new(20_000, 1000 + seed)).unwrap();
        sum += est.mean;
        se += est.std_error;
    }
    let mean = sum / runs as f64;
    let se = se / runs as f64;
    assert!((mean - exact).abs() <= 4.0 * se / (runs as f64).sqrt(), "mean {mean} exact {exact}");
}

#[test]
fn refinement_never_widens_envelope_gap() {
    let boundaries: Vec<GeneralBoundary> = vec![
        GeneralBoundary::new(Side::Upper, 1.0, |t: f64| (1.0 + t).sqrt()).unwrap(),
        GeneralBoundary::new(Side::Upper, 1.0, |t: f64| 1.0 + t * t).unwrap(),
    ];
    for gb in &boundaries {
        let mut prev = f64::INFINITY;
        for n in [2, 4, 8, 16, 32] {
            let p = uniform_partition(1.0, n).unwrap();
            let (inner, outer) = envelopes(gb, &p, 50).unwrap();
            let gap = (0..=2000)
                .map(|k| {
                    let t = k as f64 / 2000.0;
                    outer.eval(t) - inner.eval(t)
                })
                .fold(0.0, f64::max);
            assert!(gap <= prev + 1e-15, "n = {n}: gap {gap} > {prev}");
            prev = gap;
        }
    }
}

#[test]
fn gbm_degenerate_case_and_time_maps() {
    let p = GbmParams { sigma: 1.0, rate: Rate::Constant(0.0), x0: 1.0 };
    let a = GeneralBoundary::constant(Side::Lower, 1.0, 0.0).unwrap();
    let b = GeneralBoundary::new(Side::Upper, 1.0, |t: f64| (0.4 * t + 0.5).exp()).unwrap();
    let r = reduce_gbm(&p, &a, &b, 1.0).unwrap();
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        assert!((r.upper.eval(t).unwrap() - (0.9 * t + 0.5)).abs() < 1e-14);
    }

    let td = OuTdParams {
        kappa: Arc::new(|t: f64| 0.5 + t),
        alpha: Arc::new(|t: f64| t.cos()),
        sigma: Arc::new(|t: f64| 1.0 + 0.5 * t),
        x0: 0.2,
    };
    let a = GeneralBoundary::infinite(Side::Lower, 1.0).unwrap();
    let b = GeneralBoundary::constant(Side::Upper, 1.0, 1.5).unwrap();
    let r = reduce_ou_td(&td, &a, &b, 1.0).unwrap();
    assert_eq!(r.time_at(0.0), 0.0);
    assert!((r.time_at(r.horizon) - 1.0).abs() < 1e-11);
    let mut last = -1.0;
    for k in 0..100 {
        let t = k as f64 / 99.0;
        let s = r.clock_at(t);
        assert!(s > last);
        last = s;
        assert!((r.time_at(s) - t).abs() < 1e-11);
    }
}
