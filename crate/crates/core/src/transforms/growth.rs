use std::sync::Arc;

use super::{
    check_ordering, map_boundary, positive_boundary_kind, BoundaryKind, CoefFn, DiffusionSpec,
    Family, GrowthParams, Provenance, ReducedProblem,
};
use crate::boundary::GeneralBoundary;
use crate::error::Result;

/// Growth-process reduction via `f(t, x) = e^{βt}(log x + k)/σ`, `k = (σ² - 2α)/2β`.
///
/// `c(s) = √(1 + 2βs)(log a(t(s)) + k)/σ - (log x0 + k)/σ`, likewise `d`, with
/// `t(s) = log(1 + 2βs)/2β` and `S = (e^{2βT} - 1)/2β`. A lower boundary that is
/// identically zero becomes `c ≡ -∞`.
pub fn reduce_growth(
    p: &GrowthParams,
    a: &GeneralBoundary,
    b: &GeneralBoundary,
    horizon: f64,
) -> Result<ReducedProblem> {
    DiffusionSpec::Growth(*p).validate()?;
    let GrowthParams {
        alpha,
        beta,
        sigma,
        x0,
    } = *p;
    let lower_kind = positive_boundary_kind(a, horizon)?;
    positive_boundary_kind(b, horizon)?;
    let a_eff = match lower_kind {
        BoundaryKind::Zero => GeneralBoundary::infinite(a.side(), horizon)?,
        _ => a.clone(),
    };
    check_ordering(&a_eff, b, x0, horizon)?;
    let k = (sigma * sigma - 2.0 * alpha) / (2.0 * beta);
    let s_horizon = (2.0 * beta * horizon).exp_m1() / (2.0 * beta);
    let time_map: CoefFn = Arc::new(move |s: f64| (2.0 * beta * s).ln_1p() / (2.0 * beta));
    let clock: CoefFn = Arc::new(move |t: f64| (2.0 * beta * t).exp_m1() / (2.0 * beta));
    let start = (x0.ln() + k) / sigma;
    let map = move |t: f64, v: f64| (beta * t).exp() * (v.ln() + k) / sigma - start;
    let c = map_boundary(&a_eff, s_horizon, time_map.clone(), map)?;
    let d = map_boundary(b, s_horizon, time_map.clone(), map)?;
    ReducedProblem::new(
        c,
        d,
        s_horizon,
        time_map,
        clock,
        Some(Provenance {
            family: Family::Growth,
            x0,
            lower: a.clone(),
            upper: b.clone(),
            horizon,
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::Side;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_root_case() {
        let p = GrowthParams { alpha: 0.5, beta: 0.5, sigma: 1.0, x0: 1.0 };
        let a = GeneralBoundary::constant(Side::Lower, 1.0, 0.0).unwrap();
        let b = GeneralBoundary::constant(Side::Upper, 1.0, 1f64.exp()).unwrap();
        let r = reduce_growth(&p, &a, &b, 1.0).unwrap();
        assert_abs_diff_eq!(r.horizon, std::f64::consts::E - 1.0, epsilon = 1e-15);
        assert!(!r.lower.is_finite());
        for k in 0..100 {
            let s = r.horizon * k as f64 / 99.0;
            assert_abs_diff_eq!(r.upper.eval(s).unwrap(), (1.0 + s).sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn exponential_barrier_gives_affine_boundary() {
        let (alpha, beta, sigma, x0, h) = (0.3, 0.7, 0.5, 1.2, 1.1);
        let p = GrowthParams { alpha, beta, sigma, x0 };
        let k = (sigma * sigma - 2.0 * alpha) / (2.0 * beta);
        let a = GeneralBoundary::constant(Side::Lower, 1.0, 0.0).unwrap();
        let b = GeneralBoundary::new(Side::Upper, 1.0, move |t| (h * (beta * t).exp() - k).exp()).unwrap();
        let r = reduce_growth(&p, &a, &b, 1.0).unwrap();
        for j in 0..=20 {
            let s = r.horizon * j as f64 / 20.0;
            let expected = 2.0 * h * beta * s / sigma + (h - x0.ln() - k) / sigma;
            assert_abs_diff_eq!(r.upper.eval(s).unwrap(), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn positive_lower_boundary_is_kept() {
        let p = GrowthParams { alpha: 0.5, beta: 0.5, sigma: 1.0, x0: 1.0 };
        let a = GeneralBoundary::constant(Side::Lower, 1.0, 0.5).unwrap();
        let b = GeneralBoundary::constant(Side::Upper, 1.0, 2.0).unwrap();
        let r = reduce_growth(&p, &a, &b, 1.0).unwrap();
        assert_abs_diff_eq!(r.lower.eval(0.0).unwrap(), 0.5f64.ln(), epsilon = 1e-15);
        assert!(r.lower.eval(1.0).unwrap() < r.upper.eval(1.0).unwrap());
    }

    #[test]
    fn rejects_non_positive_boundaries() {
        let p = GrowthParams { alpha: 0.5, beta: 0.5, sigma: 1.0, x0: 1.0 };
        let a = GeneralBoundary::new(Side::Lower, 1.0, |t| 0.5 - t).unwrap();
        let b = GeneralBoundary::constant(Side::Upper, 1.0, 2.0).unwrap();
        assert!(reduce_growth(&p, &a, &b, 1.0).is_err());
        let bad = GrowthParams { x0: -1.0, ..p };
        let a = GeneralBoundary::constant(Side::Lower, 1.0, 0.0).unwrap();
        assert!(reduce_growth(&bad, &a, &b, 1.0).is_err());
    }
}
