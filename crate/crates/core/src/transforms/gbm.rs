use std::sync::Arc;

use super::{
    check_ordering, map_boundary, positive_boundary_kind, BoundaryKind, CoefFn,
    CumulativeIntegral, DiffusionSpec, Family, GbmParams, Provenance, Rate, ReducedProblem,
};
use crate::boundary::GeneralBoundary;
use crate::error::{BcpError, Result};
use crate::quad::DEFAULT_ABS_TOL;

const RATE_CHECK_POINTS: usize = 1000;

/// Geometric Brownian motion reduction; the clock is the identity.
///
/// `c(t) = (log(a(t)/x0) + σ²t/2 - R(t))/σ`, likewise `d`, with `R(t) = ∫₀ᵗ r`.
pub fn reduce_gbm(
    p: &GbmParams,
    a: &GeneralBoundary,
    b: &GeneralBoundary,
    horizon: f64,
) -> Result<ReducedProblem> {
    DiffusionSpec::Gbm(p.clone()).validate()?;
    let (sigma, x0) = (p.sigma, p.x0);
    let cumulative_rate: CoefFn = match &p.rate {
        Rate::Constant(r) => {
            let r = *r;
            Arc::new(move |t| r * t)
        }
        Rate::Function(f) => {
            for k in 0..=RATE_CHECK_POINTS {
                let t = horizon * k as f64 / RATE_CHECK_POINTS as f64;
                let r = f(t);
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(BcpError::invalid(format!(
                        "rate must be non-negative and finite, got {r} at t = {t}"
                    )));
                }
            }
            let table = CumulativeIntegral::new(
                f.clone(),
                horizon,
                CumulativeIntegral::DEFAULT_CELLS,
                DEFAULT_ABS_TOL,
            )?;
            Arc::new(move |t| table.value(t).unwrap_or(f64::NAN))
        }
    };
    let lower_kind = positive_boundary_kind(a, horizon)?;
    positive_boundary_kind(b, horizon)?;
    let a_eff = match lower_kind {
        BoundaryKind::Zero => GeneralBoundary::infinite(a.side(), horizon)?,
        _ => a.clone(),
    };
    check_ordering(&a_eff, b, x0, horizon)?;
    let half_var = 0.5 * sigma * sigma;
    let map = move |t: f64, v: f64| ((v / x0).ln() + half_var * t - cumulative_rate(t)) / sigma;
    let id: CoefFn = Arc::new(|t| t);
    let c = map_boundary(&a_eff, horizon, id.clone(), map.clone())?;
    let d = map_boundary(b, horizon, id.clone(), map)?;
    ReducedProblem::new(
        c,
        d,
        horizon,
        id.clone(),
        id,
        Some(Provenance {
            family: Family::Gbm,
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

    fn zero_lower() -> GeneralBoundary {
        GeneralBoundary::constant(Side::Lower, 1.0, 0.0).unwrap()
    }

    #[test]
    fn time_varying_rate_example() {
        let p = GbmParams {
            sigma: 0.1,
            rate: Rate::Function(Arc::new(|t: f64| 0.1 + 0.05 * (-t).exp())),
            x0: 10.0,
        };
        let b = GeneralBoundary::constant(Side::Upper, 1.0, 12.0).unwrap();
        let r = reduce_gbm(&p, &zero_lower(), &b, 1.0).unwrap();
        assert_eq!(r.horizon, 1.0);
        for k in 0..=50 {
            let t = k as f64 / 50.0;
            let expected = 10.0 * 1.2f64.ln() - 0.5 - 0.95 * t + 0.5 * (-t).exp();
            assert_abs_diff_eq!(r.upper.eval(t).unwrap(), expected, epsilon = 1e-9);
        }
        assert_abs_diff_eq!(r.upper.eval(0.0).unwrap(), 1.8232, epsilon = 1e-4);
    }

    #[test]
    fn constant_rate_constant_barrier() {
        let (sigma, rate, x0, h) = (0.3, 0.05, 1.0, 1.4);
        let p = GbmParams { sigma, rate: Rate::Constant(rate), x0 };
        let b = GeneralBoundary::constant(Side::Upper, 1.0, h).unwrap();
        let r = reduce_gbm(&p, &zero_lower(), &b, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let expected = (0.5 * sigma * sigma - rate) * t / sigma + (h / x0).ln() / sigma;
            assert_abs_diff_eq!(r.upper.eval(t).unwrap(), expected, epsilon = 1e-14);
        }
    }

    #[test]
    fn exponential_drift_barrier_is_affine() {
        let (sigma, pp, q, x0) = (0.4, -0.1, 0.3, 1.0);
        let rate: CoefFn = Arc::new(|t: f64| 0.02 + 0.01 * t);
        let big_r = |t: f64| 0.02 * t + 0.005 * t * t;
        let p = GbmParams { sigma, rate: Rate::Function(rate), x0 };
        let b = GeneralBoundary::new(Side::Upper, 1.0, move |t| (pp * t + q + big_r(t)).exp()).unwrap();
        let r = reduce_gbm(&p, &zero_lower(), &b, 1.0).unwrap();
        for k in 0..=20 {
            let t = k as f64 / 20.0;
            let expected = ((pp + 0.5 * sigma * sigma) * t + q - x0.ln()) / sigma;
            assert_abs_diff_eq!(r.upper.eval(t).unwrap(), expected, epsilon = 1e-10);
        }
    }

    #[test]
    fn zero_rate_unit_volatility() {
        let p = GbmParams { sigma: 1.0, rate: Rate::Constant(0.0), x0: 1.0 };
        let b = GeneralBoundary::new(Side::Upper, 1.0, |t| 2.0 + t * t).unwrap();
        let r = reduce_gbm(&p, &zero_lower(), &b, 1.0).unwrap();
        for k in 0..=10 {
            let t = k as f64 / 10.0;
            assert_abs_diff_eq!(r.upper.eval(t).unwrap(), (2.0 + t * t).ln() + t / 2.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn rejects_negative_rate_and_bad_start() {
        let b = GeneralBoundary::constant(Side::Upper, 1.0, 2.0).unwrap();
        let p = GbmParams { sigma: 1.0, rate: Rate::Function(Arc::new(|t| 0.5 - t)), x0: 1.0 };
        assert!(reduce_gbm(&p, &zero_lower(), &b, 1.0).is_err());
        let p = GbmParams { sigma: 1.0, rate: Rate::Constant(0.1), x0: 3.0 };
        assert!(reduce_gbm(&p, &zero_lower(), &b, 1.0).is_err());
    }
}
