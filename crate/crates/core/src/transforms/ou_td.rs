use std::sync::Arc;

use super::{
    check_ordering, map_boundary, CoefFn, CumulativeIntegral, Family, OuTdParams, Provenance,
    ReducedProblem,
};
use crate::boundary::GeneralBoundary;
use crate::error::{BcpError, Result};
use crate::quad::DEFAULT_ABS_TOL;

const COEF_CHECK_POINTS: usize = 1000;
const INVERSE_REL_TOL: f64 = 1e-12;

/// Deterministic clock of a time-dependent Ornstein-Uhlenbeck process.
///
/// Holds `K(t) = ∫₀ᵗ κ`, the clock `s(t) = ∫₀ᵗ e^{2K(u)} σ²(u) du` and the
/// centring term `γ(t) = e^{-K(t)} (α(0) + ∫₀ᵗ κ(u) e^{K(u)} α(u) du)`, which
/// solves `γ' = κ(α - γ)` so that `e^{K(t)} (X_t - γ(t))` is a martingale.
pub struct OuTdClock {
    kappa_int: Arc<CumulativeIntegral>,
    clock: CumulativeIntegral,
    centre_int: CumulativeIntegral,
    alpha0: f64,
}

impl OuTdClock {
    pub fn new(p: &OuTdParams, horizon: f64) -> Result<Self> {
        let cells = CumulativeIntegral::DEFAULT_CELLS;
        let kappa = p.kappa.clone();
        let kappa_int = Arc::new(CumulativeIntegral::new(
            Arc::new(move |u| kappa(u)),
            horizon,
            cells,
            1e-3 * DEFAULT_ABS_TOL,
        )?);
        let (k, sigma) = (kappa_int.clone(), p.sigma.clone());
        let clock = CumulativeIntegral::new(
            Arc::new(move |u| {
                let ku = k.value(u).unwrap_or(f64::NAN);
                let s = sigma(u);
                (2.0 * ku).exp() * s * s
            }),
            horizon,
            cells,
            DEFAULT_ABS_TOL,
        )?;
        let (k, kappa, alpha) = (kappa_int.clone(), p.kappa.clone(), p.alpha.clone());
        let centre_int = CumulativeIntegral::new(
            Arc::new(move |u| {
                let ku = k.value(u).unwrap_or(f64::NAN);
                kappa(u) * ku.exp() * alpha(u)
            }),
            horizon,
            cells,
            DEFAULT_ABS_TOL,
        )?;
        Ok(OuTdClock {
            kappa_int,
            clock,
            centre_int,
            alpha0: (p.alpha)(0.0),
        })
    }

    /// `K(t) = ∫₀ᵗ κ`.
    pub fn kappa_integral(&self, t: f64) -> Result<f64> {
        self.kappa_int.value(t)
    }

    /// `s(t)`.
    pub fn clock(&self, t: f64) -> Result<f64> {
        self.clock.value(t)
    }

    /// `t(s)`, the inverse of [`Self::clock`].
    pub fn time(&self, s: f64) -> Result<f64> {
        self.clock.invert(s, INVERSE_REL_TOL)
    }

    /// `γ(t)`.
    pub fn centre(&self, t: f64) -> Result<f64> {
        let k = self.kappa_int.value(t)?;
        Ok((-k).exp() * (self.alpha0 + self.centre_int.value(t)?))
    }

    pub fn horizon(&self) -> f64 {
        self.clock.total()
    }
}

/// Reduction for `dX = κ(t)(α(t) - X) dt + σ(t) dW`.
///
/// `c(s) = γ(0) - x0 + (a(t(s)) - γ(t(s))) exp(K(t(s)))`, likewise `d`.
pub fn reduce_ou_td(
    p: &OuTdParams,
    a: &GeneralBoundary,
    b: &GeneralBoundary,
    horizon: f64,
) -> Result<ReducedProblem> {
    if !p.x0.is_finite() {
        return Err(BcpError::invalid("x0 must be finite"));
    }
    for k in 0..=COEF_CHECK_POINTS {
        let t = horizon * k as f64 / COEF_CHECK_POINTS as f64;
        let (kt, st, at) = ((p.kappa)(t), (p.sigma)(t), (p.alpha)(t));
        if !(kt > 0.0 && kt.is_finite()) {
            return Err(BcpError::invalid(format!("kappa(t) must be positive, got {kt} at t = {t}")));
        }
        if !(st > 0.0 && st.is_finite()) {
            return Err(BcpError::invalid(format!("sigma(t) must be positive, got {st} at t = {t}")));
        }
        if !at.is_finite() {
            return Err(BcpError::invalid(format!("alpha(t) is not finite at t = {t}")));
        }
    }
    check_ordering(a, b, p.x0, horizon)?;
    let clock = Arc::new(OuTdClock::new(p, horizon)?);
    let s_horizon = clock.horizon();
    let time_map: CoefFn = {
        let c = clock.clone();
        Arc::new(move |s| c.time(s).unwrap_or(f64::NAN))
    };
    let forward: CoefFn = {
        let c = clock.clone();
        Arc::new(move |t| c.clock(t).unwrap_or(f64::NAN))
    };
    let x0 = p.x0;
    let centre0 = clock.centre(0.0)?;
    let map = {
        let c = clock.clone();
        move |t: f64, v: f64| match (c.centre(t), c.kappa_integral(t)) {
            (Ok(g), Ok(k)) => centre0 - x0 + (v - g) * k.exp(),
            _ => f64::NAN,
        }
    };
    let lower = map_boundary(a, s_horizon, time_map.clone(), map.clone())?;
    let upper = map_boundary(b, s_horizon, time_map.clone(), map)?;
    ReducedProblem::new(
        lower,
        upper,
        s_horizon,
        time_map,
        forward,
        Some(Provenance {
            family: Family::OuTimeVarying,
            x0,
            lower: a.clone(),
            upper: b.clone(),
            horizon,
        }),
    )
}
