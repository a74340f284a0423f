//! Closed-form crossing probabilities for boundaries that reduce to a linear
//! or constant Brownian boundary. All cases are one-sided (`a ≡ -∞` or `a ≡ 0`).

use std::sync::Arc;

use super::{
    reduce_gbm, reduce_growth, reduce_ou, GbmParams, GrowthParams, OuParams, Rate, ReducedProblem,
};
use crate::boundary::{GeneralBoundary, Side};
use crate::error::{BcpError, Result};
use crate::kernel::bcp_linear_one_sided;
use crate::normal::{ln_phi, phi};

pub const CATALOG_IDS: [&str; 7] = [
    "ou_exp_up",
    "ou_exp_down",
    "growth_exp_up",
    "growth_exp_down",
    "gbm_exp_drift",
    "gbm_const_rate_const_barrier",
    "bm_linear",
];

/// A catalog entry with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogCase {
    /// OU with `b(t) = α + h e^{κt}`.
    OuExpUp { kappa: f64, alpha: f64, sigma: f64, x0: f64, h: f64, horizon: f64 },
    /// OU with `b(t) = α + h e^{-κt}`.
    OuExpDown { kappa: f64, alpha: f64, sigma: f64, x0: f64, h: f64, horizon: f64 },
    /// Growth with `a ≡ 0`, `b(t) = exp(h e^{βt} - (σ² - 2α)/2β)`.
    GrowthExpUp { alpha: f64, beta: f64, sigma: f64, x0: f64, h: f64, horizon: f64 },
    /// Growth with `a ≡ 0`, `b(t) = exp(h e^{-βt} - (σ² - 2α)/2β)`.
    GrowthExpDown { alpha: f64, beta: f64, sigma: f64, x0: f64, h: f64, horizon: f64 },
    /// GBM with constant rate `r`, `a ≡ 0`, `b(t) = exp(pt + q + rt)`.
    GbmExpDrift { sigma: f64, rate: f64, x0: f64, p: f64, q: f64, horizon: f64 },
    /// GBM with constant rate `r`, `a ≡ 0`, `b ≡ h`.
    GbmConstRateConstBarrier { sigma: f64, rate: f64, x0: f64, h: f64, horizon: f64 },
    /// Brownian motion below `intercept + slope·t`.
    BmLinear { intercept: f64, slope: f64, horizon: f64 },
}

struct Params<'a> {
    id: &'a str,
    values: &'a [(&'a str, f64)],
}

impl Params<'_> {
    fn check_names(&self, known: &[&str]) -> Result<()> {
        for (name, _) in self.values {
            if !known.contains(name) {
                return Err(BcpError::invalid(format!(
                    "unknown parameter '{name}' for {}; expected {known:?}",
                    self.id
                )));
            }
        }
        Ok(())
    }

    fn get_or(&self, name: &str, default: Option<f64>) -> Result<f64> {
        let v = self
            .values
            .iter()
            .rev()
            .find(|(n, _)| *n == name)
            .map(|&(_, v)| v)
            .or(default)
            .ok_or_else(|| BcpError::invalid(format!("{} needs parameter '{name}'", self.id)))?;
        if !v.is_finite() {
            return Err(BcpError::invalid(format!("parameter '{name}' must be finite, got {v}")));
        }
        Ok(v)
    }

    fn get(&self, name: &str) -> Result<f64> {
        self.get_or(name, None)
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 {
        Ok(())
    } else {
        Err(BcpError::invalid(format!("{name} must be positive, got {v}")))
    }
}

/// `Φ(x) - e^{l} Φ(y)` with the product taken in log space.
fn phi_minus_scaled(x: f64, l: f64, y: f64) -> f64 {
    (phi(x) - (l + ln_phi(y)).exp()).clamp(0.0, 1.0)
}

/// `2Φ(x) - 1`.
fn two_phi_minus_one(x: f64) -> f64 {
    (1.0 - 2.0 * phi(-x)).clamp(0.0, 1.0)
}

impl CatalogCase {
    /// Builds a case from its id and named parameters. The horizon is `T`.
    pub fn from_params(id: &str, values: &[(&str, f64)]) -> Result<Self> {
        let p = Params { id, values };
        let case = match id {
            "ou_exp_up" | "ou_exp_down" => {
                p.check_names(&["kappa", "alpha", "sigma", "x0", "h", "T"])?;
                let (kappa, alpha, sigma, x0, h, horizon) =
                    (p.get("kappa")?, p.get("alpha")?, p.get("sigma")?, p.get("x0")?, p.get("h")?, p.get("T")?);
                if id == "ou_exp_up" {
                    CatalogCase::OuExpUp { kappa, alpha, sigma, x0, h, horizon }
                } else {
                    CatalogCase::OuExpDown { kappa, alpha, sigma, x0, h, horizon }
                }
            }
            "growth_exp_up" | "growth_exp_down" => {
                p.check_names(&["alpha", "beta", "sigma", "x0", "h", "T"])?;
                let (alpha, beta, sigma, x0, h, horizon) =
                    (p.get("alpha")?, p.get("beta")?, p.get("sigma")?, p.get("x0")?, p.get("h")?, p.get("T")?);
                if id == "growth_exp_up" {
                    CatalogCase::GrowthExpUp { alpha, beta, sigma, x0, h, horizon }
                } else {
                    CatalogCase::GrowthExpDown { alpha, beta, sigma, x0, h, horizon }
                }
            }
            "gbm_exp_drift" => {
                p.check_names(&["sigma", "r", "x0", "p", "q", "T"])?;
                CatalogCase::GbmExpDrift {
                    sigma: p.get("sigma")?,
                    rate: p.get_or("r", Some(0.0))?,
                    x0: p.get("x0")?,
                    p: p.get("p")?,
                    q: p.get("q")?,
                    horizon: p.get("T")?,
                }
            }
            "gbm_const_rate_const_barrier" => {
                p.check_names(&["sigma", "r", "x0", "h", "T"])?;
                CatalogCase::GbmConstRateConstBarrier {
                    sigma: p.get("sigma")?,
                    rate: p.get("r")?,
                    x0: p.get("x0")?,
                    h: p.get("h")?,
                    horizon: p.get("T")?,
                }
            }
            "bm_linear" => {
                p.check_names(&["intercept", "slope", "T"])?;
                CatalogCase::BmLinear {
                    intercept: p.get("intercept")?,
                    slope: p.get("slope")?,
                    horizon: p.get("T")?,
                }
            }
            other => {
                return Err(BcpError::invalid(format!(
                    "unknown catalog id '{other}'; expected one of {CATALOG_IDS:?}"
                )))
            }
        };
        case.validate()?;
        Ok(case)
    }

    pub fn id(&self) -> &'static str {
        match self {
            CatalogCase::OuExpUp { .. } => "ou_exp_up",
            CatalogCase::OuExpDown { .. } => "ou_exp_down",
            CatalogCase::GrowthExpUp { .. } => "growth_exp_up",
            CatalogCase::GrowthExpDown { .. } => "growth_exp_down",
            CatalogCase::GbmExpDrift { .. } => "gbm_exp_drift",
            CatalogCase::GbmConstRateConstBarrier { .. } => "gbm_const_rate_const_barrier",
            CatalogCase::BmLinear { .. } => "bm_linear",
        }
    }

    pub fn horizon(&self) -> f64 {
        match *self {
            CatalogCase::OuExpUp { horizon, .. }
            | CatalogCase::OuExpDown { horizon, .. }
            | CatalogCase::GrowthExpUp { horizon, .. }
            | CatalogCase::GrowthExpDown { horizon, .. }
            | CatalogCase::GbmExpDrift { horizon, .. }
            | CatalogCase::GbmConstRateConstBarrier { horizon, .. }
            | CatalogCase::BmLinear { horizon, .. } => horizon,
        }
    }

    fn validate(&self) -> Result<()> {
        positive("T", self.horizon())?;
        match *self {
            CatalogCase::OuExpUp { kappa, sigma, .. } | CatalogCase::OuExpDown { kappa, sigma, .. } => {
                positive("kappa", kappa)?;
                positive("sigma", sigma)
            }
            CatalogCase::GrowthExpUp { alpha, beta, sigma, x0, .. }
            | CatalogCase::GrowthExpDown { alpha, beta, sigma, x0, .. } => {
                positive("alpha", alpha)?;
                positive("beta", beta)?;
                positive("sigma", sigma)?;
                positive("x0", x0)
            }
            CatalogCase::GbmExpDrift { sigma, rate, x0, .. } => {
                positive("sigma", sigma)?;
                positive("x0", x0)?;
                if rate < 0.0 {
                    return Err(BcpError::invalid(format!("r must be non-negative, got {rate}")));
                }
                Ok(())
            }
            CatalogCase::GbmConstRateConstBarrier { sigma, rate, x0, h, .. } => {
                positive("sigma", sigma)?;
                positive("x0", x0)?;
                positive("h", h)?;
                if rate < 0.0 {
                    return Err(BcpError::invalid(format!("r must be non-negative, got {rate}")));
                }
                Ok(())
            }
            CatalogCase::BmLinear { .. } => Ok(()),
        }
    }

    /// Value of the reduced upper boundary at time zero.
    pub fn reduced_intercept(&self) -> f64 {
        match *self {
            CatalogCase::OuExpUp { alpha, x0, h, .. } | CatalogCase::OuExpDown { alpha, x0, h, .. } => {
                alpha - x0 + h
            }
            CatalogCase::GrowthExpUp { alpha, beta, sigma, x0, h, .. }
            | CatalogCase::GrowthExpDown { alpha, beta, sigma, x0, h, .. } => {
                (h - x0.ln() - (sigma * sigma - 2.0 * alpha) / (2.0 * beta)) / sigma
            }
            CatalogCase::GbmExpDrift { sigma, x0, q, .. } => (q - x0.ln()) / sigma,
            CatalogCase::GbmConstRateConstBarrier { sigma, x0, h, .. } => (h / x0).ln() / sigma,
            CatalogCase::BmLinear { intercept, .. } => intercept,
        }
    }

    /// Exact probability of staying below the barrier on `[0, T]`.
    pub fn probability(&self) -> Result<f64> {
        let d0 = self.reduced_intercept();
        if d0 == 0.0 {
            return Ok(0.0);
        }
        if d0 < 0.0 {
            return Err(BcpError::StartOutsideBand {
                x0: 0.0,
                lower: f64::NEG_INFINITY,
                upper: d0,
            });
        }
        let p = match *self {
            CatalogCase::OuExpUp { kappa, alpha, sigma, x0, h, horizon } => {
                let e = (2.0 * kappa * horizon).exp();
                let sd = sigma * ((2.0 * kappa * horizon).exp_m1() / (2.0 * kappa)).sqrt();
                phi_minus_scaled(
                    (h * e + alpha - x0) / sd,
                    -4.0 * h * kappa * (h + alpha - x0) / (sigma * sigma),
                    (h * e - alpha + x0 - 2.0 * h) / sd,
                )
            }
            CatalogCase::OuExpDown { kappa, alpha, sigma, x0, h, horizon } => {
                let sd = sigma * ((2.0 * kappa * horizon).exp_m1() / (2.0 * kappa)).sqrt();
                two_phi_minus_one((alpha - x0 + h) / sd)
            }
            CatalogCase::GrowthExpUp { alpha, beta, sigma, x0, h, horizon } => {
                let e = (2.0 * beta * horizon).exp();
                let s2 = sigma * sigma;
                let den = sigma * (2.0 * beta * (2.0 * beta * horizon).exp_m1()).sqrt();
                phi_minus_scaled(
                    (2.0 * beta * (h * e - x0.ln()) - s2 + 2.0 * alpha) / den,
                    (4.0 * h * beta * (x0.ln() - h) + 2.0 * h * (s2 - 2.0 * alpha)) / s2,
                    (2.0 * beta * (h * e - 2.0 * h + x0.ln()) + s2 - 2.0 * alpha) / den,
                )
            }
            CatalogCase::GrowthExpDown { alpha, beta, sigma, x0, h, horizon } => {
                let den = sigma * (2.0 * beta * (2.0 * beta * horizon).exp_m1()).sqrt();
                two_phi_minus_one((2.0 * beta * (h - x0.ln()) - sigma * sigma + 2.0 * alpha) / den)
            }
            CatalogCase::GbmExpDrift { sigma, x0, p, q, horizon, .. } => {
                let s2 = sigma * sigma;
                let den = sigma * horizon.sqrt();
                let drift = (p + s2 / 2.0) * horizon;
                phi_minus_scaled(
                    (drift + q - x0.ln()) / den,
                    (2.0 * p + s2) * (x0.ln() - q) / s2,
                    (drift - q + x0.ln()) / den,
                )
            }
            CatalogCase::GbmConstRateConstBarrier { sigma, rate, x0, h, horizon } => {
                let s2 = sigma * sigma;
                let den = sigma * horizon.sqrt();
                let drift = (s2 / 2.0 - rate) * horizon;
                let lh = (h / x0).ln();
                phi_minus_scaled(
                    (drift + lh) / den,
                    (2.0 * rate - s2) * lh / s2,
                    (drift - lh) / den,
                )
            }
            CatalogCase::BmLinear { intercept, slope, horizon } => {
                bcp_linear_one_sided(intercept, slope, horizon)?
            }
        };
        Ok(p)
    }

    /// The equivalent Brownian problem, built by reducing the original process.
    pub fn reduced_problem(&self) -> Result<ReducedProblem> {
        let horizon = self.horizon();
        let upper = |f: Box<dyn Fn(f64) -> f64 + Send + Sync>| {
            GeneralBoundary::from_fn(Side::Upper, horizon, Arc::from(f))
        };
        match *self {
            CatalogCase::OuExpUp { kappa, alpha, sigma, x0, h, .. }
            | CatalogCase::OuExpDown { kappa, alpha, sigma, x0, h, .. } => {
                let sign = if matches!(self, CatalogCase::OuExpUp { .. }) { 1.0 } else { -1.0 };
                let b = upper(Box::new(move |t| alpha + h * (sign * kappa * t).exp()))?;
                let a = GeneralBoundary::infinite(Side::Lower, horizon)?;
                reduce_ou(&OuParams { kappa, alpha, sigma, x0 }, &a, &b, horizon)
            }
            CatalogCase::GrowthExpUp { alpha, beta, sigma, x0, h, .. }
            | CatalogCase::GrowthExpDown { alpha, beta, sigma, x0, h, .. } => {
                let sign = if matches!(self, CatalogCase::GrowthExpUp { .. }) { 1.0 } else { -1.0 };
                let k = (sigma * sigma - 2.0 * alpha) / (2.0 * beta);
                let b = upper(Box::new(move |t| (h * (sign * beta * t).exp() - k).exp()))?;
                let a = GeneralBoundary::constant(Side::Lower, horizon, 0.0)?;
                reduce_growth(&GrowthParams { alpha, beta, sigma, x0 }, &a, &b, horizon)
            }
            CatalogCase::GbmExpDrift { sigma, rate, x0, p, q, .. } => {
                let b = upper(Box::new(move |t| (p * t + q + rate * t).exp()))?;
                let a = GeneralBoundary::constant(Side::Lower, horizon, 0.0)?;
                let spec = GbmParams { sigma, rate: Rate::Constant(rate), x0 };
                reduce_gbm(&spec, &a, &b, horizon)
            }
            CatalogCase::GbmConstRateConstBarrier { sigma, rate, x0, h, .. } => {
                let b = GeneralBoundary::constant(Side::Upper, horizon, h)?;
                let a = GeneralBoundary::constant(Side::Lower, horizon, 0.0)?;
                let spec = GbmParams { sigma, rate: Rate::Constant(rate), x0 };
                reduce_gbm(&spec, &a, &b, horizon)
            }
            CatalogCase::BmLinear { intercept, slope, .. } => {
                let b = upper(Box::new(move |t| intercept + slope * t))?;
                ReducedProblem::brownian(GeneralBoundary::infinite(Side::Lower, horizon)?, b)
            }
        }
    }
}

/// Exact crossing probability for a catalog id with named parameters.
pub fn closed_form_bcp(id: &str, params: &[(&str, f64)]) -> Result<f64> {
    CatalogCase::from_params(id, params)?.probability()
}
