//! Reductions of diffusion crossing problems to Brownian motion.
//!
//! Each supported family admits a transform `Y_t = f(t, X_t)` with
//! `dY_t = σ̃(t) dW_t` and `σ̃ > 0`. With the clock `s(t) = ∫₀ᵗ σ̃²` and its
//! inverse `t(s)`, the process stays inside `(a, b)` on `[0, T]` exactly when a
//! standard Brownian motion stays inside `(c, d)` on `[0, S]`, where
//! `c(s) = f(t(s), a(t(s))) - f(0, x0)`, `d` likewise and `S = s(T)`.
//!
//! Ornstein-Uhlenbeck processes (constant or time-dependent coefficients) form
//! the L-class (`σ` free of `x`, drift affine in `x`); growth processes and
//! geometric Brownian motion form the G-class (`σ ∝ x`, drift in `x` and
//! `x log x`).

mod catalog;
mod cumulative;
mod gbm;
mod growth;
mod ou;
mod ou_td;
mod reducibility;

use std::fmt;
use std::sync::Arc;

use crate::boundary::{GeneralBoundary, Partition, Side};
use crate::error::{BcpError, Result};
use crate::mc::{estimate_bcp_bracketed, BcpEstimate, McConfig};

pub use catalog::{closed_form_bcp, CatalogCase, CATALOG_IDS};
pub use cumulative::CumulativeIntegral;
pub use gbm::reduce_gbm;
pub use growth::reduce_growth;
pub use ou::reduce_ou;
pub use ou_td::{reduce_ou_td, OuTdClock};
pub use reducibility::{check_reducibility, ReducibilityGrid, ReducibilityReport};

/// Time-dependent coefficient handle; must be safe for concurrent evaluation.
pub type CoefFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ou,
    OuTimeVarying,
    Growth,
    Gbm,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Ou => "ou",
            Family::OuTimeVarying => "ou-td",
            Family::Growth => "growth",
            Family::Gbm => "gbm",
        }
    }
}

/// Which reducible class a family belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReducibleClass {
    /// `σ(t, x) = σ̃(t)`, `μ(t, x) = α(t) x + β(t)`.
    L,
    /// `σ(t, x) = σ̃(t) x`, `μ(t, x) = α(t) x + β(t) x log x`.
    G,
}

/// `dX = κ(α - X) dt + σ dW`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OuParams {
    pub kappa: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub x0: f64,
}

/// `dX = κ(t)(α(t) - X) dt + σ(t) dW`.
#[derive(Clone)]
pub struct OuTdParams {
    pub kappa: CoefFn,
    pub alpha: CoefFn,
    pub sigma: CoefFn,
    pub x0: f64,
}

impl fmt::Debug for OuTdParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OuTdParams").field("x0", &self.x0).finish_non_exhaustive()
    }
}

/// `dX = (αX - βX log X) dt + σX dW` on the positive half-line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthParams {
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    pub x0: f64,
}

/// Short-rate `r(t)` for geometric Brownian motion.
#[derive(Clone)]
pub enum Rate {
    Constant(f64),
    Function(CoefFn),
}

impl fmt::Debug for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rate::Constant(r) => write!(f, "Constant({r})"),
            Rate::Function(_) => write!(f, "Function(..)"),
        }
    }
}

impl Rate {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Rate::Constant(r) => *r,
            Rate::Function(f) => f(t),
        }
    }
}

/// `dX = r(t) X dt + σ X dW`.
#[derive(Debug, Clone)]
pub struct GbmParams {
    pub sigma: f64,
    pub rate: Rate,
    pub x0: f64,
}

/// A diffusion from one of the reducible families.
#[derive(Debug, Clone)]
pub enum DiffusionSpec {
    Ou(OuParams),
    OuTimeVarying(OuTdParams),
    Growth(GrowthParams),
    Gbm(GbmParams),
}

impl DiffusionSpec {
    pub fn family(&self) -> Family {
        match self {
            DiffusionSpec::Ou(_) => Family::Ou,
            DiffusionSpec::OuTimeVarying(_) => Family::OuTimeVarying,
            DiffusionSpec::Growth(_) => Family::Growth,
            DiffusionSpec::Gbm(_) => Family::Gbm,
        }
    }

    pub fn class(&self) -> ReducibleClass {
        match self {
            DiffusionSpec::Ou(_) | DiffusionSpec::OuTimeVarying(_) => ReducibleClass::L,
            DiffusionSpec::Growth(_) | DiffusionSpec::Gbm(_) => ReducibleClass::G,
        }
    }

    pub fn x0(&self) -> f64 {
        match self {
            DiffusionSpec::Ou(p) => p.x0,
            DiffusionSpec::OuTimeVarying(p) => p.x0,
            DiffusionSpec::Growth(p) => p.x0,
            DiffusionSpec::Gbm(p) => p.x0,
        }
    }

    /// SDE drift `μ(t, x)`.
    pub fn drift(&self, t: f64, x: f64) -> f64 {
        match self {
            DiffusionSpec::Ou(p) => p.kappa * (p.alpha - x),
            DiffusionSpec::OuTimeVarying(p) => (p.kappa)(t) * ((p.alpha)(t) - x),
            DiffusionSpec::Growth(p) => p.alpha * x - p.beta * x * x.ln(),
            DiffusionSpec::Gbm(p) => p.rate.at(t) * x,
        }
    }

    /// SDE diffusion coefficient `σ(t, x)`.
    pub fn diffusion(&self, t: f64, x: f64) -> f64 {
        match self {
            DiffusionSpec::Ou(p) => p.sigma,
            DiffusionSpec::OuTimeVarying(p) => (p.sigma)(t),
            DiffusionSpec::Growth(p) => p.sigma * x,
            DiffusionSpec::Gbm(p) => p.sigma * x,
        }
    }

    /// Checks the constant-parameter constraints of the family.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(BcpError::invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        let finite = |name: &str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(BcpError::invalid(format!("{name} must be finite, got {v}")))
            }
        };
        match self {
            DiffusionSpec::Ou(p) => {
                positive("kappa", p.kappa)?;
                positive("sigma", p.sigma)?;
                finite("alpha", p.alpha)?;
                finite("x0", p.x0)
            }
            DiffusionSpec::OuTimeVarying(p) => finite("x0", p.x0),
            DiffusionSpec::Growth(p) => {
                positive("alpha", p.alpha)?;
                positive("beta", p.beta)?;
                positive("sigma", p.sigma)?;
                positive("x0", p.x0)
            }
            DiffusionSpec::Gbm(p) => {
                positive("sigma", p.sigma)?;
                positive("x0", p.x0)?;
                if let Rate::Constant(r) = p.rate {
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(BcpError::invalid(format!(
                            "rate must be non-negative, got {r}"
                        )));
                    }
                }
                Ok(())
            }
        }
    }

    /// Reduces the crossing problem for `(a, b)` on `[0, horizon]` to Brownian motion.
    pub fn reduce(
        &self,
        a: &GeneralBoundary,
        b: &GeneralBoundary,
        horizon: f64,
    ) -> Result<ReducedProblem> {
        match self {
            DiffusionSpec::Ou(p) => reduce_ou(p, a, b, horizon),
            DiffusionSpec::OuTimeVarying(p) => reduce_ou_td(p, a, b, horizon),
            DiffusionSpec::Growth(p) => reduce_growth(p, a, b, horizon),
            DiffusionSpec::Gbm(p) => reduce_gbm(p, a, b, horizon),
        }
    }
}

/// Where a reduced problem came from.
#[derive(Debug, Clone)]
pub struct Provenance {
    pub family: Family,
    pub x0: f64,
    pub lower: GeneralBoundary,
    pub upper: GeneralBoundary,
    pub horizon: f64,
}

/// A Brownian-motion crossing problem equivalent to a diffusion problem.
#[derive(Clone)]
pub struct ReducedProblem {
    /// Transformed lower boundary `c(s)`.
    pub lower: GeneralBoundary,
    /// Transformed upper boundary `d(s)`.
    pub upper: GeneralBoundary,
    /// Transformed horizon `S = s(T)`.
    pub horizon: f64,
    time_map: CoefFn,
    clock: CoefFn,
    pub provenance: Option<Provenance>,
}

impl fmt::Debug for ReducedProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReducedProblem")
            .field("lower", &self.lower)
            .field("upper", &self.upper)
            .field("horizon", &self.horizon)
            .field("provenance", &self.provenance)
            .finish()
    }
}

impl ReducedProblem {
    pub fn new(
        lower: GeneralBoundary,
        upper: GeneralBoundary,
        horizon: f64,
        time_map: CoefFn,
        clock: CoefFn,
        provenance: Option<Provenance>,
    ) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(BcpError::NumericFailure(format!(
                "transformed horizon must be positive and finite, got {horizon}"
            )));
        }
        if lower.side() != Side::Lower || upper.side() != Side::Upper {
            return Err(BcpError::InvalidBoundaries("boundary sides swapped".into()));
        }
        Ok(ReducedProblem {
            lower,
            upper,
            horizon,
            time_map,
            clock,
            provenance,
        })
    }

    /// A Brownian-motion problem taken as is (identity clock).
    pub fn brownian(lower: GeneralBoundary, upper: GeneralBoundary) -> Result<Self> {
        let horizon = upper.horizon();
        let id: CoefFn = Arc::new(|t| t);
        Self::new(lower, upper, horizon, id.clone(), id, None)
    }

    /// Original time `t(s)`.
    pub fn time_at(&self, s: f64) -> f64 {
        (self.time_map)(s)
    }

    /// Transformed time `s(t)`.
    pub fn clock_at(&self, t: f64) -> f64 {
        (self.clock)(t)
    }

    /// Bracketed Monte Carlo estimate on `n` equal steps of `[0, S]`.
    pub fn estimate(&self, n: usize, envelope_samples: usize, cfg: &McConfig) -> Result<BcpEstimate> {
        let p = Partition::uniform(self.horizon, n)?;
        estimate_bcp_bracketed(&self.lower, &self.upper, &p, envelope_samples, cfg)
    }
}

/// Number of probe points used to check that `a < b` before reducing.
const ORDER_CHECK_POINTS: usize = 1000;

/// Checks `a(0) < x0 < b(0)` and `a < b` on a grid over `(0, T]`.
pub(crate) fn check_ordering(
    a: &GeneralBoundary,
    b: &GeneralBoundary,
    x0: f64,
    horizon: f64,
) -> Result<()> {
    if a.side() != Side::Lower || b.side() != Side::Upper {
        return Err(BcpError::InvalidBoundaries(
            "expected (lower, upper) boundaries".into(),
        ));
    }
    for g in [a, b] {
        if (g.horizon() - horizon).abs() > 1e-12 * horizon.max(1.0) {
            return Err(BcpError::invalid(format!(
                "boundary horizon {} differs from problem horizon {horizon}",
                g.horizon()
            )));
        }
    }
    let (a0, b0) = (a.eval(0.0)?, b.eval(0.0)?);
    if !(a0 < x0 && x0 < b0) {
        return Err(BcpError::InvalidBoundaries(format!(
            "start {x0} is not strictly between a(0) = {a0} and b(0) = {b0}"
        )));
    }
    if a.is_finite() && b.is_finite() {
        for k in 1..=ORDER_CHECK_POINTS {
            let t = horizon * k as f64 / ORDER_CHECK_POINTS as f64;
            let (at, bt) = (a.eval(t)?, b.eval(t)?);
            if !(at < bt) {
                return Err(BcpError::InvalidBoundaries(format!(
                    "a(t) = {at} is not below b(t) = {bt} at t = {t}"
                )));
            }
        }
    }
    Ok(())
}

/// Builds a transformed boundary `s -> map(t(s), g(t(s)))`, keeping infinite boundaries infinite.
pub(crate) fn map_boundary<M>(
    g: &GeneralBoundary,
    new_horizon: f64,
    time_map: CoefFn,
    map: M,
) -> Result<GeneralBoundary>
where
    M: Fn(f64, f64) -> f64 + Send + Sync + 'static,
{
    let side = g.side();
    match g.evaluator() {
        None => GeneralBoundary::infinite(side, new_horizon),
        Some(f) => {
            let f = f.clone();
            GeneralBoundary::new(side, new_horizon, move |s| {
                let t = time_map(s);
                map(t, f(t))
            })
        }
    }
}

/// For the positive-state families: is a finite lower boundary identically zero?
/// Any other non-positive finite value is rejected.
pub(crate) fn positive_boundary_kind(g: &GeneralBoundary, horizon: f64) -> Result<BoundaryKind> {
    if !g.is_finite() {
        return Ok(BoundaryKind::Infinite);
    }
    let mut zeros = 0;
    let count = ORDER_CHECK_POINTS + 1;
    for k in 0..count {
        let t = horizon * k as f64 / ORDER_CHECK_POINTS as f64;
        let v = g.eval(t)?;
        if v == 0.0 {
            zeros += 1;
        } else if v < 0.0 {
            return Err(BcpError::InvalidBoundaries(format!(
                "boundary value {v} at t = {t} is outside the positive state space"
            )));
        }
    }
    match zeros {
        0 => Ok(BoundaryKind::Positive),
        z if z == count && g.side() == Side::Lower => Ok(BoundaryKind::Zero),
        _ => Err(BcpError::InvalidBoundaries(
            "boundary touches 0 inside the positive state space".into(),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum BoundaryKind {
    Infinite,
    Zero,
    Positive,
}
