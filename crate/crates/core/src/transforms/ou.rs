use std::sync::Arc;

use super::{check_ordering, map_boundary, CoefFn, DiffusionSpec, Family, OuParams, Provenance, ReducedProblem};
use crate::boundary::GeneralBoundary;
use crate::error::Result;

/// Ornstein-Uhlenbeck reduction via `Y_t = e^{κt}(X_t - α)`.
///
/// `c(s) = α - x0 + (a(t(s)) - α) √(1 + 2κs/σ²)`, likewise `d`, with
/// `t(s) = log(1 + 2κs/σ²) / 2κ` and `S = σ²(e^{2κT} - 1) / 2κ`.
pub fn reduce_ou(
    p: &OuParams,
    a: &GeneralBoundary,
    b: &GeneralBoundary,
    horizon: f64,
) -> Result<ReducedProblem> {
    DiffusionSpec::Ou(*p).validate()?;
    check_ordering(a, b, p.x0, horizon)?;
    let OuParams {
        kappa,
        alpha,
        sigma,
        x0,
    } = *p;
    let var = sigma * sigma;
    let s_horizon = var * (2.0 * kappa * horizon).exp_m1() / (2.0 * kappa);
    let time_map: CoefFn = Arc::new(move |s: f64| (2.0 * kappa * s / var).ln_1p() / (2.0 * kappa));
    let clock: CoefFn = Arc::new(move |t: f64| var * (2.0 * kappa * t).exp_m1() / (2.0 * kappa));
    let map = move |t: f64, v: f64| alpha - x0 + (v - alpha) * (kappa * t).exp();
    let c = map_boundary(a, s_horizon, time_map.clone(), map)?;
    let d = map_boundary(b, s_horizon, time_map.clone(), map)?;
    ReducedProblem::new(
        c,
        d,
        s_horizon,
        time_map,
        clock,
        Some(Provenance {
            family: Family::Ou,
            x0,
            lower: a.clone(),
            upper: b.clone(),
            horizon,
        }),
    )
}
