//! Numeric check of the reducibility condition
//! `∂/∂x [σ_t/σ + σ ∂/∂x(σ_x/2 - μ/σ)] = 0` by central differences.

use crate::error::{BcpError, Result};

/// Rectangle `[t_min, t_max] × [x_min, x_max]` sampled on an `nt × nx` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducibilityGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub nt: usize,
    pub nx: usize,
    /// Difference step in `t`.
    pub ht: f64,
    /// Difference step in `x`.
    pub hx: f64,
    /// A point passes when `|residual| ≤ rel_tol · (1 + Σ|terms|)`.
    pub rel_tol: f64,
}

impl ReducibilityGrid {
    pub fn new(t_range: (f64, f64), x_range: (f64, f64)) -> Self {
        ReducibilityGrid {
            t_min: t_range.0,
            t_max: t_range.1,
            x_min: x_range.0,
            x_max: x_range.1,
            nt: 11,
            nx: 21,
            ht: 1e-3,
            hx: 1e-3,
            rel_tol: 1e-4,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = self.t_min.is_finite()
            && self.t_max.is_finite()
            && self.x_min.is_finite()
            && self.x_max.is_finite()
            && self.t_min <= self.t_max
            && self.x_min <= self.x_max
            && self.nt >= 1
            && self.nx >= 1
            && self.ht > 0.0
            && self.hx > 0.0
            && self.rel_tol > 0.0;
        if ok {
            Ok(())
        } else {
            Err(BcpError::invalid(format!("malformed reducibility grid {self:?}")))
        }
    }

    fn points(lo: f64, hi: f64, n: usize) -> impl Iterator<Item = f64> {
        (0..n).map(move |k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducibilityReport {
    /// Largest absolute residual on the grid.
    pub max_residual: f64,
    /// Where the largest residual relative to its tolerance occurred.
    pub worst_point: (f64, f64),
    pub reducible: bool,
}

struct Stencil<'a, F> {
    f: &'a F,
    ht: f64,
    hx: f64,
}

impl<F: Fn(f64, f64) -> f64> Stencil<'_, F> {
    fn at(&self, t: f64, x: f64) -> Result<f64> {
        let v = (self.f)(t, x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(BcpError::NumericFailure(format!("coefficient is {v} at (t, x) = ({t}, {x})")))
        }
    }

    /// `(f, f_t, f_x, f_xx, f_xxx, f_tx)` at `(t, x)`.
    fn derivatives(&self, t: f64, x: f64) -> Result<[f64; 6]> {
        let (ht, hx) = (self.ht, self.hx);
        let f0 = self.at(t, x)?;
        let (fp, fm) = (self.at(t, x + hx)?, self.at(t, x - hx)?);
        let (fp2, fm2) = (self.at(t, x + 2.0 * hx)?, self.at(t, x - 2.0 * hx)?);
        let f_t = (self.at(t + ht, x)? - self.at(t - ht, x)?) / (2.0 * ht);
        let f_x = (fp - fm) / (2.0 * hx);
        let f_xx = (fp - 2.0 * f0 + fm) / (hx * hx);
        let f_xxx = (fp2 - 2.0 * fp + 2.0 * fm - fm2) / (2.0 * hx * hx * hx);
        let f_tx = (self.at(t + ht, x + hx)? - self.at(t + ht, x - hx)? - self.at(t - ht, x + hx)?
            + self.at(t - ht, x - hx)?)
            / (4.0 * ht * hx);
        Ok([f0, f_t, f_x, f_xx, f_xxx, f_tx])
    }
}

/// Evaluates the reducibility residual for drift `mu` and diffusion `sigma` on a grid.
///
/// The residual is expanded as
/// `(σ_tx σ - σ_t σ_x)/σ² + (σ_x σ_xx + σ σ_xxx)/2 - μ_xx + (μ_x σ_x + μ σ_xx)/σ - μ σ_x²/σ²`.
pub fn check_reducibility<M, S>(mu: M, sigma: S, grid: &ReducibilityGrid) -> Result<ReducibilityReport>
where
    M: Fn(f64, f64) -> f64,
    S: Fn(f64, f64) -> f64,
{
    grid.validate()?;
    let ms = Stencil { f: &mu, ht: grid.ht, hx: grid.hx };
    let ss = Stencil { f: &sigma, ht: grid.ht, hx: grid.hx };
    let mut report = ReducibilityReport {
        max_residual: 0.0,
        worst_point: (grid.t_min, grid.x_min),
        reducible: true,
    };
    let mut worst_ratio = -1.0;
    for t in ReducibilityGrid::points(grid.t_min, grid.t_max, grid.nt) {
        for x in ReducibilityGrid::points(grid.x_min, grid.x_max, grid.nx) {
            for dx in [-2.0, -1.0, 0.0, 1.0, 2.0] {
                let xs = x + dx * grid.hx;
                let s = sigma(t, xs);
                if !(s > 0.0) {
                    return Err(BcpError::InvalidDomain(format!(
                        "sigma must be positive, got {s} at (t, x) = ({t}, {xs})"
                    )));
                }
            }
            let [m, _, m_x, m_xx, _, _] = ms.derivatives(t, x)?;
            let [s, s_t, s_x, s_xx, s_xxx, s_tx] = ss.derivatives(t, x)?;
            let terms = [
                s_tx / s,
                -s_t * s_x / (s * s),
                0.5 * s_x * s_xx,
                0.5 * s * s_xxx,
                -m_xx,
                m_x * s_x / s,
                m * s_xx / s,
                -m * s_x * s_x / (s * s),
            ];
            let residual: f64 = terms.iter().sum();
            let scale: f64 = terms.iter().map(|v| v.abs()).sum();
            let tol = grid.rel_tol * (1.0 + scale);
            report.max_residual = report.max_residual.max(residual.abs());
            let ratio = residual.abs() / tol;
            if ratio > worst_ratio {
                worst_ratio = ratio;
                report.worst_point = (t, x);
            }
            if residual.abs() > tol {
                report.reducible = false;
            }
        }
    }
    Ok(report)
}
