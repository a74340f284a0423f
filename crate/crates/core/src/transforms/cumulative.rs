use std::sync::Arc;

use crate::error::{BcpError, Result};
use crate::quad::{adaptive_simpson, invert_increasing, DEFAULT_MAX_DEPTH};

type Integrand = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// `F(t) = ∫₀ᵗ f(u) du` on `[0, T]`, tabulated at cell edges and completed by
/// adaptive Simpson inside the cell.
#[derive(Clone)]
pub struct CumulativeIntegral {
    f: Integrand,
    edges: Vec<f64>,
    values: Vec<f64>,
    tol: f64,
}

impl CumulativeIntegral {
    pub const DEFAULT_CELLS: usize = 64;

    /// `tol` is the absolute tolerance for the whole table; each cell gets `tol / cells`.
    pub fn new(f: Integrand, horizon: f64, cells: usize, tol: f64) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) || cells == 0 {
            return Err(BcpError::invalid("cumulative integral needs T > 0 and cells ≥ 1"));
        }
        let edges: Vec<f64> = (0..=cells)
            .map(|k| if k == cells { horizon } else { horizon * k as f64 / cells as f64 })
            .collect();
        let cell_tol = tol / cells as f64;
        let mut values = Vec::with_capacity(cells + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for w in edges.windows(2) {
            acc += adaptive_simpson(|u| f(u), w[0], w[1], cell_tol, DEFAULT_MAX_DEPTH)?;
            values.push(acc);
        }
        Ok(CumulativeIntegral {
            f,
            edges,
            values,
            tol: cell_tol,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.edges[self.edges.len() - 1]
    }

    pub fn total(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    fn cell_of(&self, t: f64) -> usize {
        let k = self.edges.partition_point(|&e| e <= t);
        k.saturating_sub(1).min(self.edges.len() - 2)
    }

    /// `F(t)`; `t` may slightly overshoot `T`.
    pub fn value(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(0.0);
        }
        let k = self.cell_of(t);
        let start = self.edges[k];
        if t == start {
            return Ok(self.values[k]);
        }
        let f = &self.f;
        Ok(self.values[k] + adaptive_simpson(|u| f(u), start, t, self.tol, DEFAULT_MAX_DEPTH)?)
    }

    /// Solves `F(t) = target` for a positive integrand.
    pub fn invert(&self, target: f64, rel_tol: f64) -> Result<f64> {
        if target <= 0.0 {
            return Ok(0.0);
        }
        let total = self.total();
        if target >= total {
            if (target - total) <= 1e-12 * total.max(1.0) {
                return Ok(self.horizon());
            }
            return Err(BcpError::NumericFailure(format!(
                "clock value {target} beyond transformed horizon {total}"
            )));
        }
        let k = self.values.partition_point(|&v| v <= target).saturating_sub(1);
        let k = k.min(self.edges.len() - 2);
        let (lo, hi) = (self.edges[k], self.edges[k + 1]);
        let base = self.values[k];
        let f = &self.f;
        invert_increasing(
            |t| Ok(base + adaptive_simpson(|u| f(u), lo, t, self.tol, DEFAULT_MAX_DEPTH)?),
            target,
            lo,
            hi,
            rel_tol,
        )
    }
}
